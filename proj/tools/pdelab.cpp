#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "pdelab/commands.hpp"
#include "pdelab/config.hpp"
#include "pdelab/errors.hpp"

namespace {

bool deterministic_from_env() {
  const char* v = std::getenv("PDELAB_DETERMINISTIC");
  return v != nullptr && std::string(v) != "" && std::string(v) != "0";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diffusion-layer laboratory: spectra, stability, gradient flows, toy transformers and benchmarks.\n"
               "Every subcommand writes a CSV (first line '# config: ...') and a .txt summary.\n"
               "Set PDELAB_DETERMINISTIC=1 for single-threaded, byte-reproducible output."};
  app.require_subcommand(0, 1);

  std::string config_file;
  int jobs = 1;
  app.add_option("--config", config_file, "key=value file; must contain subcommand=<name>");
  app.add_option("--jobs", jobs, "worker threads for independent trials")->check(CLI::PositiveNumber);

  std::map<std::string, std::map<std::string, std::string>> given;
  for (const auto& name : pdelab::subcommand_names()) {
    auto* sub = app.add_subcommand(name);
    auto& values = given[name];
    for (const auto& key : pdelab::config_schema(name)) {
      sub->add_option_function<std::string>(
             "--" + key.name, [&values, k = key.name](const std::string& v) { values[k] = v; }, key.help)
          ->default_str(key.default_value);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return pdelab::kExitConfig;
  }

  pdelab::ExperimentConfig config;
  try {
    std::string sub;
    if (!app.get_subcommands().empty()) sub = app.get_subcommands().front()->get_name();
    if (!config_file.empty()) {
      std::ifstream f(config_file);
      if (!f) throw pdelab::ConfigError("cannot read config file '" + config_file + "'");
      std::stringstream buf;
      buf << f.rdbuf();
      config = pdelab::ExperimentConfig::parse_file(buf.str());
      if (!sub.empty() && sub != config.subcommand())
        throw pdelab::ConfigError("subcommand '" + sub + "' conflicts with '" + config.subcommand() + "' in " + config_file);
      auto merged = config.values();
      for (const auto& [k, v] : given[config.subcommand()]) merged[k] = v;
      config = pdelab::ExperimentConfig::make(config.subcommand(), merged);
    } else if (!sub.empty()) {
      config = pdelab::ExperimentConfig::make(sub, given[sub]);
    } else {
      std::cerr << app.help();
      return pdelab::kExitConfig;
    }
  } catch (const pdelab::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return pdelab::kExitConfig;
  }

  pdelab::RunOptions options;
  options.deterministic = deterministic_from_env();
  options.jobs = options.deterministic ? 1 : jobs;
  options.log = &std::cout;
  return pdelab::run(config, options);
}
