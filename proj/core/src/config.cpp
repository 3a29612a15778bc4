#include "pdelab/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

#include "pdelab/errors.hpp"

namespace pdelab {

namespace {

std::vector<ConfigKey> with_common(const std::string& sub, std::vector<ConfigKey> keys) {
  keys.push_back({"seed", "0", "random seed"});
  keys.push_back({"out", sub + ".csv", "CSV output path (summary goes next to it as .txt)"});
  std::sort(keys.begin(), keys.end(), [](const ConfigKey& a, const ConfigKey& b) { return a.name < b.name; });
  return keys;
}

std::vector<ConfigKey> model_keys(std::vector<ConfigKey> keys) {
  const std::vector<ConfigKey> shared = {
      {"task", "listops-mini", "listops-mini or denoise-1d"},
      {"train_size", "10000", "training examples"},
      {"val_size", "1000", "validation examples"},
      {"max_len", "64", "maximum sequence length"},
      {"max_depth", "3", "listops nesting depth"},
      {"dim", "64", "model width"},
      {"layers", "2", "transformer blocks"},
      {"heads", "4", "attention heads"},
      {"mlp_hidden", "0", "MLP hidden width (0 = 4 x dim)"},
      {"dropout", "0.1", "dropout probability"},
      {"scales", "1,2,4", "diffusion scales"},
      {"alpha_init", "0.1", "initial diffusion coefficient"},
      {"post_norm", "false", "normalise after each diffusion pass"},
      {"boundary", "neumann-reflect", "neumann-reflect or replicate-clamp"},
      {"tied", "false", "share coefficients across channels"},
      {"epochs", "20", "training epochs"},
      {"batch", "32", "minibatch size"},
      {"lr", "0.05", "learning rate"},
      {"momentum", "0.9", "momentum"},
      {"clip", "1.0", "gradient clipping norm"},
      {"warmup", "0", "linear warmup steps"},
      {"cosine", "false", "cosine learning-rate decay"},
      {"freeze_pde", "false", "keep diffusion parameters fixed"},
      {"train_limit", "0", "use only the first N training examples (0 = all)"},
      {"target_acc", "0", "stop once validation accuracy reaches this (0 = off)"},
  };
  keys.insert(keys.end(), shared.begin(), shared.end());
  return keys;
}

std::map<std::string, std::vector<ConfigKey>> build_schemas() {
  std::map<std::string, std::vector<ConfigKey>> s;
  s["spectrum"] = with_common("spectrum", {{"L", "8", "lattice length"}});
  s["stability"] = with_common("stability", {
      {"L", "32", "lattice length"},
      {"d", "4", "channels"},
      {"fields", "100", "random fields at the stable coefficient"},
      {"steps", "1000", "steps per random field"},
      {"alpha", "0.49", "stable coefficient"},
      {"alpha_unstable", "0.51", "coefficient for the highest cosine mode"},
      {"unstable_steps", "10", "steps for the unstable run"},
      {"scale", "1", "stencil scale"},
      {"boundary", "neumann-reflect", "neumann-reflect or replicate-clamp"},
  });
  s["heatkernel"] = with_common("heatkernel", {
      {"L", "64", "lattice length"},
      {"t", "1,4,16", "diffusion times"},
      {"gaussian_L", "256", "lattice length for the envelope fit"},
      {"gaussian_t", "32", "time for the envelope fit"},
  });
  s["fitscales"] = with_common("fitscales", {
      {"max_scale", "8", "largest scale of the ladder {1}, {1,2}, ..."},
      {"omega_max", "1.5707963267949", "upper end of the fitted band"},
      {"grid", "512", "grid points"},
  });
  s["flow"] = with_common("flow", {
      {"L", "64", "lattice length"},
      {"d", "1", "channels"},
      {"alpha", "0.2", "diffusion coefficient"},
      {"potential", "quadratic", "none, quadratic, anchored or double-well"},
      {"mu", "1", "potential curvature"},
      {"lambda", "0.5", "anchor strength (anchored, double-well)"},
      {"beta", "0", "nonlocal coupling strength (Gaussian kernel)"},
      {"kernel_width", "2", "Gaussian kernel width"},
      {"dt", "0.05", "time step"},
      {"steps", "400", "steps"},
  });
  s["sync"] = with_common("sync", {
      {"heads", "4", "number of coupled heads"},
      {"topology", "ring", "ring or pairs"},
      {"L", "8", "lattice length"},
      {"d", "2", "channels"},
      {"alpha", "0.1", "per-head diffusion coefficient"},
      {"beta", "0.2", "coupling strength"},
      {"dt", "1", "time step"},
      {"steps", "200", "steps"},
      {"offset", "1", "mean offset between the two halves of the heads"},
  });
  s["gradcheck"] = with_common("gradcheck", {
      {"L", "16", "lattice length"},
      {"d", "4", "channels"},
      {"trials", "20", "random cases"},
      {"scales", "1,2,4", "diffusion scales"},
      {"post_norm", "false", "include the normalisation"},
      {"tol", "1e-5", "maximum relative error"},
  });
  s["train"] = with_common("train", model_keys({{"position", "none", "diffusion integration position"}}));
  s["rank-positions"] = with_common("rank-positions", model_keys({
      {"seeds", "3", "number of seeds (seed, seed+1, ...)"},
      {"positions", "all", "comma list of positions or 'all'"},
      {"identity", "false", "pin coefficients at the alpha -> 0 limit and freeze them"},
  }));
  s["retention"] = with_common("retention", {
      {"depth", "4", "chain depth"},
      {"trials", "5000", "chains per depth"},
      {"bins", "16", "histogram bins"},
      {"length", "16", "field length"},
      {"flip", "0.1", "per-step flip probability"},
      {"projections", "16", "random scalar projections"},
      {"alpha", "0.1", "smoothing coefficient"},
      {"scales", "1,2,4", "smoothing scales"},
      {"repetitions", "1", "independent repetitions"},
      {"min_fraction", "0.9", "required share of repetitions with non-positive rank correlation"},
  });
  s["bench-complexity"] = with_common("bench-complexity", {
      {"L_grid", "256,512,1024,2048,4096,8192", "diffusion lengths"},
      {"attention_grid", "256,512,1024,2048,4096", "attention lengths"},
      {"d", "64", "channels"},
      {"K", "3", "scales (1, 2, 4, ...)"},
      {"k_length", "2048", "length for the K-doubling ratio"},
      {"reps", "7", "repetitions per point"},
  });
  return s;
}

const std::map<std::string, std::vector<ConfigKey>>& schemas() {
  static const auto s = build_schemas();
  return s;
}

bool has_space(const std::string& v) {
  return std::any_of(v.begin(), v.end(), [](unsigned char c) { return std::isspace(c); });
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names = {"spectrum", "stability", "heatkernel", "fitscales",
                                                 "flow",     "sync",      "gradcheck",  "train",
                                                 "rank-positions", "retention", "bench-complexity"};
  return names;
}

const std::vector<ConfigKey>& config_schema(const std::string& subcommand) {
  const auto it = schemas().find(subcommand);
  if (it == schemas().end()) throw ConfigError("unknown subcommand '" + subcommand + "'");
  return it->second;
}

ExperimentConfig ExperimentConfig::make(const std::string& subcommand,
                                        const std::map<std::string, std::string>& values) {
  const auto& schema = config_schema(subcommand);
  ExperimentConfig cfg;
  cfg.subcommand_ = subcommand;
  for (const auto& key : schema) cfg.values_[key.name] = key.default_value;
  for (const auto& [k, v] : values) {
    if (!cfg.values_.count(k)) throw ConfigError("unknown key '" + k + "' for subcommand " + subcommand);
    if (v.empty() || has_space(v)) throw ConfigError("key '" + k + "' needs a non-empty value without spaces");
    cfg.values_[k] = v;
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::map<std::string, std::string> values;
  std::string sub;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (values.count(key) || (key == "subcommand" && !sub.empty()))
      throw ConfigError("key '" + key + "' given twice");
    if (key == "subcommand")
      sub = value;
    else
      values[key] = value;
  }
  if (sub.empty()) throw ConfigError("config file has no 'subcommand' key");
  return make(sub, values);
}

ExperimentConfig ExperimentConfig::parse_header(const std::string& line) {
  const std::string prefix = "# config:";
  if (line.rfind(prefix, 0) != 0) throw ConfigError("not a config header: '" + line + "'");
  std::istringstream in(line.substr(prefix.size()));
  std::string tok;
  std::string sub;
  std::map<std::string, std::string> values;
  while (in >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw ConfigError("malformed header entry '" + tok + "'");
    const std::string key = tok.substr(0, eq);
    if (key == "subcommand")
      sub = tok.substr(eq + 1);
    else
      values[key] = tok.substr(eq + 1);
  }
  if (sub.empty()) throw ConfigError("header has no subcommand");
  return make(sub, values);
}

const std::string& ExperimentConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown key '" + key + "' for subcommand " + subcommand_);
  return it->second;
}

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError("key '" + key + "': cannot parse '" + text + "'");
  return value;
}

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) out.push_back(item);
  return out;
}

}  // namespace

long ExperimentConfig::get_int(const std::string& key) const { return parse_number<long>(key, get(key)); }

std::uint64_t ExperimentConfig::get_u64(const std::string& key) const {
  return parse_number<std::uint64_t>(key, get(key));
}

double ExperimentConfig::get_double(const std::string& key) const {
  return parse_number<double>(key, get(key));
}

bool ExperimentConfig::get_bool(const std::string& key) const {
  const auto& v = get(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("key '" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<int> ExperimentConfig::get_int_list(const std::string& key) const {
  std::vector<int> out;
  for (const auto& item : split(get(key))) out.push_back(parse_number<int>(key, item));
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

std::vector<double> ExperimentConfig::get_double_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split(get(key))) out.push_back(parse_number<double>(key, item));
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

std::string ExperimentConfig::header() const {
  std::string out = "# config: subcommand=" + subcommand_;
  for (const auto& [k, v] : values_) out += " " + k + "=" + v;
  return out;
}

std::string ExperimentConfig::summary_path() const {
  std::string out = get("out");
  const auto slash = out.find_last_of('/');
  const auto dot = out.find_last_of('.');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) out.resize(dot);
  return out + ".txt";
}

}  // namespace pdelab
