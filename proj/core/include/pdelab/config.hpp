#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace pdelab {

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string help;
};

/// Subcommand names in the order they are listed by --help.
const std::vector<std::string>& subcommand_names();

/// Documented keys of a subcommand, including the shared ones (seed, out).
/// Throws ConfigError for an unknown subcommand.
const std::vector<ConfigKey>& config_schema(const std::string& subcommand);

/// A fully resolved run description: every documented key of the
/// subcommand has a value. Values never contain whitespace.
class ExperimentConfig {
 public:
  ExperimentConfig() = default;

  /// Defaults for `subcommand` overridden by `values`. Throws ConfigError
  /// naming the first unknown key or invalid value.
  static ExperimentConfig make(const std::string& subcommand, const std::map<std::string, std::string>& values = {});

  /// "key=value" lines; blank lines and lines starting with '#' are
  /// skipped. A `subcommand` key is required.
  static ExperimentConfig parse_file(const std::string& text);

  /// Inverse of header().
  static ExperimentConfig parse_header(const std::string& line);

  const std::string& subcommand() const { return subcommand_; }
  const std::map<std::string, std::string>& values() const { return values_; }

  const std::string& get(const std::string& key) const;
  long get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key) const;

  /// "# config: subcommand=<name> k1=v1 k2=v2 ..." with keys sorted.
  std::string header() const;

  /// Summary path derived from `out` (extension replaced by .txt).
  std::string summary_path() const;

  bool operator==(const ExperimentConfig&) const = default;

 private:
  std::string subcommand_;
  std::map<std::string, std::string> values_;
};

}  // namespace pdelab
