#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spotsgd/convergence.hpp"
#include "spotsgd/errors.hpp"
#include "spotsgd/runtime.hpp"

namespace spotsgd {

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ExitCode::usage, what) {}
};

/// Flat `key = value` file. `#` starts a comment; blank lines are skipped.
/// Keys: L, c, mu, mu_G, M, M_V, M_G, alpha, G0 and runtime.family,
/// runtime.rate, runtime.shift, runtime.fixed_time, runtime.overhead,
/// runtime.log_approximation. Unknown or repeated keys are rejected.
struct KeyValueConfig {
  std::map<std::string, std::string> entries;

  static KeyValueConfig parse(std::istream& in, const std::string& source = "<config>");
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return entries.count(key) > 0; }
  std::optional<double> number(const std::string& key) const;
  std::optional<std::string> text(const std::string& key) const;
};

const std::vector<std::string>& config_keys();

/// Overwrites the fields named in the config.
void apply_config(const KeyValueConfig& cfg, SgdConstants& k);
void apply_config(const KeyValueConfig& cfg, RuntimeModel& rt);

RuntimeFamily parse_runtime_family(const std::string& name);

/// SPOTSGD_SEED if set (decimal or 0x-hex), else `fallback`.
std::uint64_t default_seed(std::uint64_t fallback = 1);

}  // namespace spotsgd
