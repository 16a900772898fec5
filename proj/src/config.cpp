#include "spotsgd/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>

namespace spotsgd {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_number(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + value + "' is not a number");
  }
  if (used != value.size()) throw ConfigError("config key '" + key + "': trailing characters in '" + value + "'");
  return v;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "L",  "c",  "mu", "mu_G", "M", "M_V", "M_G", "alpha", "G0",
      "runtime.family", "runtime.rate", "runtime.shift", "runtime.fixed_time", "runtime.overhead",
      "runtime.log_approximation"};
  return keys;
}

KeyValueConfig KeyValueConfig::parse(std::istream& in, const std::string& source) {
  const auto& known = config_keys();
  KeyValueConfig cfg;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(number);
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
    if (value.empty()) throw ConfigError(where + ": empty value for '" + key + "'");
    if (!cfg.entries.emplace(key, value).second) throw ConfigError(where + ": repeated key '" + key + "'");
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse(in, path.string());
}

std::optional<double> KeyValueConfig::number(const std::string& key) const {
  const auto it = entries.find(key);
  if (it == entries.end()) return std::nullopt;
  return to_number(key, it->second);
}

std::optional<std::string> KeyValueConfig::text(const std::string& key) const {
  const auto it = entries.find(key);
  if (it == entries.end()) return std::nullopt;
  return it->second;
}

void apply_config(const KeyValueConfig& cfg, SgdConstants& k) {
  const std::pair<const char*, double*> fields[] = {{"L", &k.L},     {"c", &k.c},         {"mu", &k.mu},
                                                    {"mu_G", &k.mu_G}, {"M", &k.M},       {"M_V", &k.M_V},
                                                    {"M_G", &k.M_G}, {"alpha", &k.alpha}, {"G0", &k.G0}};
  for (const auto& [key, field] : fields) {
    if (auto v = cfg.number(key)) *field = *v;
  }
}

RuntimeFamily parse_runtime_family(const std::string& name) {
  if (name == "exponential") return RuntimeFamily::exponential;
  if (name == "shifted-exponential" || name == "shifted") return RuntimeFamily::shifted_exponential;
  if (name == "deterministic") return RuntimeFamily::deterministic;
  throw ConfigError("unknown runtime family '" + name + "'");
}

void apply_config(const KeyValueConfig& cfg, RuntimeModel& rt) {
  if (auto v = cfg.text("runtime.family")) rt.family = parse_runtime_family(*v);
  if (auto v = cfg.number("runtime.rate")) rt.rate = *v;
  if (auto v = cfg.number("runtime.shift")) rt.shift = *v;
  if (auto v = cfg.number("runtime.fixed_time")) rt.fixed_time = *v;
  if (auto v = cfg.number("runtime.overhead")) rt.server_overhead = *v;
  if (auto v = cfg.text("runtime.log_approximation")) {
    if (*v == "true" || *v == "1") {
      rt.log_approximation = true;
    } else if (*v == "false" || *v == "0") {
      rt.log_approximation = false;
    } else {
      throw ConfigError("runtime.log_approximation must be true or false");
    }
  }
}

std::uint64_t default_seed(std::uint64_t fallback) {
  const char* env = std::getenv("SPOTSGD_SEED");
  if (!env || !*env) return fallback;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 0);
  if (end == env || *end != '\0') throw ConfigError(std::string("SPOTSGD_SEED is not an integer: ") + env);
  return v;
}

}  // namespace spotsgd
