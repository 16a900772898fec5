#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "spotsgd/serialize.hpp"

namespace spotsgd::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

struct RunManifest {
  std::string command;
  Json config = Json::object();  // fully resolved parameters
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;

  Json to_json() const;
  /// Written atomically (temp file + rename).
  void write(const std::filesystem::path& path) const;
};

}  // namespace spotsgd::cli
