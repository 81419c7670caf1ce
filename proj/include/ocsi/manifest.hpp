#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ocsi {

inline constexpr const char* kToolVersion = "0.3.0";

std::string sha256_hex(const std::filesystem::path& path);

struct RunManifest {
  std::string tool_version = kToolVersion;
  std::string subcommand;
  std::map<std::string, std::string> flags;
  std::map<std::string, std::string> inputs;   // path -> sha256
  std::map<std::string, std::string> outputs;  // path -> sha256
  std::optional<std::uint64_t> seed;
  double duration_seconds = 0.0;

  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);

  std::string to_json() const;
};

void save_manifest(const RunManifest& manifest, const std::filesystem::path& path);

}  // namespace ocsi
