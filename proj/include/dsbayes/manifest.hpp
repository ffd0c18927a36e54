#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dsbayes {

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

struct FileDigest {
  std::string path;
  std::string sha256;
};

/// Record of one command invocation. Replaying `argv` with the same inputs
/// reproduces the listed artifacts.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  /// Resolved option values as a JSON object.
  std::string config_json = "{}";
  std::vector<FileDigest> inputs;
  std::optional<std::uint64_t> seed;
  std::vector<FileDigest> artifacts;
  std::string started_at;
  std::string finished_at;

  void add_input(const std::filesystem::path& path);
  void add_artifact(const std::filesystem::path& path);

  std::string to_json() const;
  static RunManifest from_json(const std::string& text);
};

/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

/// Writes the manifest into `directory` under a fresh name; an existing
/// manifest is never overwritten. Returns the path written.
std::filesystem::path write_manifest(const RunManifest& manifest,
                                     const std::filesystem::path& directory);

}  // namespace dsbayes
