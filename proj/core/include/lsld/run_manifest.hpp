#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace lsld {

/// Provenance record written next to every output.
struct RunManifest {
  std::string subcommand;
  /// Fully resolved settings, rendered as strings.
  std::map<std::string, std::string> settings;
  std::map<std::string, std::uint64_t> seeds;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string tool_version = LSLD_VERSION;
  double wall_seconds = 0.0;
};

/// Writes `path` through a temporary file and a rename.
void write_run_manifest(const std::filesystem::path& path, const RunManifest& manifest);
RunManifest read_run_manifest(const std::filesystem::path& path);

/// Writes `contents` to `path` through a temporary sibling and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace lsld
