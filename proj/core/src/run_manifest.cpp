#include "lsld/run_manifest.hpp"

#include <fstream>

#include <json.hpp>

#include "lsld/error.hpp"

namespace lsld {

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + tmp.string());
    out << contents;
    if (!out) throw FormatError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw FormatError("cannot rename " + tmp.string() + ": " + ec.message());
}

void write_run_manifest(const std::filesystem::path& path, const RunManifest& m) {
  nlohmann::json j{{"subcommand", m.subcommand},
                   {"settings", m.settings},
                   {"seeds", m.seeds},
                   {"inputs", m.inputs},
                   {"outputs", m.outputs},
                   {"tool_version", m.tool_version},
                   {"wall_seconds", m.wall_seconds}};
  write_file_atomic(path, j.dump(2) + "\n");
}

RunManifest read_run_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    RunManifest m;
    m.subcommand = j.at("subcommand");
    m.settings = j.at("settings").get<std::map<std::string, std::string>>();
    m.seeds = j.at("seeds").get<std::map<std::string, std::uint64_t>>();
    m.inputs = j.at("inputs").get<std::vector<std::string>>();
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    m.tool_version = j.at("tool_version");
    m.wall_seconds = j.at("wall_seconds");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace lsld
