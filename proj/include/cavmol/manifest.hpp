#pragma once
// Run manifests: what was run, with which inputs, producing which files.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cavmol/errors.hpp"
#include "cavmol/params.hpp"

namespace cavmol {

inline constexpr const char* tool_version = "0.1.0";

/// 64-bit FNV-1a, printed as 16 hex digits.
inline std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct RunManifest {
  std::string subcommand;
  std::string preset;
  std::string config_hash;     // FNV-1a of the canonical config JSON
  nlohmann::json overrides = nlohmann::json::object();
  std::vector<std::string> outputs;
  double duration_s = 0.0;

  nlohmann::json to_json() const {
    return {{"tool", "cavmol"},
            {"tool_version", tool_version},
            {"subcommand", subcommand},
            {"preset", preset},
            {"config_hash", config_hash},
            {"overrides", overrides},
            {"outputs", outputs},
            {"duration_s", duration_s}};
  }
};

inline std::string config_hash(const Config& c) { return fnv1a_hex(cavmol::to_json(c).dump()); }

inline void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << m.to_json().dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace cavmol
