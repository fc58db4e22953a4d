#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hsnas/json.hpp"

namespace hsnas {

inline constexpr int kManifestFormatVersion = 1;

/// Provenance record written next to every command output. Timestamps and
/// wall times live here only, never in the primary outputs.
class RunManifest {
 public:
  RunManifest(std::string command, std::uint64_t seed);

  void set_config(const Json& config);
  /// Missing files are recorded with a null digest.
  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);
  void set_extra(const std::string& key, Json value);

  Json to_json() const;
  /// Stamps finished_at and writes the JSON.
  void write(const std::filesystem::path& path);

 private:
  std::string command_;
  std::uint64_t seed_;
  std::string config_digest_;
  Json inputs_ = Json::array();
  Json outputs_ = Json::array();
  Json extra_ = Json::object();
  std::string started_at_;
  std::string finished_at_;
};

/// SHA-256 of a file's bytes.
std::string file_sha256(const std::filesystem::path& path);

/// "2026-01-31T12:00:00Z"
std::string utc_timestamp(std::chrono::system_clock::time_point t = std::chrono::system_clock::now());

}  // namespace hsnas
