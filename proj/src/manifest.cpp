#include "hsnas/manifest.hpp"

#include <ctime>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "hsnas/error.hpp"
#include "hsnas/llm.hpp"

namespace hsnas {

RunManifest::RunManifest(std::string command, std::uint64_t seed)
    : command_(std::move(command)), seed_(seed), started_at_(utc_timestamp()) {}

void RunManifest::set_config(const Json& config) { config_digest_ = sha256_hex(config.dump()); }

void RunManifest::add_input(const std::filesystem::path& path) {
  Json digest = nullptr;
  if (std::filesystem::is_regular_file(path)) digest = file_sha256(path);
  inputs_.push_back({{"path", path.string()}, {"sha256", std::move(digest)}});
}

void RunManifest::add_output(const std::filesystem::path& path) { outputs_.push_back(path.string()); }

void RunManifest::set_extra(const std::string& key, Json value) { extra_[key] = std::move(value); }

Json RunManifest::to_json() const {
  return Json{{"format_version", kManifestFormatVersion},
              {"command", command_},
              {"tool_version", HSNAS_VERSION},
              {"seed", seed_},
              {"config_digest", config_digest_.empty() ? Json(nullptr) : Json(config_digest_)},
              {"inputs", inputs_},
              {"outputs", outputs_},
              {"started_at", started_at_},
              {"finished_at", finished_at_.empty() ? Json(nullptr) : Json(finished_at_)},
              {"extra", extra_}};
}

void RunManifest::write(const std::filesystem::path& path) {
  finished_at_ = utc_timestamp();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError(fmt::format("cannot write manifest {}", path.string()));
  out << to_json().dump(2) << '\n';
}

std::string file_sha256(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot open {}", path.string()));
  std::ostringstream bytes;
  bytes << in.rdbuf();
  return sha256_hex(bytes.str());
}

std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace hsnas
