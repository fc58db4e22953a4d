#include "hsnas/records.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "hsnas/error.hpp"

namespace hsnas {

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open {}", path.string()));
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InputError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

Json to_json(const EvalRecord& record) {
  Json j{{"arch", to_json(record.arch)}, {"score", record.score}};
  if (record.efficiency) {
    Json e = Json::object();
    if (record.efficiency->gflops) e["gflops"] = *record.efficiency->gflops;
    if (record.efficiency->latency_ms) e["latency_ms"] = *record.efficiency->latency_ms;
    if (record.efficiency->size_millions) e["size_millions"] = *record.efficiency->size_millions;
    j["efficiency"] = std::move(e);
  }
  return j;
}

EvalRecordFile load_eval_records(const SearchSpace& space, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open {}", path.string()));
  EvalRecordFile file;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = fmt::format("{}:{}", path.string(), line_no);
    try {
      const Json j = Json::parse(line);
      if (j.contains("format_version")) {
        if (j.at("format_version").get<int>() != kRecordsFormatVersion) {
          throw InputError(fmt::format("{}: unsupported format_version {}", where,
                                       j.at("format_version").dump()));
        }
        file.metric = j.value("metric", file.metric);
        continue;
      }
      EvalRecord r;
      r.arch = architecture_from_json(space, j.at("arch"));
      if (auto v = validate(space, r.arch); !v.empty()) {
        throw InputError(fmt::format("{}: invalid architecture: {} {}", where, v.front().attribute,
                                     v.front().message));
      }
      r.score = j.at("score").get<double>();
      if (!std::isfinite(r.score)) throw InputError(fmt::format("{}: score is not finite", where));
      if (auto it = j.find("efficiency"); it != j.end() && it->is_object()) {
        RecordEfficiency e;
        if (it->contains("gflops")) e.gflops = it->at("gflops").get<double>();
        if (it->contains("latency_ms")) e.latency_ms = it->at("latency_ms").get<double>();
        if (it->contains("size_millions")) e.size_millions = it->at("size_millions").get<double>();
        r.efficiency = e;
      }
      file.records.push_back(std::move(r));
    } catch (const Json::exception& e) {
      throw InputError(fmt::format("{}: {}", where, e.what()));
    } catch (const PreconditionError& e) {
      throw InputError(fmt::format("{}: {}", where, e.what()));
    }
  }
  return file;
}

void save_eval_records(const EvalRecordFile& file, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError(fmt::format("cannot write {}", path.string()));
  out << Json{{"format_version", kRecordsFormatVersion}, {"metric", file.metric}}.dump() << '\n';
  for (const auto& r : file.records) out << to_json(r).dump() << '\n';
}

}  // namespace hsnas
