#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hsnas/json.hpp"
#include "hsnas/space.hpp"

namespace hsnas {

inline constexpr int kRecordsFormatVersion = 1;

struct RecordEfficiency {
  std::optional<double> gflops;
  std::optional<double> latency_ms;
  std::optional<double> size_millions;
};

/// An architecture with its measured (training-from-scratch) score.
struct EvalRecord {
  Architecture arch;
  double score = 0.0;
  std::optional<RecordEfficiency> efficiency;
};

struct EvalRecordFile {
  std::string metric = "BLEU";
  std::vector<EvalRecord> records;
};

/// JSONL: header {"format_version", "metric"} then one
/// {"arch": {...}, "score": x, "efficiency": {...}} per line. Every
/// architecture is validated against `space`; errors carry path:line.
EvalRecordFile load_eval_records(const SearchSpace& space, const std::filesystem::path& path);
void save_eval_records(const EvalRecordFile& file, const std::filesystem::path& path);

Json to_json(const EvalRecord& record);

/// Reads a JSON file; parse failures become InputError with the path.
Json read_json_file(const std::filesystem::path& path);

}  // namespace hsnas
