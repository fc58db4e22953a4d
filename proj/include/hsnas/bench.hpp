#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hsnas/efficiency.hpp"
#include "hsnas/json.hpp"
#include "hsnas/metrics.hpp"
#include "hsnas/predictor.hpp"
#include "hsnas/records.hpp"
#include "hsnas/search.hpp"
#include "hsnas/space.hpp"

namespace hsnas {

/// The HAT attribute set cut down to an enumerable size:
///
///   encoder embed {512, 640}, encoder layers {2}, encoder FFN {1024, 2048},
///   encoder heads {4}, decoder embed {512, 640}, decoder layers {1, 2, 3},
///   decoder FFN {1024, 2048}, decoder self heads {4, 8}, cross heads {4, 8},
///   arbitrary attention {-1}, qkv dims {512}.
///
/// Cardinality 2 * 2 * 2^2 * (8 + 8^2 + 8^3) = 9344.
SearchSpace tiny_bench_space();

/// Synthetic "BLEU-like" score over the encoding x. With
///
///   u0 = (x0 - 512) / 128    u1 = (x1 - 1) / 5    u2 = (x2 - 1024) / 2048
///   u3 = (x3 - 4) / 4        u4 = (x4 - 512) / 128 u5 = (x5 - 1) / 5
///   u6 = (x6 - 1024) / 2048  u7 = (x7 - 4) / 4    u8 = (x8 - 4) / 4
///   u9 = (x9 + 1) / 3
///
///   gold = 24 + 0.9 u0 + 0.4 u1 + 0.8 u2 + 0.3 u3 + 1.0 u4 + 2.0 u5
///             + 1.5 u6 + 0.4 u7 + 0.5 u8 - 0.3 u9 + 1.2 u5 u6
///             + 0.3 sin(2 pi (1.3 u5 + 0.7 u6 + 0.9 u0))
///
/// The constants live in bench.cpp; changing them changes every bench number.
double bench_gold(const SearchSpace& space, const Architecture& arch);

/// latency_ms = 40 + 30 * decoder_layers * mean_decoder_ffn / 1000, which
/// spans 70.7 to 224.3 ms over the tiny space.
AnalyticLatency bench_latency();

struct SyntheticTask {
  SearchSpace space;
  ScoreFunction gold;
  LatencyModel latency;
  std::uint64_t seed = 0;

  double latency_ms(const Architecture& arch) const;
  /// Latency constraint model with a full efficiency report.
  ConstraintModel constraint_model(ConstraintMetric metric = ConstraintMetric::Latency) const;
};

SyntheticTask make_bench_task(std::uint64_t seed = 0);

/// `n` distinct sampled architectures scored by the gold function.
std::vector<EvalRecord> gold_eval_set(const SyntheticTask& task, std::size_t n, std::uint64_t seed);

struct SeedReport {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double mae = 0.0;
  std::optional<double> kendall_tau;
  DiscordanceProfile discordance;
};

struct PredictorReport {
  std::string predictor;
  std::string eval_set;
  std::vector<SeedReport> seeds;
  std::optional<double> mean_mae;
  std::optional<double> mean_kendall_tau;
};

Json to_json(const PredictorReport& report);

using PredictorFactory = std::function<std::unique_ptr<Predictor>(std::uint64_t seed)>;

/// Builds a predictor per seed, predicts the whole eval set and scores it.
/// A seed whose predictor throws is marked failed; means cover the rest.
PredictorReport evaluate_predictor(const PredictorFactory& factory,
                                   const std::vector<EvalRecord>& eval_set,
                                   const std::vector<std::uint64_t>& seeds,
                                   std::string eval_set_name = "eval");

/// Exhaustive constrained argmax of gold; ties go to the smaller canonical
/// string. InfeasibleError when nothing meets the latency threshold.
ScoredArchitecture brute_force_optimum(const SyntheticTask& task, double latency_threshold_ms,
                                       std::uint64_t cap = 1'000'000);

/// The six predictor windows compared against the single-predictor baseline.
std::vector<std::pair<int, int>> standard_windows();

struct SweepEntry {
  std::string label;
  SearchConfig config;
  const Predictor* predictor_a = nullptr;
  const Predictor* predictor_b = nullptr;
};

struct SweepRow {
  std::string label;
  std::string predictor_a;
  std::string predictor_b;
  SearchConfig config;
  bool ok = false;
  std::string error;
  Architecture best_arch;
  double score = 0.0;
  double predicted_score = 0.0;
  double latency_ms = 0.0;
  double gflops = 0.0;
  double size_millions = 0.0;
  double search_seconds = 0.0;
};

/// Baseline (predictor B throughout) followed by one entry per standard
/// window, all sharing `base`.
std::vector<SweepEntry> window_sweep(const SearchConfig& base, const Predictor& predictor_a,
                                     const Predictor& predictor_b);

/// Runs every entry in order. A failing entry yields a row with ok=false
/// and the sweep continues.
std::vector<SweepRow> sweep(const std::vector<SweepEntry>& entries, const SyntheticTask& task);

/// label, predictor_a, predictor_b, llm_start, llm_end, constraint_metric,
/// threshold, seed, status, score, predicted_score, latency_ms, gflops,
/// size_millions, search_seconds
std::string sweep_csv(const std::vector<SweepRow>& rows);
Json sweep_json(const std::vector<SweepRow>& rows);

}  // namespace hsnas
