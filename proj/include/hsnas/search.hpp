#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hsnas/json.hpp"
#include "hsnas/predictor.hpp"
#include "hsnas/space.hpp"

namespace hsnas {

inline constexpr int kTraceFormatVersion = 1;

enum class ConstraintMetric { Latency, Gflops };

std::string_view constraint_metric_name(ConstraintMetric m) noexcept;

struct Constraint {
  ConstraintMetric metric = ConstraintMetric::Latency;
  double threshold = 200.0;
};

struct SearchConfig {
  int num_iterations = 30;
  int population_size = 125;
  int num_parents = 25;
  int num_mutations = 50;
  int num_crossover = 50;
  double mutate_prob = 0.3;
  Constraint constraint;
  // Predictor A scores iterations llm_start..llm_end (inclusive, 1-based);
  // (0, 0) is the empty window.
  int llm_start_iteration = 1;
  int llm_end_iteration = 15;
  bool retry_until_quota = false;
  bool filter_init_population = false;
  bool dedup_population = false;
  std::uint64_t seed = 0;

  bool window_empty() const noexcept { return llm_start_iteration == 0 && llm_end_iteration == 0; }
  bool uses_predictor_a(int iteration) const noexcept {
    return !window_empty() && llm_start_iteration <= iteration && iteration <= llm_end_iteration;
  }

  /// Throws ConfigError.
  void validate() const;
  Json to_json() const;
  static SearchConfig from_json(const Json& j);
};

/// Predicted efficiency in the unit of the constraint metric, plus an
/// optional full report attached to the search result.
struct ConstraintModel {
  std::function<double(const Architecture&)> measure;
  std::function<Json(const Architecture&)> report;

  bool admits(const Architecture& arch, const Constraint& c) const {
    return measure(arch) <= c.threshold;
  }
};

struct ScoredArchitecture {
  Architecture arch;
  double score = 0.0;
};

/// Top-k by predicted score, highest first; ties go to the smaller
/// canonical string. One predict_batch call over the whole population.
std::vector<ScoredArchitecture> select_parents(std::span<const Architecture> population,
                                               const Predictor& predictor, std::size_t k);

struct CandidateBatch {
  std::vector<Architecture> admitted;
  std::size_t attempts = 0;
  std::size_t rejected = 0;
};

/// Copy of `source` where every global attribute, and every value of every
/// per-layer attribute, is resampled with probability mutate_prob. A changed
/// layer count truncates the dependent lists or extends them with fresh
/// uniform draws.
Architecture mutate_one(const SearchSpace& space, const Architecture& source, double mutate_prob,
                        Rng& rng);

/// Child taking each global attribute from either parent with probability
/// 1/2. Per-layer lists are taken whole, from a parent whose layer count
/// equals the child's (a coin decides when both match).
Architecture crossover_one(const SearchSpace& space, const Architecture& a, const Architecture& b,
                           Rng& rng);

/// num_mutations attempts over uniform members of `population`, keeping
/// constraint-satisfying children. With retry_until_quota, attempts continue
/// until num_mutations children are admitted (InfeasibleError after 100x).
CandidateBatch mutate(const SearchSpace& space, std::span<const Architecture> population,
                      const SearchConfig& cfg, const ConstraintModel& constraint, Rng& rng);

/// As mutate, over pairs of distinct uniform members. Needs |population| >= 2.
CandidateBatch crossover(const SearchSpace& space, std::span<const Architecture> population,
                         const SearchConfig& cfg, const ConstraintModel& constraint, Rng& rng);

struct IterationRecord {
  int iteration = 0;
  std::string predictor_name;
  char predictor_role = 'A';
  std::size_t population_size = 0;
  std::vector<double> parent_scores;
  double best_predicted_score = 0.0;
  std::size_t mutation_rejections = 0;
  std::size_t crossover_rejections = 0;
  std::size_t next_population_size = 0;
};

Json to_json(const IterationRecord& r);

struct SearchTrace {
  std::vector<IterationRecord> iterations;
  Architecture best_arch;
  double best_predicted_score = 0.0;
  std::string final_predictor;
  Json efficiency;
  double search_seconds = 0.0;
};

struct SearchHooks {
  /// After each iteration completes; used to stream the trace.
  std::function<void(const IterationRecord&)> on_iteration;
  /// Every candidate admitted by mutation or crossover.
  std::function<void(const Architecture&)> on_admitted;
};

/// Evolutionary search where predictor_a ranks parents inside the
/// configured window and predictor_b outside it. The final population is
/// ranked by the predictor of the last iteration, over members meeting the
/// constraint; InfeasibleError when none does.
SearchTrace run_search(const SearchSpace& space, const Predictor& predictor_a,
                       const Predictor& predictor_b, const ConstraintModel& constraint,
                       const SearchConfig& cfg, const SearchHooks& hooks = {});

/// {format_version, best_arch, predicted_score, predictor, efficiency,
/// constraint}. Wall time is left out so equal seeds give equal bytes.
Json summary_json(const SearchTrace& trace, const SearchConfig& cfg);

void write_trace_jsonl(const SearchTrace& trace, const std::filesystem::path& path);

}  // namespace hsnas
