#include "hsnas/bench.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "hsnas/error.hpp"

namespace hsnas {

namespace {

// Gold function constants. Frozen: acceptance thresholds depend on them.
namespace gold {
constexpr double kBase = 24.0;
// Offsets and scales that map each encoding feature onto roughly [0, 1].
constexpr std::array<double, kEncodingSize> kOffset{512, 1, 1024, 4, 512, 1, 1024, 4, 4, -1};
constexpr std::array<double, kEncodingSize> kScale{128, 5, 2048, 4, 128, 5, 2048, 4, 4, 3};
constexpr std::array<double, kEncodingSize> kWeight{0.9, 0.4, 0.8, 0.3, 1.0,
                                                    2.0, 1.5, 0.4, 0.5, -0.3};
constexpr double kInteraction = 1.2;  // u5 * u6
constexpr double kRippleAmplitude = 0.3;
constexpr double kRippleLayers = 1.3;
constexpr double kRippleFfn = 0.7;
constexpr double kRippleEmbed = 0.9;
}  // namespace gold

constexpr double kLatencyIntercept = 40.0;
constexpr double kLatencySlope = 30.0;

AttributeSpec global(std::string_view name, std::vector<int> choices) {
  return {std::string(name), std::move(choices), false, {}};
}

AttributeSpec per_layer(std::string_view name, std::vector<int> choices, std::string_view source) {
  return {std::string(name), std::move(choices), true, std::string(source)};
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

SearchSpace tiny_bench_space() {
  using namespace keys;
  return SearchSpace({
      global(kEncoderEmbedDim, {512, 640}),
      global(kEncoderLayerNum, {2}),
      per_layer(kEncoderFfnDims, {1024, 2048}, kEncoderLayerNum),
      per_layer(kEncoderSelfHeads, {4}, kEncoderLayerNum),
      global(kDecoderEmbedDim, {512, 640}),
      global(kDecoderLayerNum, {1, 2, 3}),
      per_layer(kDecoderFfnDims, {1024, 2048}, kDecoderLayerNum),
      per_layer(kDecoderSelfHeads, {4, 8}, kDecoderLayerNum),
      per_layer(kDecoderCrossHeads, {4, 8}, kDecoderLayerNum),
      per_layer(kDecoderArbitraryAttn, {-1}, kDecoderLayerNum),
      global(kEncoderQkvDim, {512}),
      global(kDecoderQkvDim, {512}),
  });
}

double bench_gold(const SearchSpace& space, const Architecture& arch) {
  const EncodedArchitecture x = encode(space, arch);
  std::array<double, kEncodingSize> u{};
  double score = gold::kBase;
  for (int i = 0; i < kEncodingSize; ++i) {
    u[i] = (x[i] - gold::kOffset[i]) / gold::kScale[i];
    score += gold::kWeight[i] * u[i];
  }
  using namespace feature;
  score += gold::kInteraction * u[kDecoderLayers] * u[kDecoderFfn];
  score += gold::kRippleAmplitude *
           std::sin(2.0 * std::numbers::pi *
                    (gold::kRippleLayers * u[kDecoderLayers] + gold::kRippleFfn * u[kDecoderFfn] +
                     gold::kRippleEmbed * u[kEncoderEmbedDim]));
  return score;
}

AnalyticLatency bench_latency() { return {kLatencyIntercept, kLatencySlope}; }

double SyntheticTask::latency_ms(const Architecture& arch) const {
  return predict_latency(latency, encode(space, arch));
}

ConstraintModel SyntheticTask::constraint_model(ConstraintMetric metric) const {
  ConstraintModel model;
  if (metric == ConstraintMetric::Latency) {
    model.measure = [this](const Architecture& a) { return latency_ms(a); };
  } else {
    model.measure = [this](const Architecture& a) { return gflops_estimate(space, a); };
  }
  model.report = [this](const Architecture& a) {
    return to_json(efficiency_report(space, a, latency));
  };
  return model;
}

SyntheticTask make_bench_task(std::uint64_t seed) {
  SyntheticTask task{tiny_bench_space(), {}, LatencyModel(bench_latency()), seed};
  task.gold = [space = task.space](const Architecture& a) { return bench_gold(space, a); };
  return task;
}

std::vector<EvalRecord> gold_eval_set(const SyntheticTask& task, std::size_t n, std::uint64_t seed) {
  const std::uint64_t card = task.space.cardinality();
  if (n > card) {
    throw PreconditionError(fmt::format("asked for {} distinct architectures from a space of {}", n, card));
  }
  Rng rng(seed);
  std::unordered_set<std::string> seen;
  std::vector<EvalRecord> out;
  while (out.size() < n) {
    Architecture a = sample(task.space, rng);
    if (!seen.insert(canonical_string(a)).second) continue;
    EvalRecord r{a, task.gold(a), std::nullopt};
    const auto eff = efficiency_report(task.space, a, task.latency);
    r.efficiency = RecordEfficiency{eff.gflops, eff.latency_ms, eff.model_size_millions};
    out.push_back(std::move(r));
  }
  return out;
}

Json to_json(const PredictorReport& report) {
  Json seeds = Json::array();
  for (const auto& s : report.seeds) {
    Json j{{"seed", s.seed}, {"ok", s.ok}};
    if (!s.ok) {
      j["error"] = s.error;
    } else {
      j["mae"] = s.mae;
      j["kendall_tau"] = s.kendall_tau ? Json(*s.kendall_tau) : Json(nullptr);
      j["discordant_pairs"] = s.discordance.discordant_pairs();
      Json hist = Json::object();
      for (const auto& [d, c] : s.discordance.histogram) hist[std::to_string(d)] = c;
      j["discordance_histogram"] = std::move(hist);
    }
    seeds.push_back(std::move(j));
  }
  return Json{{"predictor", report.predictor},
              {"eval_set", report.eval_set},
              {"seeds", std::move(seeds)},
              {"mean_mae", report.mean_mae ? Json(*report.mean_mae) : Json(nullptr)},
              {"mean_kendall_tau",
               report.mean_kendall_tau ? Json(*report.mean_kendall_tau) : Json(nullptr)}};
}

PredictorReport evaluate_predictor(const PredictorFactory& factory,
                                   const std::vector<EvalRecord>& eval_set,
                                   const std::vector<std::uint64_t>& seeds,
                                   std::string eval_set_name) {
  if (eval_set.empty()) throw InputError("evaluation set is empty");
  if (seeds.empty()) throw ConfigError("evaluate_predictor needs at least one seed");
  std::vector<Architecture> archs;
  std::vector<double> truths;
  for (const auto& r : eval_set) {
    archs.push_back(r.arch);
    truths.push_back(r.score);
  }
  PredictorReport report;
  report.eval_set = std::move(eval_set_name);
  double mae_sum = 0.0, tau_sum = 0.0;
  std::size_t ok = 0, tau_count = 0;
  for (std::uint64_t seed : seeds) {
    SeedReport s;
    s.seed = seed;
    try {
      const auto predictor = factory(seed);
      if (report.predictor.empty()) report.predictor = predictor->name();
      const auto predictions = predictor->predict_batch(archs);
      s.mae = mae(predictions, truths);
      if (eval_set.size() >= 2) {
        s.kendall_tau = kendall_tau(predictions, truths);
        s.discordance = discordance_profile(predictions, truths);
      }
      s.ok = true;
      mae_sum += s.mae;
      ++ok;
      if (s.kendall_tau) {
        tau_sum += *s.kendall_tau;
        ++tau_count;
      }
    } catch (const std::exception& e) {
      s.error = e.what();
      spdlog::warn("seed {} failed: {}", seed, e.what());
    }
    report.seeds.push_back(std::move(s));
  }
  if (ok > 0) report.mean_mae = mae_sum / static_cast<double>(ok);
  if (tau_count > 0) report.mean_kendall_tau = tau_sum / static_cast<double>(tau_count);
  if (ok < seeds.size()) {
    spdlog::warn("means cover {} of {} seeds", ok, seeds.size());
  }
  return report;
}

ScoredArchitecture brute_force_optimum(const SyntheticTask& task, double latency_threshold_ms,
                                       std::uint64_t cap) {
  ArchitectureEnumerator it(task.space, cap);
  std::optional<ScoredArchitecture> best;
  std::string best_key;
  while (auto a = it.next()) {
    if (task.latency_ms(*a) > latency_threshold_ms) continue;
    const double score = task.gold(*a);
    if (!best || score > best->score ||
        (score == best->score && canonical_string(*a) < best_key)) {
      best_key = canonical_string(*a);
      best = ScoredArchitecture{std::move(*a), score};
    }
  }
  if (!best) {
    throw InfeasibleError(
        fmt::format("no architecture meets latency <= {} ms", latency_threshold_ms));
  }
  return *best;
}

std::vector<std::pair<int, int>> standard_windows() {
  return {{1, 30}, {1, 5}, {25, 30}, {1, 15}, {16, 30}, {1, 25}};
}

std::vector<SweepEntry> window_sweep(const SearchConfig& base, const Predictor& predictor_a,
                                     const Predictor& predictor_b) {
  std::vector<SweepEntry> entries;
  SearchConfig baseline = base;
  baseline.llm_start_iteration = 0;
  baseline.llm_end_iteration = 0;
  entries.push_back({fmt::format("baseline ({})", predictor_b.name()), baseline, &predictor_a,
                     &predictor_b});
  for (const auto& [start, end] : standard_windows()) {
    SearchConfig c = base;
    c.llm_start_iteration = start;
    c.llm_end_iteration = end;
    entries.push_back({fmt::format("hybrid ({}, {}, {}, {})", predictor_a.name(),
                                   predictor_b.name(), start, end),
                       c, &predictor_a, &predictor_b});
  }
  return entries;
}

std::vector<SweepRow> sweep(const std::vector<SweepEntry>& entries, const SyntheticTask& task) {
  std::vector<SweepRow> rows;
  for (const auto& e : entries) {
    SweepRow row;
    row.label = e.label;
    row.config = e.config;
    try {
      if (e.predictor_a == nullptr || e.predictor_b == nullptr) {
        throw ConfigError("sweep entry lacks a predictor");
      }
      row.predictor_a = e.predictor_a->name();
      row.predictor_b = e.predictor_b->name();
      const auto trace = run_search(task.space, *e.predictor_a, *e.predictor_b,
                                    task.constraint_model(e.config.constraint.metric), e.config);
      const auto eff = efficiency_report(task.space, trace.best_arch, task.latency);
      row.best_arch = trace.best_arch;
      row.score = task.gold(trace.best_arch);
      row.predicted_score = trace.best_predicted_score;
      row.latency_ms = eff.latency_ms;
      row.gflops = eff.gflops;
      row.size_millions = eff.model_size_millions;
      row.search_seconds = trace.search_seconds;
      row.ok = true;
    } catch (const Error& err) {
      row.error = err.what();
      spdlog::warn("sweep entry '{}' failed: {}", e.label, err.what());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "label,predictor_a,predictor_b,llm_start,llm_end,constraint_metric,threshold,seed,status,"
         "score,predicted_score,latency_ms,gflops,size_millions,search_seconds\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{},{},{},{},{},{}", csv_field(r.label), csv_field(r.predictor_a),
                       csv_field(r.predictor_b), r.config.llm_start_iteration,
                       r.config.llm_end_iteration, constraint_metric_name(r.config.constraint.metric),
                       r.config.constraint.threshold, r.config.seed,
                       r.ok ? std::string("ok") : csv_field("error: " + r.error));
    if (r.ok) {
      out << fmt::format(",{:.4f},{:.4f},{:.2f},{:.3f},{:.2f},{:.3f}\n", r.score, r.predicted_score,
                         r.latency_ms, r.gflops, r.size_millions, r.search_seconds);
    } else {
      out << ",,,,,,\n";
    }
  }
  return out.str();
}

Json sweep_json(const std::vector<SweepRow>& rows) {
  Json out = Json::array();
  for (const auto& r : rows) {
    Json j{{"label", r.label},
           {"predictor_a", r.predictor_a},
           {"predictor_b", r.predictor_b},
           {"config", r.config.to_json()},
           {"status", r.ok ? "ok" : "error"}};
    if (r.ok) {
      j["best_arch"] = to_json(r.best_arch);
      j["score"] = r.score;
      j["predicted_score"] = r.predicted_score;
      j["latency_ms"] = r.latency_ms;
      j["gflops"] = r.gflops;
      j["size_millions"] = r.size_millions;
      j["search_seconds"] = r.search_seconds;
    } else {
      j["error"] = r.error;
    }
    out.push_back(std::move(j));
  }
  return Json{{"format_version", 1}, {"rows", std::move(out)}};
}

}  // namespace hsnas
