#include <algorithm>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "hsnas/bench.hpp"
#include "hsnas/error.hpp"

using namespace hsnas;
namespace k = hsnas::keys;

namespace {

double exhaustive_best(const SyntheticTask& task, double threshold) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& a : enumerate(task.space, 20000)) {
    if (task.latency_ms(a) <= threshold) best = std::max(best, task.gold(a));
  }
  return best;
}

std::size_t count_lines(const std::string& text) { return std::ranges::count(text, '\n'); }

}  // namespace

TEST(Bench, TinySpaceCardinality) {
  EXPECT_EQ(tiny_bench_space().cardinality(), 9344u);
}

TEST(Bench, LatencyRange) {
  const auto task = make_bench_task();
  double lo = 1e9, hi = -1e9;
  for (const auto& a : enumerate(task.space, 20000)) {
    lo = std::min(lo, task.latency_ms(a));
    hi = std::max(hi, task.latency_ms(a));
  }
  EXPECT_NEAR(lo, 40 + 30 * 1.024, 1e-9);
  EXPECT_NEAR(hi, 40 + 30 * 3 * 2.048, 1e-9);
}

TEST(Bench, GoldClosedFormAtCorners) {
  const auto task = make_bench_task();
  const auto all = enumerate(task.space, 20000);
  // The first enumerated architecture takes the first choice everywhere.
  const auto& a = all.front();
  ASSERT_EQ(a.scalar(k::kDecoderLayerNum), 1);
  const double u0 = 0, u1 = 1.0 / 5, u2 = 0, u3 = 0, u4 = 0, u5 = 0, u6 = 0, u7 = 0, u8 = 0, u9 = 0;
  const double expected = 24 + 0.9 * u0 + 0.4 * u1 + 0.8 * u2 + 0.3 * u3 + 1.0 * u4 + 2.0 * u5 +
                          1.5 * u6 + 0.4 * u7 + 0.5 * u8 - 0.3 * u9 + 1.2 * u5 * u6 +
                          0.3 * std::sin(2 * M_PI * (1.3 * u5 + 0.7 * u6 + 0.9 * u0));
  EXPECT_NEAR(task.gold(a), expected, 1e-12);
}

TEST(Bench, BruteForceGenerousIsUnconstrainedArgmax) {
  const auto task = make_bench_task();
  const auto best = brute_force_optimum(task, 1e9);
  EXPECT_DOUBLE_EQ(best.score, exhaustive_best(task, 1e9));
  EXPECT_DOUBLE_EQ(task.gold(best.arch), best.score);
}

TEST(Bench, BruteForceMatchesScanUnderConstraints) {
  const auto task = make_bench_task();
  for (double t : {100.0, 150.0, 200.0}) {
    const auto best = brute_force_optimum(task, t);
    EXPECT_DOUBLE_EQ(best.score, exhaustive_best(task, t));
    EXPECT_LE(task.latency_ms(best.arch), t);
  }
}

TEST(Bench, BruteForceInfeasible) {
  EXPECT_THROW(brute_force_optimum(make_bench_task(), 50), InfeasibleError);
  EXPECT_THROW(brute_force_optimum(make_bench_task(), 1e9, 100), EnumerationRefused);
}

TEST(Bench, MonotoneGoldPicksDeepestDecoder) {
  auto task = make_bench_task();
  task.gold = [](const Architecture& a) { return double(a.scalar(k::kDecoderLayerNum)); };
  EXPECT_EQ(brute_force_optimum(task, 1e9).arch.scalar(k::kDecoderLayerNum), 3);
}

TEST(Bench, EvaluatePredictorReports) {
  const auto task = make_bench_task();
  const auto eval = gold_eval_set(task, 200, 1);
  ASSERT_EQ(eval.size(), 200u);
  const auto gold = evaluate_predictor(
      [&](std::uint64_t) { return std::make_unique<FunctionPredictor>("gold", task.gold); }, eval, {0, 1});
  EXPECT_EQ(*gold.mean_mae, 0.0);
  EXPECT_DOUBLE_EQ(*gold.mean_kendall_tau, 1.0);

  const auto shifted = evaluate_predictor(
      [&](std::uint64_t seed) -> std::unique_ptr<Predictor> {
        if (seed == 1) throw TransportError("down");
        return simulated_predictor(task.gold, 0.0, -2.0, seed);
      },
      eval, {0, 1, 2});
  ASSERT_EQ(shifted.seeds.size(), 3u);
  EXPECT_FALSE(shifted.seeds[1].ok);
  EXPECT_TRUE(shifted.seeds[2].ok);
  EXPECT_NEAR(*shifted.mean_mae, 2.0, 1e-9);
  const auto j = to_json(shifted);
  EXPECT_EQ(j.at("seeds").size(), 3u);
}

TEST(Bench, WindowSweepShape) {
  const auto task = make_bench_task();
  FunctionPredictor a("A", task.gold), b("B", task.gold);
  SearchConfig base;
  base.num_iterations = 30;
  const auto entries = window_sweep(base, a, b);
  ASSERT_EQ(entries.size(), 7u);
  EXPECT_TRUE(entries[0].config.window_empty());
  const auto windows = standard_windows();
  for (std::size_t i = 0; i < windows.size(); ++i) {
    EXPECT_EQ(entries[i + 1].config.llm_start_iteration, windows[i].first);
    EXPECT_EQ(entries[i + 1].config.llm_end_iteration, windows[i].second);
  }
  const auto rows = sweep(entries, task);
  ASSERT_EQ(rows.size(), 7u);
  for (const auto& r : rows) {
    EXPECT_TRUE(r.ok) << r.error;
    EXPECT_LE(r.latency_ms, base.constraint.threshold);
  }
  const auto csv = sweep_csv(rows);
  EXPECT_EQ(count_lines(csv), 8u);
  EXPECT_TRUE(csv.starts_with("label,predictor_a,predictor_b,llm_start,llm_end,"));
  EXPECT_EQ(sweep_json(rows).at("rows").size(), 7u);
}

TEST(Bench, ThresholdsAndSeeds) {
  const auto task = make_bench_task();
  FunctionPredictor gold("gold", task.gold);
  std::vector<SweepEntry> entries;
  for (double t : {100.0, 150.0, 200.0}) {
    for (std::uint64_t seed : {1, 2, 3}) {
      SweepEntry e;
      e.label = "t" + std::to_string(int(t));
      e.config.constraint.threshold = t;
      e.config.seed = seed;
      e.predictor_a = e.predictor_b = &gold;
      entries.push_back(e);
    }
  }
  const auto rows = sweep(entries, task);
  ASSERT_EQ(rows.size(), 9u);
  for (std::size_t t = 0; t < 3; ++t) {
    double lo = 1e9, hi = -1e9;
    for (std::size_t s = 0; s < 3; ++s) {
      const auto& r = rows[t * 3 + s];
      ASSERT_TRUE(r.ok) << r.error;
      EXPECT_LE(r.latency_ms, r.config.constraint.threshold);
      lo = std::min(lo, r.score);
      hi = std::max(hi, r.score);
    }
    EXPECT_LE(hi - lo, 0.01 * hi);
  }
}

TEST(Bench, FailingEntryDoesNotStopSweep) {
  const auto task = make_bench_task();
  FunctionPredictor gold("gold", task.gold);
  SweepEntry bad, good;
  bad.label = "bad";
  bad.config.constraint.threshold = 10;
  bad.predictor_a = bad.predictor_b = &gold;
  good = bad;
  good.label = "good";
  good.config.constraint.threshold = 200;
  const auto rows = sweep({bad, good}, task);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_FALSE(rows[0].ok);
  EXPECT_TRUE(rows[1].ok);
  EXPECT_NE(sweep_csv(rows).find(",error: "), std::string::npos);
}
