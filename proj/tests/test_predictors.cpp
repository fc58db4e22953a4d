#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "hsnas/bench.hpp"
#include "hsnas/error.hpp"
#include "hsnas/factory.hpp"
#include "hsnas/predictor.hpp"

using namespace hsnas;

namespace {

std::vector<Architecture> archs_of(const std::vector<EvalRecord>& records) {
  std::vector<Architecture> out;
  for (const auto& r : records) out.push_back(r.arch);
  return out;
}

std::vector<double> scores_of(const std::vector<EvalRecord>& records) {
  std::vector<double> out;
  for (const auto& r : records) out.push_back(r.score);
  return out;
}

}  // namespace

TEST(Predictors, NoiselessSimulationIsGold) {
  const auto task = make_bench_task();
  const auto eval = gold_eval_set(task, 300, 4);
  SimulatedPredictor sim(task.gold, 0.0, 0.0, 1);
  const auto p = sim.predict_batch(archs_of(eval));
  EXPECT_EQ(mae(p, scores_of(eval)), 0.0);
  EXPECT_DOUBLE_EQ(*kendall_tau(p, scores_of(eval)), 1.0);
}

TEST(Predictors, HalfNormalMaeLaw) {
  const auto task = make_bench_task();
  const auto eval = gold_eval_set(task, 1000, 5);
  const double expected = 0.5 * std::sqrt(2.0 / std::numbers::pi);
  for (std::uint64_t seed : {0, 1, 2}) {
    SimulatedPredictor sim(task.gold, 0.5, 0.0, seed);
    EXPECT_NEAR(mae(sim.predict_batch(archs_of(eval)), scores_of(eval)), expected, 0.05);
  }
}

TEST(Predictors, BiasIsRankPreserving) {
  const auto task = make_bench_task();
  const auto eval = gold_eval_set(task, 1000, 6);
  SimulatedPredictor sim(task.gold, 0.0, -2.0, 0);
  const auto p = sim.predict_batch(archs_of(eval));
  EXPECT_NEAR(mae(p, scores_of(eval)), 2.0, 1e-9);
  EXPECT_DOUBLE_EQ(*kendall_tau(p, scores_of(eval)), 1.0);
}

TEST(Predictors, PerArchitectureDeterminism) {
  const auto task = make_bench_task();
  SimulatedPredictor a(task.gold, 0.7, 0.3, 9), b(task.gold, 0.7, 0.3, 9);
  Rng rng(1);
  std::vector<Architecture> archs;
  for (int i = 0; i < 100; ++i) archs.push_back(sample(task.space, rng));
  const auto batch = a.predict_batch(archs);
  for (std::size_t i = 0; i < archs.size(); ++i) {
    EXPECT_EQ(a.predict(archs[i]), a.predict(archs[i]));
    EXPECT_EQ(a.predict(archs[i]), b.predict(archs[i]));
    EXPECT_EQ(batch[i], a.predict(archs[i]));
  }
}

TEST(Predictors, SeedsChangeNoise) {
  const auto task = make_bench_task();
  SimulatedPredictor a(task.gold, 0.5, 0.0, 1), b(task.gold, 0.5, 0.0, 2);
  Rng rng(2);
  const auto arch = sample(task.space, rng);
  EXPECT_NE(a.predict(arch), b.predict(arch));
}

TEST(Predictors, CountingDecorator) {
  const auto task = make_bench_task();
  FunctionPredictor gold("gold", task.gold);
  CountingPredictor counter(gold);
  Rng rng(3);
  std::vector<Architecture> archs{sample(task.space, rng), sample(task.space, rng)};
  counter.predict_batch(archs);
  counter.predict(archs[0]);
  EXPECT_EQ(counter.batch_calls(), 1u);
  EXPECT_EQ(counter.architectures_scored(), 3u);
  EXPECT_EQ(counter.name(), "gold");
}

TEST(Predictors, SpecGrammar) {
  const auto space = tiny_bench_space();
  Rng rng(4);
  const auto a = sample(space, rng);
  EXPECT_EQ(make_predictor(space, "gold")->predict(a), bench_gold(space, a));
  EXPECT_NEAR(make_predictor(space, "sim:bias=-2")->predict(a), bench_gold(space, a) - 2.0, 1e-12);
  EXPECT_EQ(make_predictor(space, "sim:sigma=0.5,seed=3")->predict(a),
            SimulatedPredictor([&](const Architecture& x) { return bench_gold(space, x); }, 0.5, 0.0, 3)
                .predict(a));
  EXPECT_THROW(make_predictor(space, "oracle"), ConfigError);
  EXPECT_THROW(make_predictor(space, "sim:sigma=abc"), ConfigError);
  EXPECT_THROW(make_predictor(space, "sim:temperature=1"), ConfigError);
}

TEST(Predictors, FnvKnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}
