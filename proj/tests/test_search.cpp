#include <map>
#include <set>

#include <gtest/gtest.h>

#include "hsnas/bench.hpp"
#include "hsnas/error.hpp"
#include "hsnas/search.hpp"

using namespace hsnas;
namespace k = hsnas::keys;

namespace {

// Twenty global attributes with ten choices each, plus a per-layer list
// under a fixed layer count.
SearchSpace wide_space() {
  std::vector<AttributeSpec> attrs;
  for (int i = 0; i < 20; ++i) attrs.push_back({"g" + std::to_string(i), {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, false, ""});
  attrs.push_back({"n", {4}, false, ""});
  attrs.push_back({"w", {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, true, "n"});
  return SearchSpace(std::move(attrs));
}

Architecture constant_arch(const SearchSpace& s, int v) {
  Architecture a;
  for (const auto& attr : s.attributes()) {
    if (attr.name == "n") a.set("n", 4);
    else if (attr.per_layer) a.set(attr.name, LayerValues(4, v));
    else a.set(attr.name, v);
  }
  return a;
}

// (changed genes, total genes), per-layer values counted one by one.
std::pair<int, int> gene_diff(const Architecture& a, const Architecture& b) {
  int changed = 0, total = 0;
  for (const auto& g : a.genes()) {
    if (g.name == "n") continue;
    if (const int* v = std::get_if<int>(&g.value)) {
      ++total;
      changed += *v != b.scalar(g.name);
    } else {
      const auto& la = std::get<LayerValues>(g.value);
      const auto& lb = b.layers(g.name);
      for (std::size_t i = 0; i < la.size(); ++i) {
        ++total;
        changed += la[i] != lb[i];
      }
    }
  }
  return {changed, total};
}

SearchConfig small_config() {
  SearchConfig cfg;
  cfg.num_iterations = 10;
  cfg.population_size = 20;
  cfg.num_parents = 5;
  cfg.num_mutations = 8;
  cfg.num_crossover = 8;
  cfg.llm_start_iteration = 1;
  cfg.llm_end_iteration = 5;
  return cfg;
}

}  // namespace

TEST(Search, SelectParentsByScore) {
  const auto all = enumerate(tiny_bench_space(), 20000);
  const std::vector<Architecture> pop{all[0], all[1], all[2]};
  const std::map<std::string, double> scores{
      {canonical_string(all[0]), 1.0}, {canonical_string(all[1]), 3.0}, {canonical_string(all[2]), 2.0}};
  FunctionPredictor p("table", [&](const Architecture& a) { return scores.at(canonical_string(a)); });
  const auto top = select_parents(pop, p, 2);
  ASSERT_EQ(top.size(), 2u);
  EXPECT_EQ(top[0].arch, all[1]);
  EXPECT_EQ(top[1].arch, all[2]);
  const auto whole = select_parents(pop, p, 3);
  EXPECT_EQ(whole[2].arch, all[0]);
  EXPECT_EQ(whole[0].score, 3.0);
}

TEST(Search, SelectParentsTieBreakBySerialization) {
  const auto all = enumerate(tiny_bench_space(), 20000);
  FunctionPredictor flat("flat", [](const Architecture&) { return 1.0; });
  std::vector<Architecture> pop{all[7], all[3]};
  const auto a = select_parents(pop, flat, 2);
  std::ranges::reverse(pop);
  const auto b = select_parents(pop, flat, 2);
  EXPECT_EQ(a[0].arch, b[0].arch);
  EXPECT_LT(canonical_string(a[0].arch), canonical_string(a[1].arch));
}

TEST(Search, SelectParentsOneBatchCall) {
  const auto task = make_bench_task();
  FunctionPredictor gold("gold", task.gold);
  CountingPredictor counter(gold);
  const auto all = enumerate(task.space, 20000);
  select_parents(std::span(all).first(50), counter, 10);
  EXPECT_EQ(counter.batch_calls(), 1u);
  EXPECT_EQ(counter.architectures_scored(), 50u);
  EXPECT_THROW(select_parents(std::span<const Architecture>{}, counter, 1), StateError);
  FunctionPredictor nan("nan", [](const Architecture&) { return std::nan(""); });
  EXPECT_THROW(select_parents(std::span(all).first(3), nan, 1), StateError);
}

TEST(Search, MutateProbabilityZeroKeepsSource) {
  const auto s = SearchSpace::hat_default();
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto a = sample(s, rng);
    EXPECT_EQ(mutate_one(s, a, 0.0, rng), a);
  }
}

TEST(Search, MutationFrequency) {
  const auto s = wide_space();
  Rng rng(2);
  for (double p : {0.3, 1.0}) {
    int changed = 0, total = 0;
    while (total < 10000) {
      const auto a = sample(s, rng);
      const auto [c, t] = gene_diff(a, mutate_one(s, a, p, rng));
      changed += c;
      total += t;
    }
    // A resampled gene keeps its value with probability 1/10.
    EXPECT_NEAR(changed / double(total), p * 0.9, 0.02) << p;
  }
}

TEST(Search, MutantsAreValid) {
  for (const auto& s : {SearchSpace::hat_default(), tiny_bench_space()}) {
    Rng rng(3);
    for (int i = 0; i < 2000; ++i) {
      const auto child = mutate_one(s, sample(s, rng), 0.5, rng);
      ASSERT_TRUE(validate(s, child).empty()) << canonical_string(child);
    }
  }
}

TEST(Search, CrossoverIdenticalParents) {
  const auto s = SearchSpace::hat_default();
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    const auto a = sample(s, rng);
    EXPECT_EQ(crossover_one(s, a, a, rng), a);
  }
}

TEST(Search, CrossoverOneGeneDifference) {
  const auto s = SearchSpace::hat_default();
  Rng rng(5);
  auto a = sample(s, rng);
  a.set(k::kEncoderEmbedDim, 512);
  auto b = a;
  b.set(k::kEncoderEmbedDim, 640);
  std::set<int> seen;
  for (int i = 0; i < 100; ++i) {
    const auto c = crossover_one(s, a, b, rng);
    EXPECT_TRUE(c == a || c == b);
    seen.insert(c.scalar(k::kEncoderEmbedDim));
  }
  EXPECT_EQ(seen.size(), 2u);
}

TEST(Search, CrossoverDonorFrequency) {
  const auto s = wide_space();
  const auto zero = constant_arch(s, 0), one = constant_arch(s, 1);
  Rng rng(6);
  int from_zero = 0, total = 0;
  while (total < 10000) {
    const auto child = crossover_one(s, zero, one, rng);
    for (const auto& attr : s.attributes()) {
      if (attr.per_layer || attr.name == "n") continue;
      ++total;
      from_zero += child.scalar(attr.name) == 0;
    }
  }
  EXPECT_NEAR(from_zero / double(total), 0.5, 0.02);
}

TEST(Search, CrossoverChildrenValid) {
  const auto s = SearchSpace::hat_default();
  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    const auto a = sample(s, rng), b = sample(s, rng);
    const auto c = crossover_one(s, a, b, rng);
    ASSERT_TRUE(validate(s, c).empty());
    const auto& layers = c.layers(k::kDecoderFfnDims);
    EXPECT_TRUE(layers == a.layers(k::kDecoderFfnDims) || layers == b.layers(k::kDecoderFfnDims));
  }
}

TEST(Search, MutateDropsRejectedWithoutRetry) {
  const auto task = make_bench_task();
  const auto cm = task.constraint_model();
  SearchConfig cfg;
  cfg.constraint.threshold = 120;
  Rng rng(8);
  std::vector<Architecture> pop;
  for (int i = 0; i < 30; ++i) pop.push_back(sample(task.space, rng));
  const auto batch = mutate(task.space, pop, cfg, cm, rng);
  EXPECT_EQ(batch.attempts, static_cast<std::size_t>(cfg.num_mutations));
  EXPECT_EQ(batch.admitted.size() + batch.rejected, batch.attempts);
  for (const auto& a : batch.admitted) EXPECT_LE(task.latency_ms(a), 120);

  cfg.retry_until_quota = true;
  const auto full = crossover(task.space, pop, cfg, cm, rng);
  EXPECT_EQ(full.admitted.size(), static_cast<std::size_t>(cfg.num_crossover));
  cfg.constraint.threshold = 1;
  EXPECT_THROW(mutate(task.space, pop, cfg, cm, rng), InfeasibleError);
}

TEST(Search, ConfigValidation) {
  SearchConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.llm_end_iteration = 31;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.llm_start_iteration = 16;
  cfg.llm_end_iteration = 15;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.llm_start_iteration = cfg.llm_end_iteration = 0;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_FALSE(cfg.uses_predictor_a(1));
  cfg = {};
  cfg.num_parents = 200;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.mutate_prob = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);

  SearchConfig custom;
  custom.constraint = {ConstraintMetric::Gflops, 3.5};
  custom.seed = 9;
  custom.llm_end_iteration = 20;
  const auto back = SearchConfig::from_json(custom.to_json());
  EXPECT_EQ(back.to_json(), custom.to_json());
}

TEST(Search, ScheduleFollowsWindow) {
  const auto task = make_bench_task();
  FunctionPredictor gold_a("A", task.gold), gold_b("B", task.gold);
  for (auto [start, end] : standard_windows()) {
    CountingPredictor a(gold_a), b(gold_b);
    SearchConfig cfg;
    cfg.llm_start_iteration = start;
    cfg.llm_end_iteration = end;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> calls;
    SearchHooks hooks;
    hooks.on_iteration = [&](const IterationRecord& r) {
      calls.emplace_back(a.batch_calls(), b.batch_calls());
      EXPECT_EQ(r.predictor_role, cfg.uses_predictor_a(r.iteration) ? 'A' : 'B');
    };
    run_search(task.space, a, b, task.constraint_model(), cfg, hooks);
    ASSERT_EQ(calls.size(), 30u);
    std::uint64_t prev_a = 0, prev_b = 0;
    for (int it = 1; it <= 30; ++it) {
      const auto [ca, cb] = calls[it - 1];
      const bool in_window = start <= it && it <= end;
      EXPECT_EQ(ca - prev_a, in_window ? 1u : 0u) << start << "-" << end << " it " << it;
      EXPECT_EQ(cb - prev_b, in_window ? 0u : 1u) << start << "-" << end << " it " << it;
      prev_a = ca;
      prev_b = cb;
    }
    if (start == 1 && end == 30) {
      EXPECT_EQ(b.batch_calls(), 0u);
    }
  }
}

TEST(Search, BestScoreMonotoneAndPopulationBounded) {
  const auto task = make_bench_task();
  SimulatedPredictor noisy(task.gold, 0.5, 0.0, 3);
  const auto cfg = small_config();
  const auto trace = run_search(task.space, noisy, noisy, task.constraint_model(), cfg);
  ASSERT_EQ(trace.iterations.size(), 10u);
  for (std::size_t i = 0; i < trace.iterations.size(); ++i) {
    const auto& r = trace.iterations[i];
    if (i > 0) {
      EXPECT_GE(r.best_predicted_score, trace.iterations[i - 1].best_predicted_score);
    }
    EXPECT_GE(r.next_population_size, std::size_t(cfg.num_parents));
    EXPECT_LE(r.next_population_size, std::size_t(cfg.num_parents + cfg.num_mutations + cfg.num_crossover));
    EXPECT_TRUE(std::ranges::is_sorted(r.parent_scores, std::greater<>()));
  }
}

TEST(Search, ConstraintSafety) {
  const auto task = make_bench_task();
  SimulatedPredictor noisy(task.gold, 0.5, 0.0, 4);
  FunctionPredictor gold("gold", task.gold);
  for (double threshold : {100.0, 150.0}) {
    auto cfg = small_config();
    cfg.constraint.threshold = threshold;
    std::size_t admitted = 0, violations = 0;
    SearchHooks hooks;
    hooks.on_admitted = [&](const Architecture& a) {
      ++admitted;
      violations += task.latency_ms(a) > threshold;
    };
    const auto trace = run_search(task.space, noisy, gold, task.constraint_model(), cfg, hooks);
    EXPECT_GT(admitted, 0u);
    EXPECT_EQ(violations, 0u);
    EXPECT_LE(task.latency_ms(trace.best_arch), threshold);
  }
}

TEST(Search, InfeasibleThreshold) {
  const auto task = make_bench_task();
  FunctionPredictor gold("gold", task.gold);
  auto cfg = small_config();
  cfg.constraint.threshold = 10;
  EXPECT_THROW(run_search(task.space, gold, gold, task.constraint_model(), cfg), InfeasibleError);
  cfg.filter_init_population = true;
  EXPECT_THROW(run_search(task.space, gold, gold, task.constraint_model(), cfg), InfeasibleError);
}

TEST(Search, DeterministicTrace) {
  const auto task = make_bench_task();
  SimulatedPredictor noisy(task.gold, 0.3, 0.0, 5);
  FunctionPredictor gold("gold", task.gold);
  auto cfg = small_config();
  cfg.seed = 42;
  auto run = [&] {
    const auto t = run_search(task.space, noisy, gold, task.constraint_model(), cfg);
    Json j = summary_json(t, cfg);
    for (const auto& r : t.iterations) j["trace"].push_back(to_json(r));
    return j.dump();
  };
  EXPECT_EQ(run(), run());
  const auto first = run();
  cfg.seed = 43;
  EXPECT_NE(run(), first);
}

TEST(Search, DedupFlagRemovesDuplicates) {
  const auto task = make_bench_task();
  FunctionPredictor gold("gold", task.gold);
  auto cfg = small_config();
  cfg.population_size = cfg.num_parents;  // every member is a parent
  cfg.mutate_prob = 0.0;                  // so every mutant duplicates one
  cfg.constraint.threshold = 1000;
  const auto plain = run_search(task.space, gold, gold, task.constraint_model(), cfg);
  EXPECT_EQ(plain.iterations[0].next_population_size, 21u);
  cfg.dedup_population = true;
  const auto dedup = run_search(task.space, gold, gold, task.constraint_model(), cfg);
  EXPECT_LE(dedup.iterations[0].next_population_size, 13u);
}
