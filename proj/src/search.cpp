#include "hsnas/search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "hsnas/error.hpp"

namespace hsnas {

namespace {

constexpr std::size_t kRetryAttemptFactor = 100;

std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

bool coin(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

int draw(const AttributeSpec& spec, Rng& rng) {
  return spec.choices[uniform_index(rng, spec.choices.size())];
}

ConstraintMetric metric_from_name(const std::string& name) {
  if (name == "latency") return ConstraintMetric::Latency;
  if (name == "gflops") return ConstraintMetric::Gflops;
  throw ConfigError(fmt::format("unknown constraint metric '{}' (expected latency or gflops)", name));
}

template <typename MakeChild>
CandidateBatch generate(std::size_t quota, const SearchConfig& cfg,
                        const ConstraintModel& constraint, MakeChild make_child) {
  CandidateBatch batch;
  const std::size_t max_attempts = cfg.retry_until_quota ? quota * kRetryAttemptFactor : quota;
  while (batch.admitted.size() < quota && batch.attempts < max_attempts) {
    ++batch.attempts;
    Architecture child = make_child();
    if (constraint.admits(child, cfg.constraint)) {
      batch.admitted.push_back(std::move(child));
    } else {
      ++batch.rejected;
    }
  }
  if (cfg.retry_until_quota && batch.admitted.size() < quota) {
    throw InfeasibleError(fmt::format(
        "only {} of {} candidates met {} <= {} after {} attempts", batch.admitted.size(), quota,
        constraint_metric_name(cfg.constraint.metric), cfg.constraint.threshold, batch.attempts));
  }
  return batch;
}

std::vector<std::size_t> ranked_order(std::span<const Architecture> population,
                                      const std::vector<double>& scores,
                                      std::vector<std::string>& keys) {
  keys.clear();
  for (const auto& a : population) keys.push_back(canonical_string(a));
  std::vector<std::size_t> order(population.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    if (scores[i] != scores[j]) return scores[i] > scores[j];
    return keys[i] < keys[j];
  });
  return order;
}

std::vector<double> score_all(const Predictor& predictor, std::span<const Architecture> population) {
  auto scores = predictor.predict_batch(population);
  if (scores.size() != population.size()) {
    throw StateError(fmt::format("predictor {} returned {} scores for {} architectures",
                                 predictor.name(), scores.size(), population.size()));
  }
  for (double s : scores) {
    if (!std::isfinite(s)) {
      throw StateError(fmt::format("predictor {} returned a non-finite score", predictor.name()));
    }
  }
  return scores;
}

}  // namespace

std::string_view constraint_metric_name(ConstraintMetric m) noexcept {
  return m == ConstraintMetric::Latency ? "latency" : "gflops";
}

void SearchConfig::validate() const {
  if (num_iterations < 1) throw ConfigError("num_iterations must be >= 1");
  if (population_size < 1) throw ConfigError("population_size must be >= 1");
  if (num_parents < 1 || num_parents > population_size) {
    throw ConfigError(fmt::format("num_parents must be in [1, population_size={}], got {}",
                                  population_size, num_parents));
  }
  if (num_mutations < 0 || num_crossover < 0) {
    throw ConfigError("num_mutations and num_crossover must be >= 0");
  }
  if (num_crossover > 0 && population_size < 2) {
    throw ConfigError("crossover needs population_size >= 2");
  }
  if (!(mutate_prob >= 0.0 && mutate_prob <= 1.0)) throw ConfigError("mutate_prob must be in [0, 1]");
  if (!std::isfinite(constraint.threshold)) throw ConfigError("constraint threshold must be finite");
  if (!window_empty() &&
      !(1 <= llm_start_iteration && llm_start_iteration <= llm_end_iteration &&
        llm_end_iteration <= num_iterations)) {
    throw ConfigError(fmt::format(
        "predictor window ({}, {}) must satisfy 1 <= start <= end <= num_iterations={} or be (0, 0)",
        llm_start_iteration, llm_end_iteration, num_iterations));
  }
}

Json SearchConfig::to_json() const {
  return Json{{"num_iterations", num_iterations},
              {"population_size", population_size},
              {"num_parents", num_parents},
              {"num_mutations", num_mutations},
              {"num_crossover", num_crossover},
              {"mutate_prob", mutate_prob},
              {"constraint",
               {{"metric", constraint_metric_name(constraint.metric)},
                {"threshold", constraint.threshold}}},
              {"llm_start_iteration", llm_start_iteration},
              {"llm_end_iteration", llm_end_iteration},
              {"retry_until_quota", retry_until_quota},
              {"filter_init_population", filter_init_population},
              {"dedup_population", dedup_population},
              {"seed", seed}};
}

SearchConfig SearchConfig::from_json(const Json& j) {
  SearchConfig c;
  try {
    c.num_iterations = j.value("num_iterations", c.num_iterations);
    c.population_size = j.value("population_size", c.population_size);
    c.num_parents = j.value("num_parents", c.num_parents);
    c.num_mutations = j.value("num_mutations", c.num_mutations);
    c.num_crossover = j.value("num_crossover", c.num_crossover);
    c.mutate_prob = j.value("mutate_prob", c.mutate_prob);
    if (auto it = j.find("constraint"); it != j.end()) {
      c.constraint.metric = metric_from_name(it->value("metric", std::string("latency")));
      c.constraint.threshold = it->at("threshold").get<double>();
    }
    c.llm_start_iteration = j.value("llm_start_iteration", c.llm_start_iteration);
    c.llm_end_iteration = j.value("llm_end_iteration", c.llm_end_iteration);
    c.retry_until_quota = j.value("retry_until_quota", c.retry_until_quota);
    c.filter_init_population = j.value("filter_init_population", c.filter_init_population);
    c.dedup_population = j.value("dedup_population", c.dedup_population);
    c.seed = j.value("seed", c.seed);
  } catch (const Json::exception& e) {
    throw ConfigError(fmt::format("malformed search config: {}", e.what()));
  }
  c.validate();
  return c;
}

std::vector<ScoredArchitecture> select_parents(std::span<const Architecture> population,
                                               const Predictor& predictor, std::size_t k) {
  if (population.empty()) throw StateError("cannot select parents from an empty population");
  const auto scores = score_all(predictor, population);
  std::vector<std::string> keys;
  const auto order = ranked_order(population, scores, keys);
  std::vector<ScoredArchitecture> parents;
  for (std::size_t r = 0; r < std::min(k, order.size()); ++r) {
    parents.push_back({population[order[r]], scores[order[r]]});
  }
  return parents;
}

Architecture mutate_one(const SearchSpace& space, const Architecture& source, double mutate_prob,
                        Rng& rng) {
  Architecture globals;
  for (const auto& spec : space.attributes()) {
    if (spec.per_layer) continue;
    globals.set(spec.name, coin(rng, mutate_prob) ? draw(spec, rng) : source.scalar(spec.name));
  }
  Architecture child;
  for (const auto& spec : space.attributes()) {
    if (!spec.per_layer) {
      child.set(spec.name, globals.scalar(spec.name));
      continue;
    }
    LayerValues values = source.layers(spec.name);
    const std::size_t kept = std::min<std::size_t>(
        values.size(), static_cast<std::size_t>(globals.scalar(spec.layer_count_source)));
    for (std::size_t l = 0; l < kept; ++l) {
      if (coin(rng, mutate_prob)) values[l] = draw(spec, rng);
    }
    values.resize(kept);
    while (values.size() < static_cast<std::size_t>(globals.scalar(spec.layer_count_source))) {
      values.push_back(draw(spec, rng));
    }
    child.set(spec.name, std::move(values));
  }
  return child;
}

Architecture crossover_one(const SearchSpace& space, const Architecture& a, const Architecture& b,
                           Rng& rng) {
  Architecture globals;
  for (const auto& spec : space.attributes()) {
    if (spec.per_layer) continue;
    globals.set(spec.name, coin(rng, 0.5) ? a.scalar(spec.name) : b.scalar(spec.name));
  }
  Architecture child;
  for (const auto& spec : space.attributes()) {
    if (!spec.per_layer) {
      child.set(spec.name, globals.scalar(spec.name));
      continue;
    }
    const int count = globals.scalar(spec.layer_count_source);
    const bool a_fits = a.scalar(spec.layer_count_source) == count;
    const bool b_fits = b.scalar(spec.layer_count_source) == count;
    const bool take_a = a_fits && b_fits ? coin(rng, 0.5) : a_fits;
    child.set(spec.name, take_a ? a.layers(spec.name) : b.layers(spec.name));
  }
  return child;
}

CandidateBatch mutate(const SearchSpace& space, std::span<const Architecture> population,
                      const SearchConfig& cfg, const ConstraintModel& constraint, Rng& rng) {
  if (population.empty()) throw StateError("cannot mutate an empty population");
  return generate(static_cast<std::size_t>(cfg.num_mutations), cfg, constraint, [&] {
    const auto& source = population[uniform_index(rng, population.size())];
    return mutate_one(space, source, cfg.mutate_prob, rng);
  });
}

CandidateBatch crossover(const SearchSpace& space, std::span<const Architecture> population,
                         const SearchConfig& cfg, const ConstraintModel& constraint, Rng& rng) {
  if (population.size() < 2) throw StateError("crossover needs at least two members");
  return generate(static_cast<std::size_t>(cfg.num_crossover), cfg, constraint, [&] {
    const std::size_t i = uniform_index(rng, population.size());
    std::size_t j = uniform_index(rng, population.size() - 1);
    if (j >= i) ++j;
    return crossover_one(space, population[i], population[j], rng);
  });
}

Json to_json(const IterationRecord& r) {
  return Json{{"iteration", r.iteration},
              {"predictor", r.predictor_name},
              {"predictor_role", std::string(1, r.predictor_role)},
              {"population_size", r.population_size},
              {"parent_scores", r.parent_scores},
              {"best_predicted_score", r.best_predicted_score},
              {"mutation_rejections", r.mutation_rejections},
              {"crossover_rejections", r.crossover_rejections},
              {"next_population_size", r.next_population_size}};
}

SearchTrace run_search(const SearchSpace& space, const Predictor& predictor_a,
                       const Predictor& predictor_b, const ConstraintModel& constraint,
                       const SearchConfig& cfg, const SearchHooks& hooks) {
  cfg.validate();
  if (!constraint.measure) throw StateError("constraint model has no measure function");
  const auto started = std::chrono::steady_clock::now();
  Rng rng(cfg.seed);

  std::vector<Architecture> population;
  const std::size_t init_cap = static_cast<std::size_t>(cfg.population_size) * kRetryAttemptFactor;
  for (std::size_t draws = 0; population.size() < static_cast<std::size_t>(cfg.population_size);) {
    if (cfg.filter_init_population && draws++ >= init_cap) {
      throw InfeasibleError(fmt::format("no initial population meets {} <= {} after {} draws",
                                        constraint_metric_name(cfg.constraint.metric),
                                        cfg.constraint.threshold, init_cap));
    }
    Architecture a = sample(space, rng);
    if (!cfg.filter_init_population || constraint.admits(a, cfg.constraint)) {
      population.push_back(std::move(a));
    }
  }

  SearchTrace trace;
  for (int it = 1; it <= cfg.num_iterations; ++it) {
    const bool use_a = cfg.uses_predictor_a(it);
    const Predictor& predictor = use_a ? predictor_a : predictor_b;
    const auto parents =
        select_parents(population, predictor, static_cast<std::size_t>(cfg.num_parents));
    auto mutants = mutate(space, population, cfg, constraint, rng);
    auto children = population.size() >= 2 && cfg.num_crossover > 0
                        ? crossover(space, population, cfg, constraint, rng)
                        : CandidateBatch{};

    IterationRecord record;
    record.iteration = it;
    record.predictor_name = predictor.name();
    record.predictor_role = use_a ? 'A' : 'B';
    record.population_size = population.size();
    for (const auto& p : parents) record.parent_scores.push_back(p.score);
    record.best_predicted_score = parents.front().score;
    record.mutation_rejections = mutants.rejected;
    record.crossover_rejections = children.rejected;

    std::vector<Architecture> next;
    for (const auto& p : parents) next.push_back(p.arch);
    for (auto* batch : {&mutants, &children}) {
      for (auto& a : batch->admitted) {
        if (hooks.on_admitted) hooks.on_admitted(a);
        next.push_back(std::move(a));
      }
    }
    if (cfg.dedup_population) {
      std::unordered_set<std::string> seen;
      std::erase_if(next, [&](const Architecture& a) { return !seen.insert(canonical_string(a)).second; });
    }
    population = std::move(next);
    record.next_population_size = population.size();
    spdlog::debug("iteration {} ({}): best {:.4f}, population {}", it, record.predictor_name,
                  record.best_predicted_score, population.size());
    if (hooks.on_iteration) hooks.on_iteration(record);
    trace.iterations.push_back(std::move(record));
  }

  const Predictor& final_predictor =
      cfg.uses_predictor_a(cfg.num_iterations) ? predictor_a : predictor_b;
  std::vector<Architecture> feasible;
  for (const auto& a : population) {
    if (constraint.admits(a, cfg.constraint)) feasible.push_back(a);
  }
  if (feasible.empty()) {
    throw InfeasibleError(fmt::format("no member of the final population meets {} <= {}",
                                      constraint_metric_name(cfg.constraint.metric),
                                      cfg.constraint.threshold));
  }
  const auto best = select_parents(feasible, final_predictor, 1).front();
  trace.best_arch = best.arch;
  trace.best_predicted_score = best.score;
  trace.final_predictor = final_predictor.name();
  trace.efficiency = constraint.report
                         ? constraint.report(best.arch)
                         : Json{{constraint_metric_name(cfg.constraint.metric),
                                 constraint.measure(best.arch)}};
  trace.search_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return trace;
}

Json summary_json(const SearchTrace& trace, const SearchConfig& cfg) {
  return Json{{"format_version", kTraceFormatVersion},
              {"best_arch", to_json(trace.best_arch)},
              {"predicted_score", trace.best_predicted_score},
              {"predictor", trace.final_predictor},
              {"efficiency", trace.efficiency},
              {"constraint",
               {{"metric", constraint_metric_name(cfg.constraint.metric)},
                {"threshold", cfg.constraint.threshold}}},
              {"seed", cfg.seed}};
}

void write_trace_jsonl(const SearchTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError(fmt::format("cannot write {}", path.string()));
  out << Json{{"format_version", kTraceFormatVersion}}.dump() << '\n';
  for (const auto& r : trace.iterations) out << to_json(r).dump() << '\n';
}

}  // namespace hsnas
