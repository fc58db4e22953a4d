// hsnas: command-line front end for prompt rendering, LLM performance
// prediction, distillation, predictor evaluation and hybrid search.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "hsnas/bench.hpp"
#include "hsnas/distill.hpp"
#include "hsnas/efficiency.hpp"
#include "hsnas/error.hpp"
#include "hsnas/factory.hpp"
#include "hsnas/llm.hpp"
#include "hsnas/manifest.hpp"
#include "hsnas/metrics.hpp"
#include "hsnas/prompt.hpp"
#include "hsnas/records.hpp"
#include "hsnas/search.hpp"

namespace fs = std::filesystem;
using namespace hsnas;

namespace {

constexpr int kPredictionsFormatVersion = 1;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
      return 2;
    case ErrorKind::Input:
    case ErrorKind::Format:
    case ErrorKind::Precondition:
    case ErrorKind::State:
      return 3;
    case ErrorKind::Infeasible:
      return 4;
    case ErrorKind::Transport:
    case ErrorKind::Parse:
      return 5;
  }
  return 1;
}

std::string command_line(int argc, char** argv) {
  std::string out;
  for (int i = 0; i < argc; ++i) {
    if (i > 0) out += ' ';
    out += argv[i];
  }
  return out;
}

fs::path manifest_path_for(const fs::path& out) { return fs::path(out.string() + ".manifest.json"); }

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError(fmt::format("cannot write {}", path.string()));
  out << text;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

Architecture arch_from_value(const SearchSpace& space, const Json& j) {
  return architecture_from_json(space, j.contains("arch") ? j.at("arch") : j);
}

Architecture load_test_arch(const SearchSpace& space, const fs::path& path) {
  Architecture a = arch_from_value(space, read_json_file(path));
  if (auto v = validate(space, a); !v.empty()) {
    throw InputError(fmt::format("{}: invalid architecture: {} {}", path.string(), v.front().attribute,
                                 v.front().message));
  }
  return a;
}

/// JSONL of architectures, either bare or under "arch"; header lines carrying
/// format_version are skipped.
std::vector<Architecture> load_archs(const SearchSpace& space, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open {}", path.string()));
  std::vector<Architecture> out;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const Json j = Json::parse(line);
      if (j.contains("format_version")) continue;
      Architecture a = arch_from_value(space, j);
      if (auto v = validate(space, a); !v.empty()) {
        throw InputError(fmt::format("{}:{}: invalid architecture: {} {}", path.string(), line_no,
                                     v.front().attribute, v.front().message));
      }
      out.push_back(std::move(a));
    } catch (const Json::exception& e) {
      throw InputError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
  return out;
}

/// Keyed scores from a predictions file ({arch, prediction}) or an
/// evaluation-records file ({arch, score}).
std::map<std::string, double> load_keyed_scores(const SearchSpace& space, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open {}", path.string()));
  std::map<std::string, double> out;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const Json j = Json::parse(line);
      if (j.contains("format_version")) continue;
      const std::string key = canonical_string(architecture_from_json(space, j.at("arch")));
      const double v = j.contains("prediction") ? j.at("prediction").get<double>()
                                                : j.at("score").get<double>();
      if (!out.emplace(key, v).second) {
        throw InputError(fmt::format("{}:{}: duplicate architecture", path.string(), line_no));
      }
    } catch (const Json::exception& e) {
      throw InputError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
  return out;
}

void write_predictions(const fs::path& path, const std::string& metric,
                       const std::vector<Architecture>& archs, const std::vector<double>& values,
                       const std::vector<bool>& ok) {
  std::ostringstream out;
  out << Json{{"format_version", kPredictionsFormatVersion}, {"metric", metric}}.dump() << '\n';
  for (std::size_t i = 0; i < archs.size(); ++i) {
    if (ok[i]) out << Json{{"arch", to_json(archs[i])}, {"prediction", values[i]}}.dump() << '\n';
  }
  write_text(path, out.str());
}

// prompt-render ---------------------------------------------------------------

struct PromptArgs {
  std::string space = "hat";
  std::string config;
  std::string task_examples;
  std::string tfs_eval;
  std::string ablate;
  std::uint64_t seed = 0;
};

void add_prompt_options(CLI::App* cmd, PromptArgs& a, const std::string& config_flag) {
  cmd->add_option("--space", a.space, "Search space: hat, bench-tiny or a JSON file");
  cmd->add_option(config_flag, a.config, "Prompt configuration JSON");
  cmd->add_option("--task-examples", a.task_examples, "JSONL of {input, output} task examples");
  cmd->add_option("--tfs-eval", a.tfs_eval, "Evaluation records to draw demonstrations from");
  cmd->add_option("--ablate", a.ablate, "Comma-separated components to leave out");
  cmd->add_option("--seed", a.seed, "Seed for the demonstration split");
}

PromptConfig prompt_config(const PromptArgs& a) {
  PromptConfig cfg = a.config.empty() ? PromptConfig{} : PromptConfig::from_json(read_json_file(a.config));
  for (const auto& name : split_list(a.ablate)) cfg.toggles.set(component_from_name(name), false);
  cfg.validate();
  return cfg;
}

void add_prompt_inputs(RunManifest& m, const PromptArgs& a) {
  for (const auto& p : {a.config, a.task_examples, a.tfs_eval}) {
    if (!p.empty()) m.add_input(p);
  }
}

int run_prompt_render(const PromptArgs& a, const std::string& test_arch, const fs::path& out,
                      const std::string& cmdline) {
  const SearchSpace space = resolve_space(a.space);
  const PromptConfig cfg = prompt_config(a);
  const auto ctx = load_prompt_context(space, cfg, a.task_examples, a.tfs_eval, a.seed);
  write_text(out, ctx.render(load_test_arch(space, test_arch)));

  RunManifest m(cmdline, a.seed);
  m.set_config(cfg.to_json());
  add_prompt_inputs(m, a);
  m.add_input(test_arch);
  m.add_output(out);
  m.write(manifest_path_for(out));
  spdlog::info("wrote {}", out.string());
  return 0;
}

// pp-predict ------------------------------------------------------------------

struct PpArgs {
  PromptArgs prompt;
  std::string endpoint;
  std::string archs;
  std::string out;
  bool cost_only = false;
  double price_per_1k = 0.03;
  std::optional<std::int64_t> tokens_per_query;
};

int run_pp_predict(const PpArgs& a, const std::string& cmdline) {
  CostModel cost;
  cost.price_per_1k_tokens_micros = std::llround(a.price_per_1k * 1e6);
  cost.tokens_per_query = a.tokens_per_query;
  const SearchSpace space = resolve_space(a.prompt.space);
  const auto archs = load_archs(space, a.archs);
  if (a.cost_only) {
    fmt::print("{}\n", estimate_cost(cost, archs.size()).dollars());
    return 0;
  }
  if (a.endpoint.empty() || a.out.empty()) {
    throw ConfigError("pp-predict needs --endpoint-config and --out unless --cost-only is given");
  }
  const PromptConfig cfg = prompt_config(a.prompt);
  auto endpoint = LlmEndpointConfig::from_json(read_json_file(a.endpoint));
  endpoint.metric_name = cfg.performance_metric_name;
  auto ctx = std::make_shared<PromptContext>(
      load_prompt_context(space, cfg, a.prompt.task_examples, a.prompt.tfs_eval, a.prompt.seed));
  auto client = std::make_shared<const LlmClient>(endpoint);
  const LlmPredictor predictor(client, [ctx](const Architecture& arch) { return ctx->render(arch); });

  auto outcome = predictor.predict_each(archs);
  std::vector<bool> ok(archs.size(), true);
  std::optional<ErrorKind> first_failure;
  for (std::size_t i = 0; i < archs.size(); ++i) {
    if (!outcome.errors[i]) continue;
    ok[i] = false;
    try {
      std::rethrow_exception(outcome.errors[i]);
    } catch (const ParseError& e) {
      spdlog::error("architecture {}: {} (reply: {})", i, e.what(), e.raw_reply());
      if (!first_failure) first_failure = e.kind();
    } catch (const Error& e) {
      spdlog::error("architecture {}: {}", i, e.what());
      if (!first_failure) first_failure = e.kind();
    }
  }
  write_predictions(a.out, cfg.performance_metric_name, archs, outcome.values, ok);

  RunManifest m(cmdline, a.prompt.seed);
  m.set_config(Json{{"prompt", cfg.to_json()}, {"endpoint", endpoint.to_json()}});
  add_prompt_inputs(m, a.prompt);
  m.add_input(a.endpoint);
  m.add_input(a.archs);
  m.add_output(a.out);
  m.set_extra("requests_sent", client->requests_sent());
  m.set_extra("estimated_cost_usd", estimate_cost(cost, client->requests_sent()).dollars());
  m.set_extra("measured_cost_usd", measured_cost(cost, *client, client->requests_sent()).dollars());
  m.write(manifest_path_for(a.out));

  const auto failed = static_cast<std::size_t>(std::count(ok.begin(), ok.end(), false));
  fmt::print("predicted {} of {} architectures ({} requests)\n", archs.size() - failed, archs.size(),
             client->requests_sent());
  return first_failure ? exit_code(*first_failure) : 0;
}

// distill ---------------------------------------------------------------------

int run_build_dataset(const std::string& space_spec, const std::string& teacher_spec,
                      std::size_t n, std::uint64_t seed, const fs::path& out,
                      const std::string& progress, const std::string& cmdline) {
  const SearchSpace space = resolve_space(space_spec);
  const auto teacher = make_predictor(space, teacher_spec);
  const fs::path progress_path(progress);
  const auto data =
      build_distill_dataset(space, *teacher, n, seed, progress.empty() ? nullptr : &progress_path);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_dataset(data, out);

  RunManifest m(cmdline, seed);
  m.set_config(Json{{"space", to_json(space)}, {"teacher", teacher_spec}, {"n", n}});
  for (const auto& p : predictor_inputs(teacher_spec)) m.add_input(p);
  m.add_output(out);
  m.write(manifest_path_for(out));
  fmt::print("wrote {} rows labelled by {}\n", data.size(), teacher->name());
  return 0;
}

int run_train(const std::string& space_spec, const fs::path& data_path, const std::string& config,
              std::optional<int> steps, std::uint64_t seed, const fs::path& out,
              const std::string& cmdline) {
  const SearchSpace space = resolve_space(space_spec);
  TrainingConfig cfg = config.empty() ? TrainingConfig{} : TrainingConfig::from_json(read_json_file(config));
  if (steps) cfg.steps = *steps;
  const auto data = load_dataset(data_path);
  const auto model = train_regressor<float>(data, FeatureNormalization::from_space(space), cfg, seed);
  for (const auto& w : model.warnings) spdlog::warn("{}", w);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_model(model, out);

  RunManifest m(cmdline, seed);
  m.set_config(cfg.to_json());
  m.add_input(data_path);
  if (!config.empty()) m.add_input(config);
  m.add_output(out);
  m.set_extra("initial_loss", model.initial_loss);
  m.set_extra("final_loss", model.final_loss);
  m.write(manifest_path_for(out));
  fmt::print("initial loss: {:.6f}\nfinal loss: {:.6f}\n", model.initial_loss, model.final_loss);
  return 0;
}

int run_distill_predict(const std::string& space_spec, const fs::path& model_path,
                        const fs::path& archs_path, const fs::path& out, const std::string& cmdline) {
  const SearchSpace space = resolve_space(space_spec);
  const MlpPredictor predictor(space, load_model(model_path));
  const auto archs = load_archs(space, archs_path);
  const auto values = predictor.predict_batch(archs);
  write_predictions(out, "BLEU", archs, values, std::vector<bool>(archs.size(), true));

  RunManifest m(cmdline, 0);
  m.add_input(model_path);
  m.add_input(archs_path);
  m.add_output(out);
  m.write(manifest_path_for(out));
  fmt::print("predicted {} architectures\n", archs.size());
  return 0;
}

// eval ------------------------------------------------------------------------

int run_eval(const std::string& space_spec, const fs::path& pred_path, const fs::path& truth_path,
             const std::string& cdf_out, const std::string& cmdline) {
  const SearchSpace space = resolve_space(space_spec);
  const auto preds = load_keyed_scores(space, pred_path);
  const auto truths = load_keyed_scores(space, truth_path);

  std::vector<std::string> missing;
  for (const auto& [key, v] : truths) {
    if (!preds.contains(key)) missing.push_back(fmt::format("missing prediction: {}", key));
  }
  for (const auto& [key, v] : preds) {
    if (!truths.contains(key)) missing.push_back(fmt::format("missing truth: {}", key));
  }
  if (!missing.empty()) {
    std::string msg = fmt::format("{} architectures do not join between {} and {}", missing.size(),
                                  pred_path.string(), truth_path.string());
    for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 10); ++i) msg += "\n  " + missing[i];
    throw InputError(msg);
  }
  std::vector<double> p, t;
  for (const auto& [key, v] : truths) {
    t.push_back(v);
    p.push_back(preds.at(key));
  }
  fmt::print("pairs: {}\nMAE: {:.4f}\n", p.size(), mae(p, t));
  const auto tau = p.size() >= 2 ? kendall_tau(p, t) : std::nullopt;
  if (tau) fmt::print("Kendall-Tau: {:.4f}\n", *tau);
  else fmt::print("Kendall-Tau: undefined\n");

  if (!cdf_out.empty()) {
    const auto profile = discordance_profile(p, t);
    std::string csv = "rank_distance,cumulative_fraction\n";
    for (const auto& [d, f] : profile.cdf) csv += fmt::format("{},{:.6f}\n", d, f);
    write_text(cdf_out, csv);
    RunManifest m(cmdline, 0);
    m.add_input(pred_path);
    m.add_input(truth_path);
    m.add_output(cdf_out);
    m.write(manifest_path_for(cdf_out));
  }
  return 0;
}

// search ----------------------------------------------------------------------

ConstraintModel constraint_model_for(const SearchSpace& space, const SearchConfig& cfg,
                                     std::shared_ptr<const LatencyModel> latency) {
  ConstraintModel model;
  if (cfg.constraint.metric == ConstraintMetric::Latency) {
    model.measure = [space, latency](const Architecture& a) {
      return predict_latency(*latency, encode(space, a));
    };
  } else {
    model.measure = [space](const Architecture& a) { return gflops_estimate(space, a); };
  }
  model.report = [space, latency](const Architecture& a) {
    return to_json(efficiency_report(space, a, *latency));
  };
  return model;
}

std::shared_ptr<const LatencyModel> resolve_latency(const std::string& spec) {
  if (spec.empty() || spec == "bench") return std::make_shared<LatencyModel>(bench_latency());
  return std::make_shared<LatencyModel>(load_latency_model(spec));
}

struct SearchArgs {
  std::string space = "hat";
  std::string config;
  std::string predictor_a = "gold";
  std::string predictor_b = "gold";
  std::string latency_model = "bench";
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> threshold;
};

int run_search_cmd(const SearchArgs& a, const std::string& cmdline) {
  const SearchSpace space = resolve_space(a.space);
  SearchConfig cfg = a.config.empty() ? SearchConfig{} : SearchConfig::from_json(read_json_file(a.config));
  if (a.seed) cfg.seed = *a.seed;
  if (a.threshold) cfg.constraint.threshold = *a.threshold;
  cfg.validate();
  const auto pa = make_predictor(space, a.predictor_a);
  const auto pb = a.predictor_b == a.predictor_a ? nullptr : make_predictor(space, a.predictor_b);
  const Predictor& predictor_b = pb ? *pb : *pa;
  const auto latency = resolve_latency(a.latency_model);

  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  RunManifest m(cmdline, cfg.seed);
  m.set_config(Json{{"search", cfg.to_json()},
                    {"predictor_a", a.predictor_a},
                    {"predictor_b", a.predictor_b},
                    {"latency_model", a.latency_model},
                    {"space", to_json(space)}});
  if (!a.config.empty()) m.add_input(a.config);
  for (const auto& s : {a.predictor_a, a.predictor_b}) {
    for (const auto& p : predictor_inputs(s)) m.add_input(p);
  }
  if (a.latency_model != "bench" && !a.latency_model.empty()) m.add_input(a.latency_model);

  std::ofstream trace(dir / "trace.jsonl", std::ios::trunc);
  if (!trace) throw InputError(fmt::format("cannot write {}", (dir / "trace.jsonl").string()));
  trace << Json{{"format_version", kTraceFormatVersion}}.dump() << '\n';
  SearchHooks hooks;
  hooks.on_iteration = [&](const IterationRecord& r) { trace << to_json(r).dump() << '\n' << std::flush; };
  m.add_output(dir / "trace.jsonl");

  SearchTrace result;
  try {
    result = run_search(space, *pa, predictor_b, constraint_model_for(space, cfg, latency), cfg, hooks);
  } catch (const Error&) {
    m.set_extra("status", "failed");
    m.write(dir / "manifest.json");
    throw;
  }
  write_text(dir / "summary.json", summary_json(result, cfg).dump(2) + "\n");
  m.add_output(dir / "summary.json");
  m.set_extra("status", "ok");
  m.set_extra("search_seconds", result.search_seconds);
  m.write(dir / "manifest.json");

  const auto& eff = result.efficiency;
  fmt::print("predicted_score,latency_ms,gflops,size_millions,search_seconds\n");
  fmt::print("{:.4f},{:.2f},{:.3f},{:.2f},{:.3f}\n", result.best_predicted_score,
             eff.value("latency_ms", 0.0), eff.value("gflops", 0.0),
             eff.value("model_size_millions", 0.0), result.search_seconds);
  return 0;
}

// bench -----------------------------------------------------------------------

struct SweepArgs {
  std::string config;
  std::string predictor_a = "sim:sigma=0.5,bias=0,seed=0";
  std::string predictor_b = "gold";
  std::string thresholds;
  std::string seeds;
  std::string out_dir;
};

int run_sweep(const SweepArgs& a, const std::string& cmdline) {
  const SyntheticTask task = make_bench_task();
  SearchConfig base = a.config.empty() ? SearchConfig{} : SearchConfig::from_json(read_json_file(a.config));
  std::vector<double> thresholds{base.constraint.threshold};
  if (!a.thresholds.empty()) {
    thresholds.clear();
    for (const auto& t : split_list(a.thresholds)) thresholds.push_back(std::stod(t));
  }
  std::vector<std::uint64_t> seeds{base.seed};
  if (!a.seeds.empty()) {
    seeds.clear();
    for (const auto& s : split_list(a.seeds)) seeds.push_back(std::stoull(s));
  }
  const auto pa = make_predictor(task.space, a.predictor_a);
  const auto pb = make_predictor(task.space, a.predictor_b);

  std::vector<SweepEntry> entries;
  for (double threshold : thresholds) {
    for (std::uint64_t seed : seeds) {
      SearchConfig c = base;
      c.constraint.threshold = threshold;
      c.seed = seed;
      for (auto& e : window_sweep(c, *pa, *pb)) entries.push_back(std::move(e));
    }
  }
  const auto rows = sweep(entries, task);
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  write_text(dir / "sweep.csv", sweep_csv(rows));
  write_text(dir / "sweep.json", sweep_json(rows).dump(2) + "\n");

  RunManifest m(cmdline, seeds.front());
  m.set_config(Json{{"search", base.to_json()},
                    {"predictor_a", a.predictor_a},
                    {"predictor_b", a.predictor_b},
                    {"thresholds", thresholds},
                    {"seeds", seeds}});
  if (!a.config.empty()) m.add_input(a.config);
  m.add_output(dir / "sweep.csv");
  m.add_output(dir / "sweep.json");
  m.write(dir / "manifest.json");
  std::cout << sweep_csv(rows);
  const bool all_ok = std::all_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.ok; });
  return all_ok ? 0 : 4;
}

int run_report(const std::string& spec, std::size_t n, std::uint64_t eval_seed,
               const std::string& seeds_list, const std::string& out, const std::string& cmdline) {
  const SyntheticTask task = make_bench_task();
  const auto eval_set = gold_eval_set(task, n, eval_seed);
  std::vector<std::uint64_t> seeds;
  for (const auto& s : split_list(seeds_list)) seeds.push_back(std::stoull(s));
  PredictorFactory factory = [&](std::uint64_t seed) {
    if (spec == "sim" || spec.starts_with("sim:")) {
      const std::string sep = spec == "sim" ? ":" : ",";
      return make_predictor(task.space, fmt::format("{}{}seed={}", spec, sep, seed));
    }
    return make_predictor(task.space, spec);
  };
  const auto report =
      evaluate_predictor(factory, eval_set, seeds, fmt::format("bench-gold-{}-seed{}", n, eval_seed));
  for (const auto& s : report.seeds) {
    if (s.ok) {
      fmt::print("seed {}: MAE {:.4f}, Kendall-Tau {}\n", s.seed, s.mae,
                 s.kendall_tau ? fmt::format("{:.4f}", *s.kendall_tau) : "undefined");
    } else {
      fmt::print("seed {}: failed ({})\n", s.seed, s.error);
    }
  }
  if (report.mean_mae) fmt::print("mean MAE: {:.4f}\n", *report.mean_mae);
  if (report.mean_kendall_tau) fmt::print("mean Kendall-Tau: {:.4f}\n", *report.mean_kendall_tau);
  if (!out.empty()) {
    write_text(out, to_json(report).dump(2) + "\n");
    RunManifest m(cmdline, eval_seed);
    m.set_config(Json{{"predictor", spec}, {"n", n}, {"seeds", seeds}});
    for (const auto& p : predictor_inputs(spec)) m.add_input(p);
    m.add_output(out);
    m.write(manifest_path_for(out));
  }
  return report.mean_mae ? 0 : 5;
}

// latency-model ---------------------------------------------------------------

int run_latency_model(const std::string& kind, double intercept, double slope,
                      const std::string& space_spec, std::size_t n, std::uint64_t seed,
                      std::optional<int> steps, const fs::path& out, const std::string& cmdline) {
  const AnalyticLatency analytic{intercept, slope};
  LatencyModel model(analytic);
  if (kind == "regressor") {
    TrainingConfig cfg;
    if (steps) cfg.steps = *steps;
    model = fit_latency_regressor(resolve_space(space_spec), analytic, n, seed, cfg);
  } else if (kind != "analytic") {
    throw ConfigError(fmt::format("unknown latency model kind '{}'", kind));
  }
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_latency_model(model, out);
  RunManifest m(cmdline, seed);
  m.set_config(Json{{"kind", kind}, {"intercept_ms", intercept}, {"slope_ms", slope}, {"n", n}});
  m.add_output(out);
  m.write(manifest_path_for(out));
  fmt::print("wrote {} latency model to {}\n", kind, out.string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("hsnas"));
  const std::string cmdline = command_line(argc, argv);

  CLI::App app{"Hybrid-search NAS with LLM performance predictors"};
  app.set_version_flag("--version", HSNAS_VERSION);
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  PromptArgs render;
  std::string test_arch, render_out;
  auto* render_cmd = app.add_subcommand("prompt-render", "Render a performance-prediction prompt");
  add_prompt_options(render_cmd, render, "--config");
  render_cmd->add_option("--test-arch", test_arch, "Architecture JSON to predict")->required();
  render_cmd->add_option("--out", render_out, "Prompt text output")->required();

  PpArgs pp;
  auto* pp_cmd = app.add_subcommand("pp-predict", "Predict scores with an LLM endpoint");
  add_prompt_options(pp_cmd, pp.prompt, "--prompt-config");
  pp_cmd->add_option("--endpoint-config", pp.endpoint, "Endpoint configuration JSON");
  pp_cmd->add_option("--archs", pp.archs, "JSONL of architectures")->required();
  pp_cmd->add_option("--out", pp.out, "JSONL of predictions");
  pp_cmd->add_flag("--cost-only", pp.cost_only, "Print the estimated cost and exit");
  pp_cmd->add_option("--price-per-1k", pp.price_per_1k, "Dollars per 1K tokens");
  pp_cmd->add_option("--tokens-per-query", pp.tokens_per_query, "Tokens per query (default 1000/3)");

  auto* distill_cmd = app.add_subcommand("distill", "Distill a predictor into an MLP");
  distill_cmd->require_subcommand(1);
  std::string ds_space = "hat", ds_teacher, ds_out, ds_progress;
  std::size_t ds_n = 3000;
  std::uint64_t ds_seed = 0;
  auto* build_cmd = distill_cmd->add_subcommand("build-dataset", "Label sampled architectures");
  build_cmd->add_option("--space", ds_space, "Search space");
  build_cmd->add_option("--teacher", ds_teacher, "Teacher predictor spec")->required();
  build_cmd->add_option("--n", ds_n, "Number of architectures");
  build_cmd->add_option("--seed", ds_seed, "Sampling seed");
  build_cmd->add_option("--out", ds_out, "Dataset JSONL")->required();
  build_cmd->add_option("--progress", ds_progress, "Partial dataset written after every chunk");

  std::string tr_space = "hat", tr_data, tr_config, tr_out;
  std::optional<int> tr_steps;
  std::uint64_t tr_seed = 0;
  auto* train_cmd = distill_cmd->add_subcommand("train", "Train the MLP regressor");
  train_cmd->add_option("--space", tr_space, "Search space (feature bounds)");
  train_cmd->add_option("--data", tr_data, "Dataset JSONL")->required();
  train_cmd->add_option("--config", tr_config, "Training configuration JSON");
  train_cmd->add_option("--steps", tr_steps, "Override the number of steps");
  train_cmd->add_option("--seed", tr_seed, "Training seed");
  train_cmd->add_option("--out", tr_out, "Model JSON")->required();

  std::string dp_space = "hat", dp_model, dp_archs, dp_out;
  auto* dpredict_cmd = distill_cmd->add_subcommand("predict", "Predict with a trained MLP");
  dpredict_cmd->add_option("--space", dp_space, "Search space");
  dpredict_cmd->add_option("--model", dp_model, "Model JSON")->required();
  dpredict_cmd->add_option("--archs", dp_archs, "JSONL of architectures")->required();
  dpredict_cmd->add_option("--out", dp_out, "JSONL of predictions")->required();

  std::string ev_space = "hat", ev_pred, ev_truth, ev_cdf;
  auto* eval_cmd = app.add_subcommand("eval", "MAE and Kendall-Tau of predictions against truth");
  eval_cmd->add_option("--space", ev_space, "Search space");
  eval_cmd->add_option("--pred-file", ev_pred, "Predictions JSONL")->required();
  eval_cmd->add_option("--truth-file", ev_truth, "Evaluation records JSONL")->required();
  eval_cmd->add_option("--cdf-out", ev_cdf, "Discordance CDF as CSV");

  SearchArgs sa;
  auto* search_cmd = app.add_subcommand("search", "Hybrid evolutionary search");
  search_cmd->add_option("--space", sa.space, "Search space");
  search_cmd->add_option("--config", sa.config, "Search configuration JSON");
  search_cmd->add_option("--predictor-a", sa.predictor_a, "Predictor inside the window");
  search_cmd->add_option("--predictor-b", sa.predictor_b, "Predictor outside the window");
  search_cmd->add_option("--latency-model", sa.latency_model, "Latency model JSON or 'bench'");
  search_cmd->add_option("--seed", sa.seed, "Override the configured seed");
  search_cmd->add_option("--threshold", sa.threshold, "Override the constraint threshold");
  search_cmd->add_option("--out-dir", sa.out_dir, "Output directory")->required();

  auto* bench_cmd = app.add_subcommand("bench", "Synthetic benchmark harness");
  bench_cmd->require_subcommand(1);
  SweepArgs sw;
  auto* sweep_cmd = bench_cmd->add_subcommand("sweep", "Baseline plus the six predictor windows");
  sweep_cmd->add_option("--config", sw.config, "Base search configuration JSON");
  sweep_cmd->add_option("--predictor-a", sw.predictor_a, "Predictor inside the window");
  sweep_cmd->add_option("--predictor-b", sw.predictor_b, "Baseline predictor");
  sweep_cmd->add_option("--thresholds", sw.thresholds, "Comma-separated latency thresholds (ms)");
  sweep_cmd->add_option("--seeds", sw.seeds, "Comma-separated seeds");
  sweep_cmd->add_option("--out-dir", sw.out_dir, "Output directory")->required();

  std::string rp_spec, rp_seeds = "0,1,2", rp_out;
  std::size_t rp_n = 1000;
  std::uint64_t rp_eval_seed = 0;
  auto* report_cmd = bench_cmd->add_subcommand("report", "Predictor quality on gold-labelled archs");
  report_cmd->add_option("--predictor", rp_spec, "Predictor spec")->required();
  report_cmd->add_option("--n", rp_n, "Evaluation set size");
  report_cmd->add_option("--eval-seed", rp_eval_seed, "Evaluation set seed");
  report_cmd->add_option("--seeds", rp_seeds, "Comma-separated predictor seeds");
  report_cmd->add_option("--out", rp_out, "Report JSON");

  std::string lm_kind = "analytic", lm_space = "hat", lm_out;
  double lm_intercept = bench_latency().intercept_ms, lm_slope = bench_latency().slope_ms;
  std::size_t lm_n = 2000;
  std::uint64_t lm_seed = 0;
  std::optional<int> lm_steps;
  auto* lm_cmd = app.add_subcommand("latency-model", "Write a latency model file");
  lm_cmd->add_option("--kind", lm_kind, "analytic or regressor");
  lm_cmd->add_option("--intercept", lm_intercept, "Intercept (ms)");
  lm_cmd->add_option("--slope", lm_slope, "Slope (ms per layer per 1000 FFN units)");
  lm_cmd->add_option("--space", lm_space, "Search space for regressor fitting");
  lm_cmd->add_option("--n", lm_n, "Regressor training rows");
  lm_cmd->add_option("--seed", lm_seed, "Seed");
  lm_cmd->add_option("--steps", lm_steps, "Regressor training steps");
  lm_cmd->add_option("--out", lm_out, "Latency model JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*render_cmd) return run_prompt_render(render, test_arch, render_out, cmdline);
    if (*pp_cmd) return run_pp_predict(pp, cmdline);
    if (*build_cmd) return run_build_dataset(ds_space, ds_teacher, ds_n, ds_seed, ds_out, ds_progress, cmdline);
    if (*train_cmd) return run_train(tr_space, tr_data, tr_config, tr_steps, tr_seed, tr_out, cmdline);
    if (*dpredict_cmd) return run_distill_predict(dp_space, dp_model, dp_archs, dp_out, cmdline);
    if (*eval_cmd) return run_eval(ev_space, ev_pred, ev_truth, ev_cdf, cmdline);
    if (*search_cmd) return run_search_cmd(sa, cmdline);
    if (*sweep_cmd) return run_sweep(sw, cmdline);
    if (*report_cmd) return run_report(rp_spec, rp_n, rp_eval_seed, rp_seeds, rp_out, cmdline);
    if (*lm_cmd) {
      return run_latency_model(lm_kind, lm_intercept, lm_slope, lm_space, lm_n, lm_seed, lm_steps,
                               lm_out, cmdline);
    }
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return 3;
  } catch (const std::exception& e) {
    spdlog::error("unexpected failure: {}", e.what());
    return 1;
  }
  return 2;
}
