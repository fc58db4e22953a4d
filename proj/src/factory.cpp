#include "hsnas/factory.hpp"

#include <charconv>

#include <fmt/format.h>

#include "hsnas/bench.hpp"
#include "hsnas/distill.hpp"
#include "hsnas/error.hpp"
#include "hsnas/records.hpp"

namespace hsnas {

namespace {

constexpr int kLlmSpecFormatVersion = 1;

double parse_real(std::string_view key, std::string_view text) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw ConfigError(fmt::format("predictor parameter {}='{}' is not a number", key, text));
  }
  return v;
}

std::unique_ptr<Predictor> make_simulated(const SearchSpace& space, std::string_view params) {
  double sigma = 0.0, bias = 0.0;
  std::uint64_t seed = 0;
  while (!params.empty()) {
    const auto comma = params.find(',');
    const std::string_view item = params.substr(0, comma);
    params = comma == std::string_view::npos ? std::string_view{} : params.substr(comma + 1);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(fmt::format("expected key=value in simulated predictor spec, got '{}'", item));
    }
    const auto key = item.substr(0, eq), value = item.substr(eq + 1);
    if (key == "sigma") sigma = parse_real(key, value);
    else if (key == "bias") bias = parse_real(key, value);
    else if (key == "seed") seed = static_cast<std::uint64_t>(parse_real(key, value));
    else throw ConfigError(fmt::format("unknown simulated predictor parameter '{}'", key));
  }
  ScoreFunction gold = [space](const Architecture& a) { return bench_gold(space, a); };
  return std::make_unique<SimulatedPredictor>(
      std::move(gold), sigma, bias, seed, fmt::format("sim(sigma={},bias={},seed={})", sigma, bias, seed));
}

std::filesystem::path relative_to(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

SearchSpace resolve_space(const std::string& spec) {
  if (spec == "hat") return SearchSpace::hat_default();
  if (spec == "bench-tiny") return tiny_bench_space();
  return load_search_space(spec);
}

std::string PromptContext::render(const Architecture& test_arch) const {
  return render_prompt(config, glossary, task_examples, demos, test_arch);
}

PromptContext load_prompt_context(const SearchSpace& space, const PromptConfig& cfg,
                                  const std::filesystem::path& task_examples,
                                  const std::filesystem::path& tfs_eval, std::uint64_t split_seed) {
  PromptContext ctx;
  ctx.config = cfg;
  if (cfg.toggles[PromptComponent::Instr2]) {
    if (task_examples.empty()) throw ConfigError("instruction 2 needs a task examples file");
    ctx.task_examples = load_task_examples(task_examples);
  }
  if (cfg.toggles[PromptComponent::Demonstrations]) {
    if (tfs_eval.empty()) throw ConfigError("demonstrations need an evaluation records file");
    const auto records = load_eval_records(space, tfs_eval).records;
    ctx.demos = demonstrations_from(split_tfs_eval(records, cfg.n_arch, split_seed).demos, cfg);
  }
  return ctx;
}

std::unique_ptr<Predictor> load_llm_predictor(const SearchSpace& space,
                                              const std::filesystem::path& spec_path) {
  const Json j = read_json_file(spec_path);
  const auto base = spec_path.parent_path();
  try {
    if (j.value("format_version", 0) != kLlmSpecFormatVersion) {
      throw ConfigError(fmt::format("{}: format_version must be {}", spec_path.string(),
                                    kLlmSpecFormatVersion));
    }
    auto endpoint = LlmEndpointConfig::from_json(j.at("endpoint"));
    if (endpoint.cache_path && endpoint.cache_path->is_relative()) {
      endpoint.cache_path = base / *endpoint.cache_path;
    }
    const auto prompt_cfg = PromptConfig::from_json(j.value("prompt", Json::object()));
    endpoint.metric_name = prompt_cfg.performance_metric_name;
    auto ctx = std::make_shared<PromptContext>(load_prompt_context(
        space, prompt_cfg, relative_to(base, j.value("task_examples", std::string())),
        relative_to(base, j.value("tfs_eval", std::string())), j.value("split_seed", 0ULL)));
    auto client = std::make_shared<const LlmClient>(endpoint);
    return std::make_unique<LlmPredictor>(
        std::move(client), [ctx](const Architecture& a) { return ctx->render(a); },
        fmt::format("llm-pp({})", endpoint.model_name));
  } catch (const Json::exception& e) {
    throw ConfigError(fmt::format("{}: {}", spec_path.string(), e.what()));
  }
}

std::unique_ptr<Predictor> make_predictor(const SearchSpace& space, const std::string& spec) {
  if (spec == "gold") {
    return std::make_unique<FunctionPredictor>(
        "gold", [space](const Architecture& a) { return bench_gold(space, a); });
  }
  if (spec == "sim") return make_simulated(space, {});
  if (spec.starts_with("sim:")) return make_simulated(space, std::string_view(spec).substr(4));
  if (spec.starts_with("mlp:")) {
    return std::make_unique<MlpPredictor>(space, load_model(spec.substr(4)));
  }
  if (spec.starts_with("llm:")) return load_llm_predictor(space, spec.substr(4));
  throw ConfigError(fmt::format(
      "unknown predictor '{}' (expected gold, sim:sigma=..,bias=..,seed=.., mlp:PATH or llm:PATH)",
      spec));
}

std::vector<std::filesystem::path> predictor_inputs(const std::string& spec) {
  if (spec.starts_with("mlp:") || spec.starts_with("llm:")) return {spec.substr(4)};
  return {};
}

}  // namespace hsnas
