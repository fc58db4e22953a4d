#include "hsnas/prompt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <regex>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include "hsnas/error.hpp"

namespace hsnas {

namespace {

constexpr std::array<std::string_view, 8> kComponentNames{
    "role", "instr1", "instr2", "instr3", "instr4", "instr5", "hyperparameters", "demonstrations"};

std::string format_gene(const GeneValue& v) {
  if (const int* x = std::get_if<int>(&v)) return std::to_string(*x);
  return fmt::format("[{}]", fmt::join(std::get<LayerValues>(v), ", "));
}

void append_arch_lines(std::string& out, const Architecture& arch,
                       const HyperparameterGlossary& glossary) {
  for (const auto& gene : arch.genes()) {
    const bool listed =
        glossary.empty() || std::any_of(glossary.begin(), glossary.end(),
                                        [&](const auto& entry) { return entry.first == gene.name; });
    if (listed) out += fmt::format("{}: {}\n", gene.name, format_gene(gene.value));
  }
}

}  // namespace

std::string_view component_name(PromptComponent c) noexcept {
  return kComponentNames[static_cast<std::size_t>(c)];
}

PromptComponent component_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kComponentNames.size(); ++i) {
    if (kComponentNames[i] == name) return kPromptComponents[i];
  }
  throw ConfigError(fmt::format("unknown prompt component '{}' (expected one of {})", name,
                                fmt::join(kComponentNames, ", ")));
}

void PromptConfig::validate() const {
  if (toggles[PromptComponent::Demonstrations] && n_arch < 1) {
    throw ConfigError("n_arch must be >= 1 when demonstrations are enabled");
  }
}

Json PromptConfig::to_json() const {
  Json ablate = Json::array();
  for (auto c : kPromptComponents) {
    if (!toggles[c]) ablate.push_back(component_name(c));
  }
  return Json{{"task_name", task_name},
              {"dataset_name", dataset_name},
              {"source_lang", source_lang},
              {"target_lang", target_lang},
              {"performance_metric_name", performance_metric_name},
              {"efficiency_metric_name", efficiency_metric_name},
              {"efficiency_metric_description", efficiency_metric_description},
              {"backbone_citation", backbone_citation},
              {"n_task", n_task},
              {"n_arch", n_arch},
              {"ablate", std::move(ablate)}};
}

PromptConfig PromptConfig::from_json(const Json& j) {
  PromptConfig c;
  try {
    c.task_name = j.value("task_name", c.task_name);
    c.dataset_name = j.value("dataset_name", c.dataset_name);
    c.source_lang = j.value("source_lang", c.source_lang);
    c.target_lang = j.value("target_lang", c.target_lang);
    c.performance_metric_name = j.value("performance_metric_name", c.performance_metric_name);
    c.efficiency_metric_name = j.value("efficiency_metric_name", c.efficiency_metric_name);
    c.efficiency_metric_description =
        j.value("efficiency_metric_description", c.efficiency_metric_description);
    c.backbone_citation = j.value("backbone_citation", c.backbone_citation);
    c.n_task = j.value("n_task", c.n_task);
    c.n_arch = j.value("n_arch", c.n_arch);
    if (auto it = j.find("ablate"); it != j.end()) {
      for (const auto& name : *it) c.toggles.set(component_from_name(name.get<std::string>()), false);
    }
  } catch (const Json::exception& e) {
    throw ConfigError(fmt::format("malformed prompt config: {}", e.what()));
  }
  c.validate();
  return c;
}

HyperparameterGlossary default_glossary() {
  using namespace keys;
  return {
      {std::string(kEncoderEmbedDim), "corresponds to encoder embedding dimension"},
      {std::string(kEncoderLayerNum), "corresponds to number of encoder layers"},
      {std::string(kEncoderFfnDims), "correspond to embedding dimension of each FFN layer in encoder"},
      {std::string(kEncoderSelfHeads),
       "correspond to number of self attention heads in each encoder layer"},
      {std::string(kDecoderEmbedDim), "corresponds to decoder embedding dimension"},
      {std::string(kDecoderLayerNum), "corresponds to number of decoder layers"},
      {std::string(kDecoderFfnDims), "correspond to embedding dimension of each FFN layer in decoder"},
      {std::string(kDecoderSelfHeads),
       "correspond to number of self attention heads in each decoder layer"},
      {std::string(kDecoderCrossHeads),
       "correspond to number of cross attention heads in each decoder layer"},
      {std::string(kDecoderArbitraryAttn),
       "correspond to number of encoder layers attended by cross-attention heads in each decoder "
       "layer (-1 means only attend to the last layer; 1 means attend to last two layers, 2 means "
       "attend to last three layers)"},
  };
}

std::vector<TaskExample> load_task_examples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open {}", path.string()));
  std::vector<TaskExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const Json j = Json::parse(line);
      TaskExample ex{j.at("input").get<std::string>(), j.at("output").get<std::string>()};
      if (ex.input.empty() || ex.output.empty()) {
        throw InputError(fmt::format("{}:{}: empty input or output", path.string(), line_no));
      }
      out.push_back(std::move(ex));
    } catch (const Json::exception& e) {
      throw InputError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
  return out;
}

std::vector<Demonstration> demonstrations_from(const std::vector<EvalRecord>& records,
                                               const PromptConfig& cfg) {
  std::string metric = cfg.efficiency_metric_name;
  std::transform(metric.begin(), metric.end(), metric.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  std::vector<Demonstration> out;
  for (const auto& r : records) {
    std::optional<double> eff;
    if (r.efficiency) {
      if (metric.find("flop") != std::string::npos) eff = r.efficiency->gflops;
      else if (metric.find("latency") != std::string::npos) eff = r.efficiency->latency_ms;
      else if (metric.find("size") != std::string::npos || metric.find("param") != std::string::npos)
        eff = r.efficiency->size_millions;
    }
    if (!eff) {
      throw InputError(fmt::format("record lacks the '{}' efficiency value needed for demonstrations",
                                   cfg.efficiency_metric_name));
    }
    out.push_back({r.arch, r.score, *eff});
  }
  return out;
}

std::string render_prompt(const PromptConfig& cfg, const HyperparameterGlossary& glossary,
                          const std::vector<TaskExample>& task_examples,
                          const std::vector<Demonstration>& demos, const Architecture& test_arch) {
  cfg.validate();
  const auto& on = cfg.toggles;
  const std::string& metric = cfg.performance_metric_name;
  const std::string& eff = cfg.efficiency_metric_name;
  if (on[PromptComponent::Instr2] && task_examples.size() < cfg.n_task) {
    throw InputError(fmt::format("instruction 2 needs {} task examples, got {}", cfg.n_task,
                                 task_examples.size()));
  }
  if (on[PromptComponent::Demonstrations] && demos.size() != cfg.n_arch) {
    throw InputError(
        fmt::format("expected {} demonstrations, got {}", cfg.n_arch, demos.size()));
  }

  std::vector<std::string> blocks;
  if (on[PromptComponent::Role]) {
    blocks.push_back(fmt::format(
        "You are a performance estimator for {} task, where you will estimate the {} score for "
        "the test architecture.\n",
        cfg.task_name, metric));
  }

  const std::string direction = fmt::format("{} {} to {} {}", cfg.dataset_name, cfg.source_lang,
                                            cfg.target_lang, cfg.task_name);
  std::string instructions;
  int number = 0;
  if (on[PromptComponent::Instr1]) {
    instructions += fmt::format(
        "{}. You should understand that the {} task is {} and the quality of a configuration is "
        "measured based on {} score.\n",
        ++number, cfg.task_name, direction, metric);
  }
  if (on[PromptComponent::Instr2]) {
    instructions += fmt::format("{}. Some examples for {} are as follows:\n", ++number, direction);
    for (std::size_t i = 0; i < cfg.n_task; ++i) {
      instructions += fmt::format("Example {}:\nInput: {}\nOutput: {}\n", i + 1,
                                  task_examples[i].input, task_examples[i].output);
    }
  }
  if (on[PromptComponent::Instr3]) {
    instructions += fmt::format(
        "{}. You should understand that the backbone architecture is from {} paper, which is a "
        "Transformer based Encoder-Decoder architecture. We use the same hyperparameters and "
        "optimization algorithms.\n",
        ++number, cfg.backbone_citation);
  }
  if (on[PromptComponent::Instr4]) {
    instructions += fmt::format(
        "{}. You should understand that the efficiency of a configuration is measured in terms "
        "of {}.\n",
        ++number, cfg.efficiency_metric_description);
  }
  if (on[PromptComponent::Instr5]) {
    instructions += fmt::format(
        "{}. You should concentrate on the example configurations provided below along with "
        "their {} and {} to understand the complex relationships between architecture "
        "configuration, {} and {}.\n",
        ++number, metric, eff, metric, eff);
  }
  if (number > 0) blocks.push_back("You should follow these instructions:\n" + instructions);

  if (on[PromptComponent::Hyperparameters]) {
    std::string block = "Hyperparameter definition:\n";
    for (const auto& [key, definition] : glossary) block += fmt::format("'{}' {}\n", key, definition);
    blocks.push_back(std::move(block));
  }

  if (on[PromptComponent::Demonstrations]) {
    std::string block;
    for (std::size_t i = 0; i < demos.size(); ++i) {
      block += fmt::format("Example {}:\n", i + 1);
      append_arch_lines(block, demos[i].arch, glossary);
      block += fmt::format("{}: {:.2f}\n{}: {:.1f}\n", metric, demos[i].performance, eff,
                           demos[i].efficiency);
      if (i + 1 < demos.size()) block += '\n';
    }
    blocks.push_back(std::move(block));
  }

  std::string test = "Test Architecture:\n";
  append_arch_lines(test, test_arch, glossary);
  test += metric + ":";
  blocks.push_back(std::move(test));

  std::string out;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (i > 0) out += '\n';
    out += blocks[i];
  }
  return out;
}

double parse_prediction(std::string_view reply, std::string_view metric_name) {
  std::string_view body = reply;
  const auto first = body.find_first_not_of(" \t\r\n");
  body.remove_prefix(first == std::string_view::npos ? body.size() : first);
  if (!metric_name.empty() && body.substr(0, metric_name.size()) == metric_name) {
    std::string_view rest = body.substr(metric_name.size());
    const auto colon = rest.find_first_not_of(" \t");
    if (colon != std::string_view::npos && rest[colon] == ':') body = rest.substr(colon + 1);
  }

  static const std::regex kNumber(R"([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)");
  const std::string text(body);
  auto it = std::sregex_iterator(text.begin(), text.end(), kNumber);
  for (; it != std::sregex_iterator(); ++it) {
    const double v = std::strtod(it->str().c_str(), nullptr);
    if (!std::isfinite(v)) continue;
    if (std::next(it) != std::sregex_iterator()) {
      spdlog::debug("reply holds several numbers, taking the first ({}): {}", v, reply);
    }
    return v;
  }
  throw ParseError(fmt::format("no number in reply for metric {}", metric_name), std::string(reply));
}

TfsSplit split_tfs_eval(const std::vector<EvalRecord>& records, std::size_t n_arch,
                        std::uint64_t seed) {
  if (records.size() <= n_arch) {
    throw InputError(fmt::format("need more than {} records to split, got {}", n_arch,
                                 records.size()));
  }
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> is_demo(records.size(), false);
  TfsSplit split;
  for (std::size_t i = 0; i < n_arch; ++i) {
    is_demo[order[i]] = true;
    split.demos.push_back(records[order[i]]);
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!is_demo[i]) split.eval.push_back(records[i]);
  }
  return split;
}

}  // namespace hsnas
