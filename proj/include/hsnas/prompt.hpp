#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hsnas/json.hpp"
#include "hsnas/records.hpp"
#include "hsnas/space.hpp"

namespace hsnas {

enum class PromptComponent {
  Role,
  Instr1,
  Instr2,
  Instr3,
  Instr4,
  Instr5,
  Hyperparameters,
  Demonstrations,
};

inline constexpr std::array<PromptComponent, 8> kPromptComponents{
    PromptComponent::Role,   PromptComponent::Instr1, PromptComponent::Instr2,
    PromptComponent::Instr3, PromptComponent::Instr4, PromptComponent::Instr5,
    PromptComponent::Hyperparameters, PromptComponent::Demonstrations};

/// "role", "instr1".."instr5", "hyperparameters", "demonstrations".
std::string_view component_name(PromptComponent c) noexcept;
PromptComponent component_from_name(std::string_view name);

struct PromptToggles {
  std::array<bool, 8> enabled{true, true, true, true, true, true, true, true};

  bool operator[](PromptComponent c) const noexcept { return enabled[static_cast<std::size_t>(c)]; }
  void set(PromptComponent c, bool on) noexcept { enabled[static_cast<std::size_t>(c)] = on; }
};

struct PromptConfig {
  std::string task_name = "machine translation";
  std::string dataset_name = "WMT'14";
  std::string source_lang = "English";
  std::string target_lang = "German";
  std::string performance_metric_name = "BLEU";
  std::string efficiency_metric_name = "GFLOPS";
  std::string efficiency_metric_description =
      "gigaFLOPs required for the forward propagation of a single translation example";
  std::string backbone_citation = "\"Attention Is All You Need\" (Vaswani et al., 2017)";
  std::size_t n_task = 5;
  std::size_t n_arch = 10;
  PromptToggles toggles;

  /// Throws ConfigError when n_arch is 0 with demonstrations enabled.
  void validate() const;

  Json to_json() const;
  /// Missing keys keep their defaults; "ablate": [component names] turns
  /// components off.
  static PromptConfig from_json(const Json& j);
};

/// Ordered (hyperparameter key, definition) pairs. Architecture lines in a
/// prompt list only keys that appear here, in architecture gene order; an
/// empty glossary lists every gene.
using HyperparameterGlossary = std::vector<std::pair<std::string, std::string>>;

/// Definitions for the ten HAT hyperparameters, worded after HAT's helper
/// descriptions.
HyperparameterGlossary default_glossary();

struct TaskExample {
  std::string input;
  std::string output;
};

/// JSONL of {"input": text, "output": text}; both must be non-empty.
std::vector<TaskExample> load_task_examples(const std::filesystem::path& path);

struct Demonstration {
  Architecture arch;
  double performance = 0.0;
  double efficiency = 0.0;
};

/// Picks the efficiency value named by cfg.efficiency_metric_name
/// (GFLOPS / latency / size) from each record; InputError when missing.
std::vector<Demonstration> demonstrations_from(const std::vector<EvalRecord>& records,
                                               const PromptConfig& cfg);

/// Renders the performance-prediction prompt. Enabled components appear in
/// a fixed order (role, instructions renumbered 1..k, hyperparameter
/// definitions, demonstrations, test architecture) separated by blank
/// lines. The text ends with the bare "<metric>:" label.
///
/// Throws InputError when instruction 2 is on and fewer than n_task
/// examples are given, or when demonstrations are on and |demos| != n_arch.
std::string render_prompt(const PromptConfig& cfg, const HyperparameterGlossary& glossary,
                          const std::vector<TaskExample>& task_examples,
                          const std::vector<Demonstration>& demos, const Architecture& test_arch);

/// First finite decimal number in the reply after an optional leading
/// "<metric_name>:" label. Throws ParseError carrying the reply otherwise.
double parse_prediction(std::string_view reply, std::string_view metric_name);

struct TfsSplit {
  std::vector<EvalRecord> demos;
  std::vector<EvalRecord> eval;
};

/// Seeded uniform choice of n_arch demonstration records; the rest, in input
/// order, form the evaluation set. Requires |records| > n_arch.
TfsSplit split_tfs_eval(const std::vector<EvalRecord>& records, std::size_t n_arch,
                        std::uint64_t seed);

}  // namespace hsnas
