#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "hsnas/json.hpp"
#include "hsnas/llm.hpp"
#include "hsnas/predictor.hpp"
#include "hsnas/prompt.hpp"
#include "hsnas/space.hpp"

namespace hsnas {

/// Resolves --space values: "hat", "bench-tiny", or a JSON file.
SearchSpace resolve_space(const std::string& spec);

/// Everything needed to render a prompt for any test architecture.
struct PromptContext {
  PromptConfig config;
  HyperparameterGlossary glossary = default_glossary();
  std::vector<TaskExample> task_examples;
  std::vector<Demonstration> demos;

  std::string render(const Architecture& test_arch) const;
};

/// Loads task examples and evaluation records, then picks the
/// demonstrations with split_tfs_eval(records, cfg.n_arch, split_seed).
/// Either path may be empty when the matching component is ablated.
PromptContext load_prompt_context(const SearchSpace& space, const PromptConfig& cfg,
                                  const std::filesystem::path& task_examples,
                                  const std::filesystem::path& tfs_eval, std::uint64_t split_seed);

/// An LLM predictor description file:
///
///   {"format_version": 1, "endpoint": {...}, "prompt": {...},
///    "task_examples": path, "tfs_eval": path, "split_seed": n}
///
/// Relative paths resolve against the file's directory.
std::unique_ptr<Predictor> load_llm_predictor(const SearchSpace& space,
                                              const std::filesystem::path& spec_path);

/// Predictor mini-grammar:
///
///   gold                          the synthetic bench score
///   sim:sigma=S,bias=B,seed=N     gold + B + N(0, S^2), keys optional
///   mlp:PATH                      a trained regressor file
///   llm:PATH                      an LLM predictor description file
///
/// Throws ConfigError on anything else.
std::unique_ptr<Predictor> make_predictor(const SearchSpace& space, const std::string& spec);

/// File paths a predictor spec reads, for run manifests.
std::vector<std::filesystem::path> predictor_inputs(const std::string& spec);

}  // namespace hsnas
