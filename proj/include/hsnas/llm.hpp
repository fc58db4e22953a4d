#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "hsnas/json.hpp"
#include "hsnas/predictor.hpp"

namespace hsnas {

/// An OpenAI-compatible chat-completion endpoint.
struct LlmEndpointConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string model_name = "gpt-4";
  /// Empty means the endpoint takes no bearer token.
  std::string api_key_env_var = "OPENAI_API_KEY";
  double temperature = 0.0;
  int max_reply_tokens = 16;
  int request_timeout_s = 60;
  int max_retries = 3;
  int max_concurrency = 4;
  std::optional<std::filesystem::path> cache_path;
  std::optional<std::string> system_message;
  std::string metric_name = "BLEU";
  int backoff_initial_ms = 500;
  int backoff_max_ms = 30000;
  /// One extra attempt at temperature 0.7 when a reply has no number.
  bool resample_on_parse_error = false;

  void validate() const;
  Json to_json() const;
  static LlmEndpointConfig from_json(const Json& j);
};

/// Whole micro-dollars, so the cost arithmetic stays exact.
struct Money {
  std::int64_t micros = 0;

  /// "30.00"; rounded half-up to cents.
  std::string dollars() const;
  auto operator<=>(const Money&) const = default;
};

struct CostModel {
  std::int64_t price_per_1k_tokens_micros = 30'000;
  /// nullopt: exactly one third of 1K tokens per query.
  std::optional<std::int64_t> tokens_per_query;

  void validate() const;
};

/// n_queries * tokens_per_query / 1000 * price, rounded half-up to a micro-dollar.
Money estimate_cost(const CostModel& cost, std::uint64_t n_queries);

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view bytes);

/// JSONL store of {"prompt_hash", "model", "value"}; appends are serialized.
class PredictionCache {
 public:
  explicit PredictionCache(std::filesystem::path path);

  std::optional<double> lookup(const std::string& model, const std::string& prompt_hash) const;
  void store(const std::string& model, const std::string& prompt_hash, double value);
  std::size_t size() const;

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, double> entries_;
};

/// Sends prompts to the endpoint and parses numeric replies. Thread-safe.
class LlmClient {
 public:
  explicit LlmClient(LlmEndpointConfig cfg);
  ~LlmClient();

  /// One prediction for one prompt. Cached values short-circuit the network.
  /// TransportError after exhausted retries, ParseError on a non-numeric
  /// reply, ConfigError when the key variable is unset.
  double predict(const std::string& prompt_text) const;

  const LlmEndpointConfig& config() const noexcept { return cfg_; }
  std::uint64_t requests_sent() const noexcept { return requests_.load(); }
  /// Sum of usage.total_tokens over replies that reported it.
  std::uint64_t reported_tokens() const noexcept { return tokens_.load(); }
  std::uint64_t replies_with_usage() const noexcept { return usage_replies_.load(); }

 private:
  std::string complete(const std::string& prompt_text, double temperature) const;

  LlmEndpointConfig cfg_;
  std::string api_key_;
  std::string host_;
  std::string path_prefix_;
  std::unique_ptr<PredictionCache> cache_;
  mutable std::atomic<std::uint64_t> requests_{0};
  mutable std::atomic<std::uint64_t> tokens_{0};
  mutable std::atomic<std::uint64_t> usage_replies_{0};
};

/// Single-shot convenience over a temporary client.
double llm_predict(const LlmEndpointConfig& cfg, const std::string& prompt_text);

/// Prices the reported token usage when every reply carried it, otherwise
/// falls back to the fixed per-query estimate.
Money measured_cost(const CostModel& cost, const LlmClient& client, std::uint64_t n_queries);

using PromptBuilder = std::function<std::string(const Architecture&)>;

/// A Predictor that renders a prompt per architecture and asks the LLM.
/// predict_batch keeps at most max_concurrency requests in flight.
class LlmPredictor final : public Predictor {
 public:
  LlmPredictor(std::shared_ptr<const LlmClient> client, PromptBuilder prompt,
               std::string name = "llm-pp");

  std::string name() const override { return name_; }
  double predict(const Architecture& arch) const override;
  std::vector<double> predict_batch(std::span<const Architecture> archs) const override;

  /// Like predict_batch but keeps going past failures: slot i holds either
  /// the prediction or the exception raised for archs[i].
  struct Outcome {
    std::vector<double> values;
    std::vector<std::exception_ptr> errors;
  };
  Outcome predict_each(std::span<const Architecture> archs) const;

  const LlmClient& client() const noexcept { return *client_; }

 private:
  std::shared_ptr<const LlmClient> client_;
  PromptBuilder prompt_;
  std::string name_;
};

}  // namespace hsnas
