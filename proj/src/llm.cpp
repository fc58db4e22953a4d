#include "hsnas/llm.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include "hsnas/error.hpp"
#include "hsnas/prompt.hpp"

namespace hsnas {

namespace {

constexpr double kResampleTemperature = 0.7;

std::string cache_key(const std::string& model, const std::string& prompt_hash) {
  return model + '\n' + prompt_hash;
}

std::int64_t rounded_div(unsigned __int128 num, unsigned __int128 den) {
  return static_cast<std::int64_t>((num + den / 2) / den);
}

}  // namespace

void LlmEndpointConfig::validate() const {
  if (base_url.empty()) throw ConfigError("base_url must not be empty");
  if (model_name.empty()) throw ConfigError("model_name must not be empty");
  if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
  if (max_concurrency < 1) throw ConfigError("max_concurrency must be >= 1");
  if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
  if (max_reply_tokens < 1) throw ConfigError("max_reply_tokens must be >= 1");
  if (request_timeout_s < 1) throw ConfigError("request_timeout_s must be >= 1");
  if (backoff_initial_ms < 0 || backoff_max_ms < backoff_initial_ms) {
    throw ConfigError("backoff needs 0 <= backoff_initial_ms <= backoff_max_ms");
  }
}

Json LlmEndpointConfig::to_json() const {
  Json j{{"base_url", base_url},
         {"model_name", model_name},
         {"api_key_env_var", api_key_env_var},
         {"temperature", temperature},
         {"max_reply_tokens", max_reply_tokens},
         {"request_timeout_s", request_timeout_s},
         {"max_retries", max_retries},
         {"max_concurrency", max_concurrency},
         {"cache_path", cache_path ? Json(cache_path->string()) : Json(nullptr)},
         {"system_message", system_message ? Json(*system_message) : Json(nullptr)},
         {"metric_name", metric_name},
         {"backoff_initial_ms", backoff_initial_ms},
         {"backoff_max_ms", backoff_max_ms},
         {"resample_on_parse_error", resample_on_parse_error}};
  return j;
}

LlmEndpointConfig LlmEndpointConfig::from_json(const Json& j) {
  LlmEndpointConfig c;
  try {
    c.base_url = j.value("base_url", c.base_url);
    c.model_name = j.value("model_name", c.model_name);
    c.api_key_env_var = j.value("api_key_env_var", c.api_key_env_var);
    c.temperature = j.value("temperature", c.temperature);
    c.max_reply_tokens = j.value("max_reply_tokens", c.max_reply_tokens);
    c.request_timeout_s = j.value("request_timeout_s", c.request_timeout_s);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.max_concurrency = j.value("max_concurrency", c.max_concurrency);
    if (auto it = j.find("cache_path"); it != j.end() && !it->is_null()) {
      c.cache_path = it->get<std::string>();
    }
    if (auto it = j.find("system_message"); it != j.end() && !it->is_null()) {
      c.system_message = it->get<std::string>();
    }
    c.metric_name = j.value("metric_name", c.metric_name);
    c.backoff_initial_ms = j.value("backoff_initial_ms", c.backoff_initial_ms);
    c.backoff_max_ms = j.value("backoff_max_ms", c.backoff_max_ms);
    c.resample_on_parse_error = j.value("resample_on_parse_error", c.resample_on_parse_error);
  } catch (const Json::exception& e) {
    throw ConfigError(fmt::format("malformed endpoint config: {}", e.what()));
  }
  c.validate();
  return c;
}

std::string Money::dollars() const {
  const std::int64_t cents = (micros + 5'000) / 10'000;
  return fmt::format("{}.{:02}", cents / 100, cents % 100);
}

void CostModel::validate() const {
  if (price_per_1k_tokens_micros <= 0) throw ConfigError("price_per_1k_tokens must be positive");
  if (tokens_per_query && *tokens_per_query <= 0) {
    throw ConfigError("tokens_per_query must be positive");
  }
}

Money estimate_cost(const CostModel& cost, std::uint64_t n_queries) {
  cost.validate();
  const auto price = static_cast<unsigned __int128>(cost.price_per_1k_tokens_micros);
  if (!cost.tokens_per_query) return {rounded_div(n_queries * price, 3)};
  return {rounded_div(n_queries * price * static_cast<std::uint64_t>(*cost.tokens_per_query), 1000)};
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw StateError("SHA-256 digest failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

PredictionCache::PredictionCache(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const Json j = Json::parse(line);
      entries_[cache_key(j.at("model").get<std::string>(), j.at("prompt_hash").get<std::string>())] =
          j.at("value").get<double>();
    } catch (const Json::exception& e) {
      spdlog::warn("{}:{}: skipping unreadable cache line ({})", path_.string(), line_no, e.what());
    }
  }
}

std::optional<double> PredictionCache::lookup(const std::string& model,
                                              const std::string& prompt_hash) const {
  std::lock_guard lock(mutex_);
  if (auto it = entries_.find(cache_key(model, prompt_hash)); it != entries_.end()) return it->second;
  return std::nullopt;
}

void PredictionCache::store(const std::string& model, const std::string& prompt_hash, double value) {
  std::lock_guard lock(mutex_);
  entries_[cache_key(model, prompt_hash)] = value;
  std::ofstream out(path_, std::ios::app);
  if (!out) throw InputError(fmt::format("cannot append to cache {}", path_.string()));
  out << Json{{"prompt_hash", prompt_hash}, {"model", model}, {"value", value}}.dump() << '\n';
}

std::size_t PredictionCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

LlmClient::LlmClient(LlmEndpointConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const auto scheme_end = cfg_.base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError(fmt::format("base_url '{}' lacks a scheme", cfg_.base_url));
  }
  const auto path_start = cfg_.base_url.find('/', scheme_end + 3);
  host_ = cfg_.base_url.substr(0, path_start);
  if (path_start != std::string::npos) path_prefix_ = cfg_.base_url.substr(path_start);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();

  if (!cfg_.api_key_env_var.empty()) {
    if (const char* key = std::getenv(cfg_.api_key_env_var.c_str())) api_key_ = key;
  }
  if (cfg_.cache_path) cache_ = std::make_unique<PredictionCache>(*cfg_.cache_path);
}

LlmClient::~LlmClient() = default;

std::string LlmClient::complete(const std::string& prompt_text, double temperature) const {
  if (!cfg_.api_key_env_var.empty() && api_key_.empty()) {
    throw ConfigError(
        fmt::format("environment variable {} holding the API key is not set", cfg_.api_key_env_var));
  }
  Json messages = Json::array();
  if (cfg_.system_message) messages.push_back({{"role", "system"}, {"content", *cfg_.system_message}});
  messages.push_back({{"role", "user"}, {"content", prompt_text}});
  const std::string body = Json{{"model", cfg_.model_name},
                                {"messages", std::move(messages)},
                                {"temperature", temperature},
                                {"max_tokens", cfg_.max_reply_tokens}}
                               .dump();
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  const std::string path = path_prefix_ + "/chat/completions";

  std::string last_failure;
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 0) {
      const long long delay = std::min<long long>(
          static_cast<long long>(cfg_.backoff_initial_ms) << std::min(attempt - 1, 30),
          cfg_.backoff_max_ms);
      spdlog::debug("retrying after {} ms ({})", delay, last_failure);
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    }
    httplib::Client http(host_);
    http.set_connection_timeout(cfg_.request_timeout_s, 0);
    http.set_read_timeout(cfg_.request_timeout_s, 0);
    http.set_write_timeout(cfg_.request_timeout_s, 0);
    ++requests_;
    const auto res = http.Post(path, headers, body, "application/json");
    if (!res) {
      last_failure = fmt::format("transport failure: {}", httplib::to_string(res.error()));
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_failure = fmt::format("HTTP {}", res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw TransportError(fmt::format("{}{} returned HTTP {}: {}", host_, path, res->status,
                                       res->body.substr(0, 200)));
    }
    try {
      const Json reply = Json::parse(res->body);
      if (auto usage = reply.find("usage"); usage != reply.end() && usage->contains("total_tokens")) {
        tokens_ += usage->at("total_tokens").get<std::uint64_t>();
        ++usage_replies_;
      }
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const Json::exception& e) {
      throw TransportError(fmt::format("malformed completion from {}: {}", host_, e.what()));
    }
  }
  throw TransportError(fmt::format("{}{} failed after {} attempts: {}", host_, path,
                                   cfg_.max_retries + 1, last_failure));
}

double LlmClient::predict(const std::string& prompt_text) const {
  const std::string hash = sha256_hex(prompt_text);
  if (cache_) {
    if (auto hit = cache_->lookup(cfg_.model_name, hash)) return *hit;
  }
  double value;
  try {
    value = parse_prediction(complete(prompt_text, cfg_.temperature), cfg_.metric_name);
  } catch (const ParseError& e) {
    if (!cfg_.resample_on_parse_error) throw;
    spdlog::warn("unparseable reply '{}', resampling at temperature {}", e.raw_reply(),
                 kResampleTemperature);
    value = parse_prediction(complete(prompt_text, kResampleTemperature), cfg_.metric_name);
  }
  if (cache_) cache_->store(cfg_.model_name, hash, value);
  return value;
}

double llm_predict(const LlmEndpointConfig& cfg, const std::string& prompt_text) {
  return LlmClient(cfg).predict(prompt_text);
}

Money measured_cost(const CostModel& cost, const LlmClient& client, std::uint64_t n_queries) {
  if (n_queries == 0 || client.replies_with_usage() != client.requests_sent() ||
      client.requests_sent() == 0) {
    return estimate_cost(cost, n_queries);
  }
  cost.validate();
  return {rounded_div(static_cast<unsigned __int128>(client.reported_tokens()) *
                          static_cast<std::uint64_t>(cost.price_per_1k_tokens_micros),
                      1000)};
}

LlmPredictor::LlmPredictor(std::shared_ptr<const LlmClient> client, PromptBuilder prompt,
                           std::string name)
    : client_(std::move(client)), prompt_(std::move(prompt)), name_(std::move(name)) {
  if (!client_) throw ConfigError("LlmPredictor needs a client");
}

double LlmPredictor::predict(const Architecture& arch) const {
  return client_->predict(prompt_(arch));
}

LlmPredictor::Outcome LlmPredictor::predict_each(std::span<const Architecture> archs) const {
  Outcome outcome{std::vector<double>(archs.size()), std::vector<std::exception_ptr>(archs.size())};
  auto& out = outcome.values;
  auto& errors = outcome.errors;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < archs.size(); i = next++) {
      try {
        out[i] = predict(archs[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto n_threads =
      std::min<std::size_t>(static_cast<std::size_t>(client_->config().max_concurrency), archs.size());
  std::vector<std::jthread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  return outcome;
}

std::vector<double> LlmPredictor::predict_batch(std::span<const Architecture> archs) const {
  auto outcome = predict_each(archs);
  for (auto& e : outcome.errors) {
    if (e) std::rethrow_exception(e);
  }
  return std::move(outcome.values);
}

}  // namespace hsnas
