#include <cstdlib>
#include <filesystem>

#include <gtest/gtest.h>

#include "hsnas/bench.hpp"
#include "hsnas/error.hpp"
#include "hsnas/llm.hpp"
#include "stub_server.hpp"

using namespace hsnas;

namespace {

StubEndpoint::Reply bleu(const std::string& text) { return {200, text}; }

LlmEndpointConfig stub_config(const StubEndpoint& stub) {
  LlmEndpointConfig cfg;
  cfg.base_url = stub.base_url();
  cfg.model_name = "stub-model";
  cfg.api_key_env_var = "";
  cfg.backoff_initial_ms = 1;
  cfg.backoff_max_ms = 4;
  cfg.request_timeout_s = 5;
  return cfg;
}

std::filesystem::path temp_file(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() /
                 (name + "_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                  "_" + std::to_string(std::rand()));
  std::filesystem::remove(p);
  return p;
}

}  // namespace

TEST(Llm, StubRoundTrip) {
  StubEndpoint stub([](int, const std::string&) { return bleu("BLEU: 25.10"); });
  EXPECT_DOUBLE_EQ(llm_predict(stub_config(stub), "prompt text"), 25.10);
  ASSERT_EQ(stub.requests(), 1);
  const auto body = stub.bodies().front();
  EXPECT_EQ(body.at("model"), "stub-model");
  EXPECT_EQ(body.at("temperature"), 0.0);
  EXPECT_EQ(body.at("max_tokens"), 16);
  EXPECT_EQ(body.at("messages").back().at("role"), "user");
  EXPECT_EQ(body.at("messages").back().at("content"), "prompt text");
}

TEST(Llm, SystemMessageAndBearerToken) {
  StubEndpoint stub([](int, const std::string&) { return bleu("26"); });
  auto cfg = stub_config(stub);
  cfg.system_message = "Answer with a number.";
  cfg.api_key_env_var = "HSNAS_TEST_KEY";
  ::setenv("HSNAS_TEST_KEY", "sk-test", 1);
  EXPECT_DOUBLE_EQ(llm_predict(cfg, "p"), 26.0);
  ::unsetenv("HSNAS_TEST_KEY");
  EXPECT_EQ(stub.auth_headers().front(), "Bearer sk-test");
  EXPECT_EQ(stub.bodies().front().at("messages").front().at("role"), "system");
}

TEST(Llm, MissingKeyIsConfigError) {
  StubEndpoint stub([](int, const std::string&) { return bleu("26"); });
  auto cfg = stub_config(stub);
  cfg.api_key_env_var = "HSNAS_TEST_KEY_NEVER_SET";
  EXPECT_THROW(llm_predict(cfg, "p"), ConfigError);
  EXPECT_EQ(stub.requests(), 0);
}

TEST(Llm, RetriesServerErrors) {
  StubEndpoint stub([](int i, const std::string&) {
    return i < 2 ? StubEndpoint::Reply{i == 0 ? 503 : 429, ""} : bleu("BLEU: 24.5");
  });
  auto cfg = stub_config(stub);
  cfg.max_retries = 3;
  EXPECT_DOUBLE_EQ(llm_predict(cfg, "p"), 24.5);
  EXPECT_EQ(stub.requests(), 3);
}

TEST(Llm, ExhaustedRetriesIsTransportError) {
  StubEndpoint stub([](int, const std::string&) { return StubEndpoint::Reply{500, ""}; });
  auto cfg = stub_config(stub);
  cfg.max_retries = 2;
  EXPECT_THROW(llm_predict(cfg, "p"), TransportError);
  EXPECT_EQ(stub.requests(), 3);
}

TEST(Llm, ClientErrorNotRetried) {
  StubEndpoint stub([](int, const std::string&) { return StubEndpoint::Reply{401, ""}; });
  EXPECT_THROW(llm_predict(stub_config(stub), "p"), TransportError);
  EXPECT_EQ(stub.requests(), 1);
}

TEST(Llm, UnreachableEndpointIsTransportError) {
  LlmEndpointConfig cfg;
  cfg.base_url = "http://127.0.0.1:1/v1";
  cfg.api_key_env_var = "";
  cfg.max_retries = 1;
  cfg.backoff_initial_ms = 1;
  cfg.request_timeout_s = 1;
  EXPECT_THROW(llm_predict(cfg, "p"), TransportError);
}

TEST(Llm, ParseErrorNotRetriedByDefault) {
  StubEndpoint stub([](int, const std::string&) { return bleu("I cannot estimate this."); });
  EXPECT_THROW(llm_predict(stub_config(stub), "p"), ParseError);
  EXPECT_EQ(stub.requests(), 1);
}

TEST(Llm, OptionalResampleOnParseError) {
  StubEndpoint stub([](int i, const std::string&) { return bleu(i == 0 ? "hmm" : "BLEU: 23"); });
  auto cfg = stub_config(stub);
  cfg.resample_on_parse_error = true;
  EXPECT_DOUBLE_EQ(llm_predict(cfg, "p"), 23.0);
  ASSERT_EQ(stub.requests(), 2);
  EXPECT_EQ(stub.bodies()[1].at("temperature"), 0.7);
}

TEST(Llm, CacheAvoidsRepeatRequests) {
  StubEndpoint stub([](int, const std::string& prompt) {
    return bleu("BLEU: " + std::to_string(20 + prompt.size()));
  });
  auto cfg = stub_config(stub);
  cfg.cache_path = temp_file("hsnas_cache.jsonl");
  {
    LlmClient client(cfg);
    const double first = client.predict("abc");
    EXPECT_EQ(client.predict("abc"), first);
    EXPECT_EQ(stub.requests(), 1);
    client.predict("abcd");
    EXPECT_EQ(stub.requests(), 2);
  }
  LlmClient reloaded(cfg);
  EXPECT_DOUBLE_EQ(reloaded.predict("abc"), 23.0);
  EXPECT_DOUBLE_EQ(reloaded.predict("abcd"), 24.0);
  EXPECT_EQ(stub.requests(), 2);
  EXPECT_EQ(reloaded.requests_sent(), 0u);

  // A different model name does not hit the cache.
  cfg.model_name = "other";
  LlmClient other(cfg);
  other.predict("abc");
  EXPECT_EQ(stub.requests(), 3);
  std::filesystem::remove(*cfg.cache_path);
}

TEST(Llm, BatchRespectsConcurrencyLimit) {
  StubEndpoint stub([](int, const std::string& prompt) { return bleu("BLEU: " + prompt); },
                    std::chrono::milliseconds(30));
  auto cfg = stub_config(stub);
  cfg.max_concurrency = 3;
  const auto task = make_bench_task();
  const auto archs = enumerate(task.space, 20000);
  std::vector<Architecture> batch(archs.begin(), archs.begin() + 12);
  LlmPredictor pp(std::make_shared<const LlmClient>(cfg),
                  [&](const Architecture& a) { return std::to_string(task.gold(a)); });
  const auto values = pp.predict_batch(batch);
  ASSERT_EQ(values.size(), batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) EXPECT_NEAR(values[i], task.gold(batch[i]), 1e-5);
  EXPECT_EQ(stub.requests(), 12);
  EXPECT_LE(stub.max_in_flight(), 3);
  EXPECT_GE(stub.max_in_flight(), 2);
}

TEST(Llm, PredictEachKeepsGoingPastFailures) {
  StubEndpoint stub([](int, const std::string& prompt) {
    return bleu(prompt == "bad" ? "no number" : "BLEU: 1");
  });
  auto cfg = stub_config(stub);
  const auto space = tiny_bench_space();
  const auto archs = enumerate(space, 20000);
  std::vector<Architecture> batch(archs.begin(), archs.begin() + 4);
  LlmPredictor pp(std::make_shared<const LlmClient>(cfg), [&](const Architecture& a) {
    return a == batch[2] ? std::string("bad") : canonical_string(a);
  });
  const auto outcome = pp.predict_each(batch);
  EXPECT_FALSE(outcome.errors[0]);
  EXPECT_TRUE(outcome.errors[2]);
  EXPECT_EQ(outcome.values[3], 1.0);
  EXPECT_THROW(pp.predict_batch(batch), ParseError);
}

TEST(Llm, ConfigValidation) {
  LlmEndpointConfig cfg;
  cfg.max_concurrency = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.max_concurrency = 1;
  cfg.temperature = -1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  LlmEndpointConfig round;
  round.cache_path = "x.jsonl";
  const auto back = LlmEndpointConfig::from_json(round.to_json());
  EXPECT_EQ(back.cache_path, round.cache_path);
  EXPECT_EQ(back.model_name, round.model_name);
}

TEST(Llm, CostEstimates) {
  const CostModel defaults;
  EXPECT_EQ(estimate_cost(defaults, 3000).dollars(), "30.00");
  EXPECT_EQ(estimate_cost(defaults, 3000).micros, 30'000'000);
  EXPECT_EQ(estimate_cost(defaults, 3000ULL * 3 * 5 * 4).dollars(), "1800.00");
  EXPECT_EQ(estimate_cost(defaults, 180'000).micros, 1'800'000'000);
  EXPECT_EQ(estimate_cost(defaults, 0).micros, 0);
  EXPECT_EQ(estimate_cost(defaults, 0).dollars(), "0.00");
  CostModel fixed;
  fixed.tokens_per_query = 334;
  EXPECT_EQ(estimate_cost(fixed, 3000).micros, 30'060'000);
}

TEST(Llm, MeasuredCostUsesReportedTokens) {
  StubEndpoint stub([](int, const std::string&) { return bleu("1"); });
  LlmClient client(stub_config(stub));
  client.predict("a");
  client.predict("b");
  EXPECT_EQ(client.reported_tokens(), 600u);
  // 600 tokens at 0.03 per 1K.
  EXPECT_EQ(measured_cost(CostModel{}, client, 2).micros, 18'000);
}

TEST(Llm, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
