#include <gtest/gtest.h>

#include "hsnas/bench.hpp"
#include "hsnas/efficiency.hpp"
#include "hsnas/error.hpp"
#include "oracles.hpp"

using namespace hsnas;
namespace k = hsnas::keys;

namespace {

// Every attribute fixed to one value: dims d, one layer each side.
SearchSpace unit_space(int d, std::vector<int> dec_layers = {1}) {
  return SearchSpace({{std::string(k::kEncoderEmbedDim), {d}, false, ""},
                      {std::string(k::kEncoderLayerNum), {1}, false, ""},
                      {std::string(k::kEncoderFfnDims), {d}, true, std::string(k::kEncoderLayerNum)},
                      {std::string(k::kEncoderSelfHeads), {1}, true, std::string(k::kEncoderLayerNum)},
                      {std::string(k::kDecoderEmbedDim), {d}, false, ""},
                      {std::string(k::kDecoderLayerNum), std::move(dec_layers), false, ""},
                      {std::string(k::kDecoderFfnDims), {d}, true, std::string(k::kDecoderLayerNum)},
                      {std::string(k::kDecoderSelfHeads), {1}, true, std::string(k::kDecoderLayerNum)},
                      {std::string(k::kDecoderCrossHeads), {1}, true, std::string(k::kDecoderLayerNum)},
                      {std::string(k::kDecoderArbitraryAttn), {-1}, true, std::string(k::kDecoderLayerNum)},
                      {std::string(k::kEncoderQkvDim), {d}, false, ""},
                      {std::string(k::kDecoderQkvDim), {d}, false, ""}});
}

Architecture only(const SearchSpace& s) { return enumerate(s, 1).front(); }

}  // namespace

TEST(Efficiency, HandCountedTinyArchitecture) {
  const auto s = unit_space(4);
  const auto a = only(s);
  ShapeOptions o;
  o.vocab_size = 10;
  o.src_len = o.tgt_len = 2;
  // embeddings 80, encoder layer 136, decoder layer 224, output 40
  EXPECT_EQ(param_count(s, a, o), 480);
  // MACs: encoder 224, decoder 384, output 80
  EXPECT_DOUBLE_EQ(gflops_estimate(s, a, o), 2.0 * 688 / 1e9);
}

TEST(Efficiency, SmallestHatArchitectureMatchesOracle) {
  const auto s = SearchSpace::hat_default();
  Architecture a;
  a.set(k::kEncoderEmbedDim, 512);
  a.set(k::kEncoderLayerNum, 6);
  a.set(k::kEncoderFfnDims, LayerValues(6, 1024));
  a.set(k::kEncoderSelfHeads, LayerValues(6, 4));
  a.set(k::kDecoderEmbedDim, 512);
  a.set(k::kDecoderLayerNum, 1);
  a.set(k::kDecoderFfnDims, LayerValues{1024});
  a.set(k::kDecoderSelfHeads, LayerValues{4});
  a.set(k::kDecoderCrossHeads, LayerValues{4});
  a.set(k::kDecoderArbitraryAttn, LayerValues{-1});
  a.set(k::kEncoderQkvDim, 512);
  a.set(k::kDecoderQkvDim, 512);
  ASSERT_TRUE(validate(s, a).empty());
  EXPECT_EQ(param_count(s, a), oracle::param_count(a));
  EXPECT_DOUBLE_EQ(gflops_estimate(s, a), oracle::gflops(a));
}

TEST(Efficiency, RandomArchitecturesMatchOracles) {
  for (const auto& s : {SearchSpace::hat_default(), tiny_bench_space()}) {
    Rng rng(21);
    for (int i = 0; i < 20; ++i) {
      const auto a = sample(s, rng);
      for (bool share : {false, true}) {
        ShapeOptions o;
        o.share_embeddings = share;
        o.src_len = 7 + i;
        o.tgt_len = 3 + 2 * i;
        EXPECT_EQ(param_count(s, a, o), oracle::param_count(a, o));
        EXPECT_DOUBLE_EQ(gflops_estimate(s, a, o), oracle::gflops(a, o));
      }
    }
  }
}

TEST(Efficiency, ParamCountMonotone) {
  const auto s = SearchSpace::hat_default();
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    auto a = sample(s, rng);
    a.set(k::kEncoderEmbedDim, 512);
    auto b = a;
    b.set(k::kEncoderEmbedDim, 640);
    EXPECT_LT(param_count(s, a), param_count(s, b));
    auto c = a;
    auto ffn = a.layers(k::kDecoderFfnDims);
    if (ffn[0] != 1024) continue;
    ffn[0] *= 2;
    c.set(k::kDecoderFfnDims, ffn);
    EXPECT_LT(param_count(s, a), param_count(s, c));
  }
}

TEST(Efficiency, ZeroDecoderLayersContributeNothing) {
  const auto s0 = unit_space(4, {0});
  const auto s1 = unit_space(4, {1});
  ShapeOptions o;
  o.vocab_size = 10;
  EXPECT_EQ(param_count(s1, only(s1), o) - param_count(s0, only(s0), o), 224);
  EXPECT_EQ(param_count(s0, only(s0), o), oracle::param_count(only(s0), o));
}

TEST(Efficiency, LongerTargetCostsMore) {
  const auto s = SearchSpace::hat_default();
  Rng rng(5);
  const auto a = sample(s, rng);
  ShapeOptions o, o2;
  o2.tgt_len = 2 * o.tgt_len;
  EXPECT_LT(gflops_estimate(s, a, o), gflops_estimate(s, a, o2));
}

TEST(Efficiency, ZeroLengthsRejected) {
  const auto s = SearchSpace::hat_default();
  Rng rng(5);
  ShapeOptions o;
  o.src_len = o.tgt_len = 0;
  EXPECT_THROW(gflops_estimate(s, sample(s, rng), o), PreconditionError);
}

TEST(Efficiency, AnalyticLatency) {
  EncodedArchitecture e = EncodedArchitecture::Zero();
  e[feature::kDecoderLayers] = 3;
  e[feature::kDecoderFfn] = 2048;
  EXPECT_NEAR(predict_latency(LatencyModel(AnalyticLatency{10, 5}), e), 40.72, 1e-12);
  const auto c = LatencyModel::constant(12.5);
  EXPECT_EQ(predict_latency(c, e), 12.5);
  EXPECT_EQ(predict_latency(c, EncodedArchitecture::Constant(7.0)), 12.5);
}

TEST(Efficiency, UntrainedRegressorIsStateError) {
  EXPECT_THROW(predict_latency(LatencyModel(MlpRegressor{}), EncodedArchitecture::Zero()), StateError);
}

TEST(Efficiency, RegressorFitsAnalyticLatency) {
  const auto s = SearchSpace::hat_default();
  TrainingConfig cfg;
  cfg.hidden_dims = {64, 64};
  cfg.learning_rate = 1e-3;
  cfg.steps = 3000;
  cfg.batch_size = 64;
  const AnalyticLatency target{10, 5};
  const auto model = fit_latency_regressor(s, target, 500, 3, cfg);
  Rng rng(1234);
  double err = 0;
  const int n = 500;
  for (int i = 0; i < n; ++i) {
    const auto e = encode(s, sample(s, rng));
    err += std::fabs(predict_latency(model, e) - predict_latency(LatencyModel(target), e));
  }
  EXPECT_LE(err / n, 2.0);

  const auto reloaded = latency_model_from_json(Json::parse(to_json(model).dump()));
  Rng r2(5);
  for (int i = 0; i < 20; ++i) {
    const auto e = encode(s, sample(s, r2));
    EXPECT_NEAR(predict_latency(reloaded, e), predict_latency(model, e), 1e-9);
  }
}

TEST(Efficiency, AnalyticJsonRoundTrip) {
  const auto m = latency_model_from_json(to_json(LatencyModel(AnalyticLatency{40, 30})));
  ASSERT_TRUE(m.is_analytic());
  EXPECT_EQ(std::get<AnalyticLatency>(m.impl()).slope_ms, 30.0);
  EXPECT_THROW(latency_model_from_json(Json{{"format_version", 99}}), FormatError);
}
