#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <variant>

#include "hsnas/distill.hpp"
#include "hsnas/json.hpp"
#include "hsnas/space.hpp"

namespace hsnas {

struct ShapeOptions {
  std::int64_t vocab_size = 32000;
  std::int64_t src_len = 30;
  std::int64_t tgt_len = 30;
  // Used when the architecture has no qkv-dim attribute.
  std::int64_t qkv_dim = 512;
  // Count the encoder and decoder token embeddings once when their dims match.
  bool share_embeddings = false;
};

/// Architecture-specific parameters of an encoder-decoder Transformer.
///
///   embeddings   V*d_enc + V*d_dec   (one table when shared and d_enc == d_dec)
///   enc layer    self-attn: 3*(d*q + q) + (q*d + d), 2 layer norms of 2*d,
///                FFN: d*f + f + f*d + d
///   dec layer    self-attn as above, cross-attn: (d*q + q) + 2*(d_enc*q + q) + (q*d + d),
///                3 layer norms of 2*d, FFN as above
///   output       d_dec*V (no bias)
///
/// Head counts do not change parameter counts because q is fixed.
std::int64_t param_count(const SearchSpace& space, const Architecture& arch,
                         const ShapeOptions& options = {});

/// Forward-pass gigaFLOPs for one sentence pair: 2 * multiply-accumulates of
/// every matrix product (projections, attention scores and weighted sums,
/// FFNs, output projection). Biases, norms and softmax are ignored. Throws
/// PreconditionError when src_len or tgt_len is < 1.
double gflops_estimate(const SearchSpace& space, const Architecture& arch,
                       const ShapeOptions& options = {});

/// latency = intercept + slope * decoder_layers * mean_decoder_ffn / 1000.
struct AnalyticLatency {
  double intercept_ms = 10.0;
  double slope_ms = 5.0;
};

class LatencyModel {
 public:
  LatencyModel() : LatencyModel(AnalyticLatency{}) {}
  explicit LatencyModel(AnalyticLatency analytic) : impl_(analytic) {}
  explicit LatencyModel(MlpRegressor regressor) : impl_(std::move(regressor)) {}

  static LatencyModel constant(double ms) { return LatencyModel(AnalyticLatency{ms, 0.0}); }

  bool is_analytic() const noexcept { return std::holds_alternative<AnalyticLatency>(impl_); }
  const std::variant<AnalyticLatency, MlpRegressor>& impl() const noexcept { return impl_; }

 private:
  std::variant<AnalyticLatency, MlpRegressor> impl_;
};

/// Finite, nonnegative milliseconds; negative regressor outputs clamp to 0.
/// Throws StateError for an untrained regressor.
double predict_latency(const LatencyModel& model, const EncodedArchitecture& encoded);

/// Fits a regressor latency model to the analytic model on `n` sampled
/// architectures.
LatencyModel fit_latency_regressor(const SearchSpace& space, const AnalyticLatency& target,
                                   std::size_t n, std::uint64_t seed,
                                   const TrainingConfig& cfg = {});

/// {"format_version", "kind": "synthetic-analytic"|"regressor", "parameters",
///  "feature_normalization"}
Json to_json(const LatencyModel& model);
LatencyModel latency_model_from_json(const Json& j);
void save_latency_model(const LatencyModel& model, const std::filesystem::path& path);
LatencyModel load_latency_model(const std::filesystem::path& path);

struct EfficiencyReport {
  double model_size_millions = 0.0;
  double gflops = 0.0;
  double latency_ms = 0.0;
};

EfficiencyReport efficiency_report(const SearchSpace& space, const Architecture& arch,
                                   const LatencyModel& latency, const ShapeOptions& options = {});

Json to_json(const EfficiencyReport& report);

}  // namespace hsnas
