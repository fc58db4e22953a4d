#include "hsnas/efficiency.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "hsnas/error.hpp"

namespace hsnas {

namespace {

constexpr int kLatencyFormatVersion = 1;

struct Dims {
  std::int64_t enc_embed, dec_embed, enc_qkv, dec_qkv;
  LayerValues enc_ffn, dec_ffn;
};

Dims read_dims(const SearchSpace& space, const Architecture& arch, const ShapeOptions& options) {
  if (auto v = validate(space, arch); !v.empty()) {
    throw PreconditionError(fmt::format("invalid architecture: {} {}", v.front().attribute,
                                        v.front().message));
  }
  using namespace keys;
  auto qkv = [&](std::string_view key) {
    return arch.contains(key) ? std::int64_t{arch.scalar(key)} : options.qkv_dim;
  };
  return {arch.scalar(kEncoderEmbedDim), arch.scalar(kDecoderEmbedDim), qkv(kEncoderQkvDim),
          qkv(kDecoderQkvDim), arch.layers(kEncoderFfnDims), arch.layers(kDecoderFfnDims)};
}

}  // namespace

std::int64_t param_count(const SearchSpace& space, const Architecture& arch,
                         const ShapeOptions& options) {
  const Dims d = read_dims(space, arch, options);
  const std::int64_t V = options.vocab_size;

  std::int64_t total = V * d.enc_embed;
  if (!(options.share_embeddings && d.enc_embed == d.dec_embed)) total += V * d.dec_embed;

  auto self_attention = [](std::int64_t dim, std::int64_t q) {
    return 3 * (dim * q + q) + (q * dim + dim);
  };
  auto ffn = [](std::int64_t dim, std::int64_t f) { return dim * f + f + f * dim + dim; };

  for (int f : d.enc_ffn) {
    total += self_attention(d.enc_embed, d.enc_qkv) + ffn(d.enc_embed, f) + 2 * (2 * d.enc_embed);
  }
  for (int f : d.dec_ffn) {
    const std::int64_t dim = d.dec_embed, q = d.dec_qkv;
    const std::int64_t cross = (dim * q + q) + 2 * (d.enc_embed * q + q) + (q * dim + dim);
    total += self_attention(dim, q) + cross + ffn(dim, f) + 3 * (2 * dim);
  }
  total += d.dec_embed * V;
  return total;
}

double gflops_estimate(const SearchSpace& space, const Architecture& arch,
                       const ShapeOptions& options) {
  if (options.src_len < 1 || options.tgt_len < 1) {
    throw PreconditionError("gflops_estimate needs src_len >= 1 and tgt_len >= 1");
  }
  const Dims d = read_dims(space, arch, options);
  const std::int64_t S = options.src_len, T = options.tgt_len, V = options.vocab_size;

  std::int64_t macs = 0;
  for (int f : d.enc_ffn) {
    const std::int64_t dim = d.enc_embed, q = d.enc_qkv;
    macs += 3 * S * dim * q;  // Q, K, V projections
    macs += 2 * S * S * q;    // scores and weighted sum
    macs += S * q * dim;      // output projection
    macs += 2 * S * dim * f;  // FFN
  }
  for (int f : d.dec_ffn) {
    const std::int64_t dim = d.dec_embed, q = d.dec_qkv;
    macs += 3 * T * dim * q + 2 * T * T * q + T * q * dim;                     // self-attention
    macs += T * dim * q + 2 * S * d.enc_embed * q + 2 * T * S * q + T * q * dim;  // cross-attention
    macs += 2 * T * dim * f;
  }
  macs += T * d.dec_embed * V;
  return 2.0 * static_cast<double>(macs) / 1e9;
}

double predict_latency(const LatencyModel& model, const EncodedArchitecture& encoded) {
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        double ms;
        if constexpr (std::is_same_v<T, AnalyticLatency>) {
          ms = m.intercept_ms + m.slope_ms * encoded[feature::kDecoderLayers] *
                                    encoded[feature::kDecoderFfn] / 1000.0;
        } else {
          if (!m.trained()) throw StateError("latency regressor is not trained");
          ms = m.predict(encoded);
        }
        if (!std::isfinite(ms)) throw StateError("latency model produced a non-finite value");
        return std::max(ms, 0.0);
      },
      model.impl());
}

LatencyModel fit_latency_regressor(const SearchSpace& space, const AnalyticLatency& target,
                                   std::size_t n, std::uint64_t seed, const TrainingConfig& cfg) {
  const LatencyModel analytic(target);
  FunctionPredictor teacher("analytic-latency", [&](const Architecture& a) {
    return predict_latency(analytic, encode(space, a));
  });
  const DistillDataset data = build_distill_dataset(space, teacher, n, seed);
  return LatencyModel(train_regressor<float>(data, FeatureNormalization::from_space(space), cfg, seed));
}

Json to_json(const LatencyModel& model) {
  if (const auto* a = std::get_if<AnalyticLatency>(&model.impl())) {
    return Json{{"format_version", kLatencyFormatVersion},
                {"kind", "synthetic-analytic"},
                {"parameters", {{"intercept_ms", a->intercept_ms}, {"slope_ms", a->slope_ms}}},
                {"feature_normalization", nullptr}};
  }
  const auto& r = std::get<MlpRegressor>(model.impl());
  Json params = to_json(r);
  Json norm = params.at("feature_norm");
  return Json{{"format_version", kLatencyFormatVersion},
              {"kind", "regressor"},
              {"parameters", std::move(params)},
              {"feature_normalization", std::move(norm)}};
}

LatencyModel latency_model_from_json(const Json& j) {
  try {
    if (j.value("format_version", 0) != kLatencyFormatVersion) {
      throw FormatError(fmt::format("latency model format_version {} (expected {})",
                                    j.value("format_version", 0), kLatencyFormatVersion));
    }
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "synthetic-analytic") {
      const auto& p = j.at("parameters");
      return LatencyModel(AnalyticLatency{p.at("intercept_ms").get<double>(),
                                          p.at("slope_ms").get<double>()});
    }
    if (kind == "regressor") return LatencyModel(regressor_from_json(j.at("parameters")));
    throw FormatError(fmt::format("unknown latency model kind '{}'", kind));
  } catch (const Json::exception& e) {
    throw FormatError(fmt::format("malformed latency model: {}", e.what()));
  }
}

void save_latency_model(const LatencyModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError(fmt::format("cannot write latency model {}", path.string()));
  out << to_json(model).dump() << '\n';
}

LatencyModel load_latency_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open latency model {}", path.string()));
  try {
    return latency_model_from_json(Json::parse(in));
  } catch (const Json::parse_error& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

EfficiencyReport efficiency_report(const SearchSpace& space, const Architecture& arch,
                                   const LatencyModel& latency, const ShapeOptions& options) {
  return {static_cast<double>(param_count(space, arch, options)) / 1e6,
          gflops_estimate(space, arch, options),
          predict_latency(latency, encode(space, arch))};
}

Json to_json(const EfficiencyReport& report) {
  return Json{{"latency_ms", report.latency_ms},
              {"gflops", report.gflops},
              {"model_size_millions", report.model_size_millions}};
}

}  // namespace hsnas
