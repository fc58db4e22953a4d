#pragma once

// Independent reference implementations the library is checked against.
// Deliberately naive: pair loops, explicit tensor lists, full enumeration.

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "hsnas/efficiency.hpp"
#include "hsnas/space.hpp"

namespace oracle {

/// Pairwise tau-b: (C - D) / sqrt((n0 - n1)(n0 - n2)).
inline double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  long long concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = x[i] - x[j], dy = y[i] - y[j];
      if (dx == 0.0) ++ties_x;
      if (dy == 0.0) ++ties_y;
      if (dx * dy > 0) ++concordant;
      if (dx * dy < 0) ++discordant;
    }
  }
  const long long n0 = static_cast<long long>(n * (n - 1) / 2);
  return static_cast<double>(concordant - discordant) /
         std::sqrt(static_cast<double>(n0 - ties_x) * static_cast<double>(n0 - ties_y));
}

inline double mean_abs_error(std::span<const double> p, std::span<const double> t) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::fabs(p[i] - t[i]);
  return s / static_cast<double>(p.size());
}

struct Dims {
  std::int64_t enc_embed, dec_embed, enc_qkv, dec_qkv;
  std::vector<int> enc_ffn, dec_ffn;
};

inline Dims dims(const hsnas::Architecture& a, const hsnas::ShapeOptions& o) {
  using namespace hsnas::keys;
  auto qkv = [&](std::string_view k) { return a.contains(k) ? std::int64_t{a.scalar(k)} : o.qkv_dim; };
  return {a.scalar(kEncoderEmbedDim), a.scalar(kDecoderEmbedDim), qkv(kEncoderQkvDim),
          qkv(kDecoderQkvDim), a.layers(kEncoderFfnDims), a.layers(kDecoderFfnDims)};
}

/// Every learnable tensor as a shape list; the count is the sum of products.
inline std::int64_t param_count(const hsnas::Architecture& a, const hsnas::ShapeOptions& o = {}) {
  const Dims d = dims(a, o);
  const std::int64_t V = o.vocab_size;
  std::vector<std::vector<std::int64_t>> tensors;
  auto linear = [&](std::int64_t in, std::int64_t out, bool bias) {
    tensors.push_back({in, out});
    if (bias) tensors.push_back({out});
  };
  auto layer_norm = [&](std::int64_t dim) {
    tensors.push_back({dim});
    tensors.push_back({dim});
  };

  tensors.push_back({V, d.enc_embed});
  if (!(o.share_embeddings && d.enc_embed == d.dec_embed)) tensors.push_back({V, d.dec_embed});
  for (int f : d.enc_ffn) {
    for (int k = 0; k < 3; ++k) linear(d.enc_embed, d.enc_qkv, true);
    linear(d.enc_qkv, d.enc_embed, true);
    layer_norm(d.enc_embed);
    linear(d.enc_embed, f, true);
    linear(f, d.enc_embed, true);
    layer_norm(d.enc_embed);
  }
  for (int f : d.dec_ffn) {
    for (int k = 0; k < 3; ++k) linear(d.dec_embed, d.dec_qkv, true);
    linear(d.dec_qkv, d.dec_embed, true);
    layer_norm(d.dec_embed);
    linear(d.dec_embed, d.dec_qkv, true);  // cross query
    linear(d.enc_embed, d.dec_qkv, true);  // cross key
    linear(d.enc_embed, d.dec_qkv, true);  // cross value
    linear(d.dec_qkv, d.dec_embed, true);
    layer_norm(d.dec_embed);
    linear(d.dec_embed, f, true);
    linear(f, d.dec_embed, true);
    layer_norm(d.dec_embed);
  }
  linear(d.dec_embed, V, false);

  std::int64_t total = 0;
  for (const auto& t : tensors) {
    std::int64_t p = 1;
    for (auto s : t) p *= s;
    total += p;
  }
  return total;
}

/// Every matrix product (rows, inner, cols); FLOPs = 2 * sum of products.
inline double gflops(const hsnas::Architecture& a, const hsnas::ShapeOptions& o = {}) {
  const Dims d = dims(a, o);
  const std::int64_t S = o.src_len, T = o.tgt_len;
  std::vector<std::array<std::int64_t, 3>> products;
  for (int f : d.enc_ffn) {
    for (int k = 0; k < 3; ++k) products.push_back({S, d.enc_embed, d.enc_qkv});
    products.push_back({S, d.enc_qkv, S});
    products.push_back({S, S, d.enc_qkv});
    products.push_back({S, d.enc_qkv, d.enc_embed});
    products.push_back({S, d.enc_embed, f});
    products.push_back({S, f, d.enc_embed});
  }
  for (int f : d.dec_ffn) {
    for (int k = 0; k < 3; ++k) products.push_back({T, d.dec_embed, d.dec_qkv});
    products.push_back({T, d.dec_qkv, T});
    products.push_back({T, T, d.dec_qkv});
    products.push_back({T, d.dec_qkv, d.dec_embed});
    products.push_back({T, d.dec_embed, d.dec_qkv});
    products.push_back({S, d.enc_embed, d.dec_qkv});
    products.push_back({S, d.enc_embed, d.dec_qkv});
    products.push_back({T, d.dec_qkv, S});
    products.push_back({T, S, d.dec_qkv});
    products.push_back({T, d.dec_qkv, d.dec_embed});
    products.push_back({T, d.dec_embed, f});
    products.push_back({T, f, d.dec_embed});
  }
  products.push_back({T, d.dec_embed, o.vocab_size});
  std::int64_t macs = 0;
  for (const auto& [m, k, n] : products) macs += m * k * n;
  return 2.0 * static_cast<double>(macs) / 1e9;
}

}  // namespace oracle
