#include "hsnas/predictor.hpp"

#include <cmath>
#include <random>

#include <fmt/format.h>

#include "hsnas/error.hpp"

namespace hsnas {

std::vector<double> Predictor::predict_batch(std::span<const Architecture> archs) const {
  std::vector<double> out;
  out.reserve(archs.size());
  for (const auto& a : archs) out.push_back(predict(a));
  return out;
}

FunctionPredictor::FunctionPredictor(std::string name, ScoreFunction fn)
    : name_(std::move(name)), fn_(std::move(fn)) {}

double FunctionPredictor::predict(const Architecture& arch) const { return fn_(arch); }

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

SimulatedPredictor::SimulatedPredictor(ScoreFunction gold, double noise_sigma, double bias,
                                       std::uint64_t seed, std::string name)
    : gold_(std::move(gold)), sigma_(noise_sigma), bias_(bias), seed_(seed), name_(std::move(name)) {
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw ConfigError("simulated predictor needs a finite noise_sigma >= 0");
  }
  if (name_.empty()) name_ = fmt::format("sim(sigma={},bias={},seed={})", sigma_, bias_, seed_);
}

double SimulatedPredictor::predict(const Architecture& arch) const {
  double value = gold_(arch) + bias_;
  if (sigma_ > 0.0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                      static_cast<std::uint32_t>(fnv1a64(canonical_string(arch))),
                      static_cast<std::uint32_t>(fnv1a64(canonical_string(arch)) >> 32)};
    Rng rng(seq);
    value += std::normal_distribution<double>(0.0, sigma_)(rng);
  }
  return value;
}

std::unique_ptr<Predictor> simulated_predictor(ScoreFunction gold, double noise_sigma, double bias,
                                               std::uint64_t seed) {
  return std::make_unique<SimulatedPredictor>(std::move(gold), noise_sigma, bias, seed);
}

double CountingPredictor::predict(const Architecture& arch) const {
  ++scored_;
  return inner_->predict(arch);
}

std::vector<double> CountingPredictor::predict_batch(std::span<const Architecture> archs) const {
  ++batches_;
  scored_ += archs.size();
  return inner_->predict_batch(archs);
}

}  // namespace hsnas
