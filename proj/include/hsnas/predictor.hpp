#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hsnas/space.hpp"

namespace hsnas {

/// Maps an architecture to a predicted downstream score. Implementations
/// must be deterministic per architecture and safe to call concurrently.
class Predictor {
 public:
  virtual ~Predictor() = default;

  virtual std::string name() const = 0;
  virtual double predict(const Architecture& arch) const = 0;

  /// Results are in input order. The default maps predict().
  virtual std::vector<double> predict_batch(std::span<const Architecture> archs) const;
};

using ScoreFunction = std::function<double(const Architecture&)>;

/// Wraps a pure function, e.g. a synthetic gold oracle.
class FunctionPredictor final : public Predictor {
 public:
  FunctionPredictor(std::string name, ScoreFunction fn);

  std::string name() const override { return name_; }
  double predict(const Architecture& arch) const override;

 private:
  std::string name_;
  ScoreFunction fn_;
};

/// gold(a) + bias + N(0, sigma^2), with the noise draw seeded by
/// (seed, hash of the canonical architecture) so repeated queries agree.
class SimulatedPredictor final : public Predictor {
 public:
  SimulatedPredictor(ScoreFunction gold, double noise_sigma, double bias, std::uint64_t seed,
                     std::string name = {});

  std::string name() const override { return name_; }
  double predict(const Architecture& arch) const override;

 private:
  ScoreFunction gold_;
  double sigma_;
  double bias_;
  std::uint64_t seed_;
  std::string name_;
};

std::unique_ptr<Predictor> simulated_predictor(ScoreFunction gold, double noise_sigma, double bias,
                                               std::uint64_t seed);

/// Decorator counting calls, used to observe predictor schedules.
class CountingPredictor final : public Predictor {
 public:
  explicit CountingPredictor(const Predictor& inner) : inner_(&inner) {}

  std::string name() const override { return inner_->name(); }
  double predict(const Architecture& arch) const override;
  std::vector<double> predict_batch(std::span<const Architecture> archs) const override;

  std::uint64_t architectures_scored() const noexcept { return scored_.load(); }
  std::uint64_t batch_calls() const noexcept { return batches_.load(); }

 private:
  const Predictor* inner_;
  mutable std::atomic<std::uint64_t> scored_{0};
  mutable std::atomic<std::uint64_t> batches_{0};
};

/// 64-bit FNV-1a; stable across platforms, used for per-architecture seeds.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

}  // namespace hsnas
