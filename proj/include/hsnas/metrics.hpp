#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "hsnas/error.hpp"

namespace hsnas {

namespace detail {

template <typename A, typename B>
void check_score_pairs(const Eigen::DenseBase<A>& predictions, const Eigen::DenseBase<B>& truths,
                       Eigen::Index min_size) {
  if (predictions.size() != truths.size()) {
    throw InputError("predictions and truths differ in length");
  }
  if (predictions.size() < min_size) {
    throw InputError("too few score pairs");
  }
  if (!predictions.derived().array().isFinite().all() ||
      !truths.derived().array().isFinite().all()) {
    throw InputError("score pairs must be finite");
  }
}

}  // namespace detail

/// Mean absolute error between predictions and truths. Accepts any pair of
/// Eigen vector expressions.
template <typename A, typename B>
typename A::Scalar mae(const Eigen::DenseBase<A>& predictions, const Eigen::DenseBase<B>& truths) {
  detail::check_score_pairs(predictions, truths, 1);
  return (predictions.derived().array() - truths.derived().array()).abs().mean();
}

inline double mae(std::span<const double> predictions, std::span<const double> truths) {
  using Map = Eigen::Map<const Eigen::VectorXd>;
  return mae(Map(predictions.data(), static_cast<Eigen::Index>(predictions.size())),
             Map(truths.data(), static_cast<Eigen::Index>(truths.size())));
}

/// Kendall's tau-b in [-1, 1], computed in O(n log n) with Knight's
/// merge-sort method. Reduces to tau-a when neither list has ties.
///
/// Returns std::nullopt when tau-b is undefined, i.e. when either list is
/// constant (the tie-corrected denominator is zero).
std::optional<double> kendall_tau(std::span<const double> predictions,
                                  std::span<const double> truths);

template <typename A, typename B>
std::optional<double> kendall_tau(const Eigen::DenseBase<A>& predictions,
                                  const Eigen::DenseBase<B>& truths) {
  const Eigen::VectorXd p = predictions.derived().template cast<double>();
  const Eigen::VectorXd t = truths.derived().template cast<double>();
  return kendall_tau(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())),
                     std::span<const double>(t.data(), static_cast<std::size_t>(t.size())));
}

/// Gold-rank distances of discordant pairs.
struct DiscordanceProfile {
  std::map<int, std::size_t> histogram;       // distance -> pair count
  std::vector<std::pair<int, double>> cdf;    // (distance, cumulative fraction)

  std::size_t discordant_pairs() const noexcept;
};

/// A pair (i, j) is discordant when the predictions and the truths order it
/// in strictly opposite directions. Gold ranks come from sorting truths in
/// ascending order; equal truths are ranked by input index.
DiscordanceProfile discordance_profile(std::span<const double> predictions,
                                       std::span<const double> truths);

}  // namespace hsnas
