#include "hsnas/metrics.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>

namespace hsnas {

namespace {

using Map = Eigen::Map<const Eigen::VectorXd>;

void check(std::span<const double> predictions, std::span<const double> truths,
           Eigen::Index min_size) {
  detail::check_score_pairs(Map(predictions.data(), static_cast<Eigen::Index>(predictions.size())),
                            Map(truths.data(), static_cast<Eigen::Index>(truths.size())),
                            min_size);
}

// Sum of t(t-1)/2 over runs of equal values in an already grouped sequence.
template <typename Eq>
std::int64_t tied_pairs(std::size_t n, Eq equal_to_previous) {
  std::int64_t total = 0;
  std::int64_t run = 1;
  for (std::size_t i = 1; i < n; ++i) {
    if (equal_to_previous(i)) {
      ++run;
    } else {
      total += run * (run - 1) / 2;
      run = 1;
    }
  }
  return total + run * (run - 1) / 2;
}

// Stable merge sort of `idx` by key; returns the number of inversions.
std::int64_t sort_counting_swaps(std::vector<std::size_t>& idx, std::span<const double> key) {
  const std::size_t n = idx.size();
  std::vector<std::size_t> buf(n);
  std::int64_t swaps = 0;
  for (std::size_t width = 1; width < n; width *= 2) {
    for (std::size_t lo = 0; lo < n; lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, n);
      const std::size_t hi = std::min(lo + 2 * width, n);
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (key[idx[j]] < key[idx[i]]) {
          swaps += static_cast<std::int64_t>(mid - i);
          buf[k++] = idx[j++];
        } else {
          buf[k++] = idx[i++];
        }
      }
      while (i < mid) buf[k++] = idx[i++];
      while (j < hi) buf[k++] = idx[j++];
    }
    idx.swap(buf);
  }
  return swaps;
}

}  // namespace

std::optional<double> kendall_tau(std::span<const double> predictions,
                                  std::span<const double> truths) {
  check(predictions, truths, 2);
  const std::size_t n = predictions.size();
  const auto& x = predictions;
  const auto& y = truths;

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });

  const std::int64_t total = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  const std::int64_t ties_x = tied_pairs(n, [&](std::size_t i) { return x[idx[i]] == x[idx[i - 1]]; });
  const std::int64_t ties_xy = tied_pairs(n, [&](std::size_t i) {
    return x[idx[i]] == x[idx[i - 1]] && y[idx[i]] == y[idx[i - 1]];
  });

  // Within runs of tied x the order is already ascending in y, so every
  // inversion left is a pair ordered oppositely by x and y.
  const std::int64_t discordant = sort_counting_swaps(idx, y);
  const std::int64_t ties_y = tied_pairs(n, [&](std::size_t i) { return y[idx[i]] == y[idx[i - 1]]; });

  const double denom = std::sqrt(static_cast<double>(total - ties_x)) *
                       std::sqrt(static_cast<double>(total - ties_y));
  if (denom == 0.0) return std::nullopt;
  const std::int64_t numer = total - ties_x - ties_y + ties_xy - 2 * discordant;
  return static_cast<double>(numer) / denom;
}

std::size_t DiscordanceProfile::discordant_pairs() const noexcept {
  std::size_t total = 0;
  for (const auto& [distance, count] : histogram) total += count;
  return total;
}

DiscordanceProfile discordance_profile(std::span<const double> predictions,
                                       std::span<const double> truths) {
  check(predictions, truths, 2);
  const std::size_t n = truths.size();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return truths[a] < truths[b]; });
  std::vector<int> rank(n);
  for (std::size_t r = 0; r < n; ++r) rank[order[r]] = static_cast<int>(r);

  DiscordanceProfile profile;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dp = predictions[i] - predictions[j];
      const double dt = truths[i] - truths[j];
      if (dp * dt < 0.0) ++profile.histogram[std::abs(rank[i] - rank[j])];
    }
  }
  const double total = static_cast<double>(profile.discordant_pairs());
  std::size_t running = 0;
  for (const auto& [distance, count] : profile.histogram) {
    running += count;
    profile.cdf.emplace_back(distance, static_cast<double>(running) / total);
  }
  return profile;
}

}  // namespace hsnas
