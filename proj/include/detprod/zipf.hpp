#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "detprod/error.hpp"

namespace detprod {

/// Counts sorted descending; rank r (1-based) is counts[r - 1].
struct RankedCounts {
  std::vector<double> counts;

  std::size_t size() const { return counts.size(); }
};

/// Orders counts descending, ties by token so ranks are deterministic.
template <class Count>
RankedCounts rank_frequencies(const std::unordered_map<std::string, Count>& token_counts) {
  if (token_counts.empty()) throw Error("rank_frequencies: empty count map");
  std::vector<std::pair<std::string, double>> items;
  items.reserve(token_counts.size());
  for (const auto& [tok, n] : token_counts) {
    if (!(n > 0)) throw Error("rank_frequencies: count for '" + tok + "' is not positive");
    items.emplace_back(tok, static_cast<double>(n));
  }
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  RankedCounts out;
  out.counts.reserve(items.size());
  for (const auto& it : items) out.counts.push_back(it.second);
  return out;
}

template <class Count>
RankedCounts rank_frequencies(const std::map<std::string, Count>& token_counts) {
  return rank_frequencies(std::unordered_map<std::string, Count>(token_counts.begin(), token_counts.end()));
}

/// Zipf law over ranks 1..N: p_r = r^-a / sum_n n^-a.
class ZipfDistribution {
 public:
  ZipfDistribution(std::size_t ranks, double shape) : shape_(shape) {
    if (ranks == 0) throw Error("zipf: need at least one rank");
    if (!(shape > 0.0)) throw Error("zipf: shape parameter must be > 0");
    probs_.resize(ranks);
    // summed smallest-first to limit rounding drift
    double norm = 0.0;
    for (std::size_t n = ranks; n >= 1; --n) norm += std::pow(static_cast<double>(n), -shape);
    for (std::size_t r = 1; r <= ranks; ++r) probs_[r - 1] = std::pow(static_cast<double>(r), -shape) / norm;
  }

  std::size_t ranks() const { return probs_.size(); }
  double shape() const { return shape_; }

  double operator()(std::size_t rank) const {
    if (rank < 1 || rank > probs_.size()) {
      throw Error("zipf: rank " + std::to_string(rank) + " outside 1.." + std::to_string(probs_.size()));
    }
    return probs_[rank - 1];
  }

  const std::vector<double>& probabilities() const { return probs_; }

 private:
  double shape_;
  std::vector<double> probs_;
};

inline double zipf_probability(std::size_t rank, std::size_t ranks, double shape) {
  if (rank < 1 || rank > ranks) {
    throw Error("zipf: rank " + std::to_string(rank) + " outside 1.." + std::to_string(ranks));
  }
  return ZipfDistribution(ranks, shape)(rank);
}

struct ZipfFit {
  double a = 0.0;
  double r_squared = 0.0;
  std::size_t ranks = 0;
};

/// Ordinary least squares of ln(count) on ln(rank) over all ranks;
/// a = -slope, r_squared = squared Pearson correlation.
inline ZipfFit fit_zipf_shape(const RankedCounts& rc) {
  const std::size_t n = rc.size();
  if (n < 2) throw Error("fit_zipf_shape: need at least 2 ranks");
  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(rc.counts[i] > 0.0)) throw Error("fit_zipf_shape: counts must be positive");
    mean_x += std::log(static_cast<double>(i + 1));
    mean_y += std::log(rc.counts[i]);
  }
  mean_x /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);

  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(static_cast<double>(i + 1)) - mean_x;
    const double dy = std::log(rc.counts[i]) - mean_y;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (syy == 0.0) throw Error("fit_zipf_shape: all counts equal, slope is zero");
  ZipfFit fit;
  fit.ranks = n;
  fit.a = -sxy / sxx;
  fit.r_squared = std::clamp((sxy * sxy) / (sxx * syy), 0.0, 1.0);
  if (!(fit.a > 0.0)) throw Error("fit_zipf_shape: counts do not decrease with rank");
  return fit;
}

}  // namespace detprod
