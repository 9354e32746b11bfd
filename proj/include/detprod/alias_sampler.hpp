#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "detprod/error.hpp"

namespace detprod {

/// Walker/Vose alias table: O(1) draws from a fixed discrete distribution
/// using a single 64-bit random word per draw.
class AliasSampler {
 public:
  explicit AliasSampler(std::span<const double> weights) {
    const std::size_t n = weights.size();
    if (n == 0) throw Error("AliasSampler: empty distribution");
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw Error("AliasSampler: negative or NaN weight");
      total += w;
    }
    if (!(total > 0.0)) throw Error("AliasSampler: weights sum to zero");

    threshold_.assign(n, 0);
    alias_.assign(n, 0);
    std::vector<double> scaled(n);
    std::vector<std::uint32_t> small, large;
    for (std::size_t i = 0; i < n; ++i) {
      scaled[i] = weights[i] * static_cast<double>(n) / total;
      (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
    }
    while (!small.empty() && !large.empty()) {
      auto s = small.back();
      small.pop_back();
      auto l = large.back();
      threshold_[s] = to_threshold(scaled[s]);
      alias_[s] = l;
      scaled[l] -= 1.0 - scaled[s];
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    for (auto i : large) { threshold_[i] = kAlways; alias_[i] = i; }
    for (auto i : small) { threshold_[i] = kAlways; alias_[i] = i; }
  }

  std::size_t size() const { return threshold_.size(); }

  /// High 32 bits pick the column, low 32 bits decide column vs alias.
  template <class Urbg>
  std::size_t operator()(Urbg& rng) const {
    const std::uint64_t word = rng();
    const std::uint64_t column = ((word >> 32) * threshold_.size()) >> 32;
    const std::uint32_t coin = static_cast<std::uint32_t>(word);
    return coin < threshold_[column] ? column : alias_[column];
  }

 private:
  static constexpr std::uint64_t kAlways = std::uint64_t{1} << 32;

  static std::uint64_t to_threshold(double p) {
    if (p >= 1.0) return kAlways;
    return static_cast<std::uint64_t>(p * 4294967296.0);
  }

  std::vector<std::uint64_t> threshold_;
  std::vector<std::uint32_t> alias_;
};

}  // namespace detprod
