#pragma once

// Determiner/noun overlap: the empirical score of a corpus and the closed
// form expected under Zipf-distributed noun draws, plus a sampling oracle
// for the closed form.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "detprod/alias_sampler.hpp"
#include "detprod/corpus/utterance.hpp"
#include "detprod/error.hpp"
#include "detprod/random.hpp"
#include "detprod/zipf.hpp"

namespace detprod {

class DeterminerProfile {
 public:
  DeterminerProfile() : DeterminerProfile({"a", "the"}, {0.393, 0.607}) {}

  /// Probabilities must each lie in (0, 1] and sum to 1 within 1e-9; they
  /// are renormalized so the stored values sum to 1 to machine precision.
  DeterminerProfile(std::vector<std::string> determiners, std::vector<double> probs)
      : determiners_(std::move(determiners)), probs_(std::move(probs)) {
    if (determiners_.empty()) throw Error("determiner profile: need at least one determiner");
    if (determiners_.size() != probs_.size()) throw Error("determiner profile: names/probabilities size mismatch");
    std::set<std::string> seen(determiners_.begin(), determiners_.end());
    if (seen.size() != determiners_.size()) throw Error("determiner profile: duplicate determiner");
    double total = 0.0;
    for (double d : probs_) {
      if (!(d > 0.0 && d <= 1.0)) throw Error("determiner profile: probability outside (0, 1]");
      total += d;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw Error("determiner profile: probabilities sum to " + std::to_string(total));
    }
    if (probs_.size() == 1) {
      probs_[0] = 1.0;
    } else {
      for (double& d : probs_) d /= total;
    }
  }

  const std::vector<std::string>& determiners() const { return determiners_; }
  const std::vector<double>& probs() const { return probs_; }
  std::size_t size() const { return determiners_.size(); }

  bool contains(const std::string& w) const {
    return std::find(determiners_.begin(), determiners_.end(), w) != determiners_.end();
  }

 private:
  std::vector<std::string> determiners_;
  std::vector<double> probs_;
};

/// Relative token frequencies of the given determiners in a corpus.
inline DeterminerProfile estimate_determiner_profile(const Corpus& corpus,
                                                     const std::vector<std::string>& determiners) {
  std::vector<double> counts(determiners.size(), 0.0);
  for (const auto& u : corpus)
    for (const auto& t : u.tokens)
      for (std::size_t i = 0; i < determiners.size(); ++i)
        if (t == determiners[i]) counts[i] += 1.0;
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (total == 0.0) throw Error("estimate_determiner_profile: no determiner tokens in corpus");
  for (double& c : counts) c /= total;
  return DeterminerProfile(determiners, counts);
}

/// Word list standing in for a part-of-speech tagger.
class NounLexicon {
 public:
  NounLexicon() = default;
  explicit NounLexicon(std::unordered_set<std::string> nouns) : nouns_(std::move(nouns)) {}

  /// One noun per line; blank lines and `#` comments skipped; lowercased.
  static NounLexicon read(std::istream& in) {
    std::unordered_set<std::string> nouns;
    std::string line;
    while (std::getline(in, line)) {
      while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
      auto start = line.find_first_not_of(" \t");
      if (start == std::string::npos || line[start] == '#') continue;
      std::string w = line.substr(start);
      std::transform(w.begin(), w.end(), w.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      nouns.insert(std::move(w));
    }
    if (nouns.empty()) throw Error("noun lexicon is empty");
    return NounLexicon(std::move(nouns));
  }

  bool contains(const std::string& w) const { return nouns_.contains(w); }
  std::size_t size() const { return nouns_.size(); }

 private:
  std::unordered_set<std::string> nouns_;
};

struct DetNounPair {
  std::string determiner;
  std::string noun;

  bool operator==(const DetNounPair&) const = default;
};

/// Every adjacent (determiner, noun) bigram inside an utterance.
inline std::vector<DetNounPair> extract_det_noun_pairs(const Corpus& corpus, const DeterminerProfile& profile,
                                                       const NounLexicon& lexicon) {
  std::vector<DetNounPair> pairs;
  for (const auto& u : corpus) {
    for (std::size_t i = 0; i + 1 < u.tokens.size(); ++i) {
      if (profile.contains(u.tokens[i]) && lexicon.contains(u.tokens[i + 1])) {
        pairs.push_back({u.tokens[i], u.tokens[i + 1]});
      }
    }
  }
  return pairs;
}

struct PairCounts {
  std::size_t nouns = 0;  // N: distinct nouns
  std::size_t pairs = 0;  // S: pair tokens
};

inline PairCounts count_pairs(const std::vector<DetNounPair>& pairs) {
  std::unordered_set<std::string> nouns;
  for (const auto& p : pairs) nouns.insert(p.noun);
  return {nouns.size(), pairs.size()};
}

/// Token frequency of each noun inside the pairs (the population the
/// expected-overlap Zipf law models).
inline std::unordered_map<std::string, std::uint64_t> noun_counts(const std::vector<DetNounPair>& pairs) {
  std::unordered_map<std::string, std::uint64_t> out;
  for (const auto& p : pairs) ++out[p.noun];
  return out;
}

/// Fraction of distinct nouns seen after at least two distinct determiners.
inline double empirical_overlap(const std::vector<DetNounPair>& pairs) {
  std::unordered_map<std::string, std::set<std::string>> dets_of;
  for (const auto& p : pairs) dets_of[p.noun].insert(p.determiner);
  if (dets_of.empty()) return 0.0;
  std::size_t overlapping = 0;
  for (const auto& [noun, dets] : dets_of) overlapping += dets.size() >= 2 ? 1 : 0;
  return static_cast<double>(overlapping) / static_cast<double>(dets_of.size());
}

struct OverlapParams {
  std::size_t nouns = 1;  // N
  std::size_t pairs = 0;  // S
  double shape = 1.06;    // Zipf a
  DeterminerProfile profile;

  std::size_t determiners() const { return profile.size(); }
};

namespace overlap_detail {

inline void validate(const OverlapParams& params) {
  if (params.nouns == 0) throw Error("overlap: N must be >= 1");
  if (!(params.shape > 0.0)) throw Error("overlap: Zipf shape must be > 0");
}

// 1 + (D-1)(1-p)^S - sum_i (d_i p + 1 - p)^S, powers taken in log space.
inline double overlap_given_probability(double p, const OverlapParams& params) {
  if (params.pairs == 0) return 0.0;
  const double s = static_cast<double>(params.pairs);
  const double d_count = static_cast<double>(params.determiners());
  double value = 1.0 + (d_count - 1.0) * std::exp(s * std::log1p(-p));
  for (double d : params.profile.probs()) value -= std::exp(s * std::log1p(-(1.0 - d) * p));
  return std::clamp(value, 0.0, 1.0);
}

}  // namespace overlap_detail

/// Probability that the noun at frequency rank r is seen with at least two
/// distinct determiners among S independent pair draws.
inline double expected_overlap_at_rank(std::size_t rank, const OverlapParams& params) {
  overlap_detail::validate(params);
  const double p = zipf_probability(rank, params.nouns, params.shape);
  return overlap_detail::overlap_given_probability(p, params);
}

/// Mean of the per-rank expected overlap over ranks 1..N.
inline double expected_overlap(const OverlapParams& params) {
  overlap_detail::validate(params);
  const ZipfDistribution zipf(params.nouns, params.shape);
  double total = 0.0;
  for (double p : zipf.probabilities()) total += overlap_detail::overlap_given_probability(p, params);
  return total / static_cast<double>(params.nouns);
}

struct MonteCarloEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t replicates = 0;
};

/// Simulates the sampling model behind the closed form: each replicate
/// draws S (determiner, noun-rank) pairs and scores the fraction of the N
/// ranks seen with >= 2 distinct determiners. Replicates are split into
/// fixed blocks with counter-derived seeds, so the result depends only on
/// (params, replicates, seed), never on the thread count.
inline MonteCarloEstimate monte_carlo_overlap(const OverlapParams& params, std::size_t replicates,
                                              std::uint64_t seed, unsigned threads = 0) {
  overlap_detail::validate(params);
  if (replicates == 0) throw Error("monte_carlo_overlap: replicates must be >= 1");
  const std::size_t n = params.nouns;
  const std::size_t d = params.determiners();
  if (d > 32) throw Error("monte_carlo_overlap: at most 32 determiners supported");
  if (params.pairs == 0 || d == 1) return {0.0, 0.0, replicates};

  const ZipfDistribution zipf(n, params.shape);
  std::vector<double> joint(n * d);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t i = 0; i < d; ++i) joint[r * d + i] = zipf.probabilities()[r] * params.profile.probs()[i];
  const AliasSampler sampler(joint);

  constexpr std::size_t kBlock = 1024;
  const std::size_t blocks = (replicates + kBlock - 1) / kBlock;
  std::vector<double> block_sum(blocks, 0.0), block_sumsq(blocks, 0.0);

  auto run_block = [&](std::size_t b) {
    Rng rng(derive_seed(seed, b));
    std::vector<std::uint32_t> seen(n);
    const std::size_t first = b * kBlock;
    const std::size_t last = std::min(replicates, first + kBlock);
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t rep = first; rep < last; ++rep) {
      std::fill(seen.begin(), seen.end(), 0u);
      std::size_t overlapping = 0;
      for (std::size_t s = 0; s < params.pairs && overlapping < n; ++s) {
        const std::size_t k = sampler(rng);
        const std::size_t rank = k / d;
        const std::uint32_t bit = std::uint32_t{1} << (k % d);
        const std::uint32_t mask = seen[rank];
        if (mask & bit) continue;
        // exactly one determiner seen so far: this draw makes it overlap
        if (mask != 0 && (mask & (mask - 1)) == 0) ++overlapping;
        seen[rank] = mask | bit;
      }
      const double frac = static_cast<double>(overlapping) / static_cast<double>(n);
      sum += frac;
      sumsq += frac * frac;
    }
    block_sum[b] = sum;
    block_sumsq[b] = sumsq;
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, blocks));
  if (threads <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) run_block(b);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t b = t; b < blocks; b += threads) run_block(b);
      });
    }
    for (auto& th : pool) th.join();
  }

  double sum = 0.0, sumsq = 0.0;
  for (std::size_t b = 0; b < blocks; ++b) {
    sum += block_sum[b];
    sumsq += block_sumsq[b];
  }
  const double reps = static_cast<double>(replicates);
  MonteCarloEstimate est;
  est.replicates = replicates;
  est.mean = sum / reps;
  if (replicates > 1) {
    const double var = std::max(0.0, (sumsq - reps * est.mean * est.mean) / (reps - 1.0));
    est.standard_error = std::sqrt(var / reps);
  }
  return est;
}

struct OverlapReport {
  std::size_t nouns = 0;
  std::size_t pairs = 0;
  double empirical = 0.0;
  double expected = 0.0;
};

/// Extracts pairs from a corpus, then scores empirical overlap and the
/// expected overlap at the measured N and S with the given Zipf shape.
inline OverlapReport overlap_report(const Corpus& corpus, const DeterminerProfile& profile,
                                    const NounLexicon& lexicon, double shape) {
  const auto pairs = extract_det_noun_pairs(corpus, profile, lexicon);
  const auto counts = count_pairs(pairs);
  OverlapReport report;
  report.nouns = counts.nouns;
  report.pairs = counts.pairs;
  report.empirical = empirical_overlap(pairs);
  if (counts.nouns > 0) report.expected = expected_overlap({counts.nouns, counts.pairs, shape, profile});
  return report;
}

}  // namespace detprod
