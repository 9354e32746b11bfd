#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "detprod/corpus/utterance.hpp"
#include "detprod/corpus/vocabulary.hpp"
#include "detprod/error.hpp"
#include "detprod/ngram/kneser_ney.hpp"
#include "detprod/random.hpp"

namespace detprod {

/// Inverse-CDF sampler over a model's conditional distributions. Outcomes
/// are laid out by descending probability (ties: ascending id), so a
/// quantile of 0 always yields the most probable token.
class NgramSampler {
 public:
  explicit NgramSampler(const KneserNeyModel& model, std::size_t cache_limit = 1 << 14)
      : model_(model), cache_limit_(cache_limit) {}

  TokenId sample(std::span<const TokenId> context, double quantile) {
    const Cdf& cdf = lookup(context);
    const double target = quantile * cdf.cumulative.back();
    auto it = std::upper_bound(cdf.cumulative.begin(), cdf.cumulative.end(), target);
    if (it == cdf.cumulative.end()) --it;
    return cdf.ids[static_cast<std::size_t>(it - cdf.cumulative.begin())];
  }

 private:
  struct Cdf {
    std::vector<TokenId> ids;
    std::vector<double> cumulative;
  };

  const Cdf& lookup(std::span<const TokenId> context) {
    const std::size_t keep = std::min(context.size(), static_cast<std::size_t>(model_.order() - 1));
    std::uint64_t key = keep;
    for (TokenId id : context.last(keep)) key = key * 0x100000001b3ULL ^ static_cast<std::uint64_t>(id + 1);
    // collisions are resolved by storing the context itself
    auto it = cache_.find(key);
    std::vector<TokenId> ctx(context.end() - static_cast<std::ptrdiff_t>(keep), context.end());
    if (it != cache_.end() && it->second.first == ctx) return it->second.second;
    if (cache_.size() >= cache_limit_) cache_.clear();

    const auto dist = model_.distribution(ctx);
    Cdf cdf;
    for (std::size_t id = 0; id < dist.size(); ++id) {
      if (dist[id] > 0.0) cdf.ids.push_back(static_cast<TokenId>(id));
    }
    std::stable_sort(cdf.ids.begin(), cdf.ids.end(), [&](TokenId a, TokenId b) {
      return dist[static_cast<std::size_t>(a)] > dist[static_cast<std::size_t>(b)];
    });
    double running = 0.0;
    cdf.cumulative.reserve(cdf.ids.size());
    for (TokenId id : cdf.ids) {
      running += dist[static_cast<std::size_t>(id)];
      cdf.cumulative.push_back(running);
    }
    auto& slot = cache_[key];
    slot = {std::move(ctx), std::move(cdf)};
    return slot.second;
  }

  const KneserNeyModel& model_;
  std::size_t cache_limit_;
  std::unordered_map<std::uint64_t, std::pair<std::vector<TokenId>, Cdf>> cache_;
};

/// Starts from seed_word and samples until EOS or max_len tokens; EOS is
/// not part of the result. quantile() must return values in [0, 1).
template <class QuantileSource>
std::vector<TokenId> generate(NgramSampler& sampler, const KneserNeyModel& model, TokenId seed_word,
                              QuantileSource&& quantile, std::size_t max_len = 10) {
  if (seed_word <= Vocabulary::kPad || seed_word >= model.bos() || seed_word == Vocabulary::kEos) {
    throw Error("generate: seed id " + std::to_string(seed_word) + " is not a vocabulary word");
  }
  std::vector<TokenId> out{seed_word};
  while (out.size() < max_len) {
    const TokenId next = sampler.sample(out, quantile());
    if (next == Vocabulary::kEos) break;
    out.push_back(next);
  }
  return out;
}

template <class QuantileSource>
std::vector<TokenId> generate(const KneserNeyModel& model, TokenId seed_word, QuantileSource&& quantile,
                              std::size_t max_len = 10) {
  NgramSampler sampler(model);
  return generate(sampler, model, seed_word, std::forward<QuantileSource>(quantile), max_len);
}

/// One generated sentence per source sentence, seeded with its first
/// non-PAD id; sentence i draws from its own stream derive_seed(seed, i).
inline std::vector<std::vector<TokenId>> generate_corpus(const KneserNeyModel& model,
                                                         const std::vector<std::vector<TokenId>>& sources,
                                                         std::uint64_t seed, std::size_t max_len = 10) {
  NgramSampler sampler(model);
  std::vector<std::vector<TokenId>> out;
  out.reserve(sources.size());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    auto first = std::find_if(sources[i].begin(), sources[i].end(), [](TokenId id) { return id != Vocabulary::kPad; });
    if (first == sources[i].end()) {
      out.emplace_back();
      continue;
    }
    Rng rng(derive_seed(seed, i));
    out.push_back(generate(sampler, model, *first, [&] { return uniform01(rng); }, max_len));
  }
  return out;
}

/// Token-level wrapper: sources go through the model's own vocabulary
/// (unknown words become OOV) and outputs are decoded back to tokens.
inline Corpus generate_corpus(const KneserNeyModel& model, const Corpus& sources, std::uint64_t seed,
                              std::size_t max_len = 10, const std::string& speaker = "KN") {
  std::unordered_map<std::string, TokenId> ids;
  for (std::size_t i = 0; i < model.tokens().size(); ++i) ids.emplace(model.tokens()[i], static_cast<TokenId>(i));
  std::vector<std::vector<TokenId>> encoded;
  encoded.reserve(sources.size());
  for (const auto& u : sources) {
    auto& row = encoded.emplace_back();
    for (const auto& t : u.tokens) {
      auto it = ids.find(t);
      row.push_back(it == ids.end() ? Vocabulary::kOov : it->second);
    }
  }
  Corpus out;
  out.reserve(sources.size());
  for (const auto& row : generate_corpus(model, encoded, seed, max_len)) {
    auto& u = out.emplace_back(Utterance{speaker, {}});
    for (TokenId id : row) u.tokens.push_back(model.tokens()[static_cast<std::size_t>(id)]);
  }
  return out;
}

}  // namespace detprod
