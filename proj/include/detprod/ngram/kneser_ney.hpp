#pragma once

// Interpolated modified Kneser-Ney (three discounts per order) for bigram
// and trigram models.
//
// Conventions:
//  * every sentence is padded with order-1 BOS markers and terminated by
//    EOS; BOS is never predicted, PAD is never predicted;
//  * the highest order uses raw counts, every lower order uses
//    continuation counts N1+(. g) over the distinct (k+1)-grams;
//  * per-order discounts D_c = c - (c+1) Y N_{c+1} / N_c with
//    Y = N_1 / (N_1 + 2 N_2), clamped to [0, c]; N_1 or N_2 == 0 falls
//    back to 0.75 for all three; N_3 == 0 reuses D_2 for D_3+;
//  * the unigram level interpolates with the uniform distribution over
//    the predictable ids (every id except PAD and BOS).

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "detprod/corpus/vocabulary.hpp"
#include "detprod/error.hpp"
#include "detprod/log.hpp"

namespace detprod {

struct Discounts {
  double one = 0.75;
  double two = 0.75;
  double three_plus = 0.75;

  double operator()(std::uint64_t count) const {
    return count == 0 ? 0.0 : count == 1 ? one : count == 2 ? two : three_plus;
  }

  bool operator==(const Discounts&) const = default;
};

/// Estimates modified-KN discounts from count-of-counts N_1..N_4.
inline Discounts estimate_discounts(const std::array<std::uint64_t, 4>& count_of_counts, bool* fell_back = nullptr) {
  const double n1 = static_cast<double>(count_of_counts[0]);
  const double n2 = static_cast<double>(count_of_counts[1]);
  const double n3 = static_cast<double>(count_of_counts[2]);
  const double n4 = static_cast<double>(count_of_counts[3]);
  if (fell_back) *fell_back = false;
  if (n1 == 0.0 || n2 == 0.0) {
    if (fell_back) *fell_back = true;
    return {};
  }
  const double y = n1 / (n1 + 2.0 * n2);
  Discounts d;
  d.one = std::clamp(1.0 - 2.0 * y * n2 / n1, 0.0, 1.0);
  d.two = std::clamp(2.0 - 3.0 * y * n3 / n2, 0.0, 2.0);
  d.three_plus = n3 == 0.0 ? d.two : std::clamp(3.0 - 4.0 * y * n4 / n3, 0.0, 3.0);
  return d;
}

class KneserNeyModel {
 public:
  using NGram = std::vector<TokenId>;
  /// Per order k (index k-1): k-gram -> count used at that order.
  using CountTables = std::vector<std::map<NGram, std::uint64_t>>;

  KneserNeyModel() = default;

  /// sentences: unpadded id sequences (no EOS; it is appended here).
  static KneserNeyModel train(const std::vector<std::vector<TokenId>>& sentences, int order,
                              std::vector<std::string> tokens) {
    check_order(order);
    if (sentences.empty()) throw Error("train_kn: empty corpus");
    const TokenId bos = static_cast<TokenId>(tokens.size());

    // raw counts of the top order
    std::unordered_map<std::uint64_t, std::uint64_t> top;
    NGram window(static_cast<std::size_t>(order));
    for (const auto& s : sentences) {
      std::vector<TokenId> padded(static_cast<std::size_t>(order - 1), bos);
      for (TokenId id : s) {
        if (id <= Vocabulary::kPad || id >= bos) {
          throw Error("train_kn: id " + std::to_string(id) + " is not a predictable token");
        }
        padded.push_back(id);
      }
      padded.push_back(Vocabulary::kEos);
      for (std::size_t i = static_cast<std::size_t>(order - 1); i < padded.size(); ++i) {
        ++top[pack(std::span(padded).subspan(i + 1 - static_cast<std::size_t>(order), static_cast<std::size_t>(order)))];
      }
    }

    CountTables tables(static_cast<std::size_t>(order));
    for (const auto& [key, n] : top) tables[static_cast<std::size_t>(order - 1)][unpack(key, order)] = n;
    // continuation counts: distinct left extensions among the (k+1)-grams
    for (int k = order - 1; k >= 1; --k) {
      std::set<NGram> extended;
      for (const auto& [g, n] : tables[static_cast<std::size_t>(order - 1)]) {
        extended.emplace(g.end() - (k + 1), g.end());
      }
      auto& table = tables[static_cast<std::size_t>(k - 1)];
      for (const auto& g : extended) ++table[NGram(g.begin() + 1, g.end())];
    }

    std::vector<Discounts> discounts;
    for (int k = 1; k <= order; ++k) {
      std::array<std::uint64_t, 4> coc{};
      for (const auto& [g, n] : tables[static_cast<std::size_t>(k - 1)]) {
        if (n >= 1 && n <= 4) ++coc[n - 1];
      }
      bool fell_back = false;
      discounts.push_back(estimate_discounts(coc, &fell_back));
      if (fell_back) {
        log_warning("kneser-ney order " + std::to_string(k) +
                    ": degenerate count-of-counts, using fixed discount 0.75");
      }
    }
    return KneserNeyModel(order, std::move(tokens), std::move(tables), std::move(discounts));
  }

  KneserNeyModel(int order, std::vector<std::string> tokens, CountTables tables, std::vector<Discounts> discounts)
      : order_(order), tokens_(std::move(tokens)), tables_(std::move(tables)), discounts_(std::move(discounts)) {
    check_order(order);
    if (tokens_.size() <= static_cast<std::size_t>(Vocabulary::kFirstWord) - 1) {
      throw Error("kneser-ney: vocabulary must contain the special tokens");
    }
    if (tokens_.size() >= (std::size_t{1} << kBits) - 1) throw Error("kneser-ney: vocabulary too large");
    if (tables_.size() != static_cast<std::size_t>(order) || discounts_.size() != static_cast<std::size_t>(order)) {
      throw Error("kneser-ney: expected one count table and one discount triple per order");
    }
    contexts_.resize(static_cast<std::size_t>(order));
    for (int k = 1; k <= order; ++k) {
      auto& ctx_map = contexts_[static_cast<std::size_t>(k - 1)];
      for (const auto& [g, n] : tables_[static_cast<std::size_t>(k - 1)]) {
        if (g.size() != static_cast<std::size_t>(k)) throw Error("kneser-ney: n-gram length does not match its order");
        if (n == 0) continue;
        TokenId w = g.back();
        if (w <= Vocabulary::kPad || w >= bos()) throw Error("kneser-ney: n-gram predicts a non-predictable id");
        auto& ctx = ctx_map[pack(std::span(g).first(g.size() - 1))];
        ctx.successors.emplace_back(w, n);
        ctx.total += n;
        if (n == 1) ++ctx.n1;
        else if (n == 2) ++ctx.n2;
        else ++ctx.n3plus;
      }
      for (auto& [key, ctx] : ctx_map) std::sort(ctx.successors.begin(), ctx.successors.end());
    }
  }

  int order() const { return order_; }
  TokenId bos() const { return static_cast<TokenId>(tokens_.size()); }
  /// Number of vocabulary ids (BOS excluded).
  std::size_t vocab_size() const { return tokens_.size(); }
  /// Number of ids with nonzero probability mass (all but PAD and BOS).
  std::size_t predictable_size() const { return tokens_.size() - 1; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const CountTables& tables() const { return tables_; }
  const std::vector<Discounts>& discounts() const { return discounts_; }

  /// P(word | context). Contexts shorter than order-1 are left-padded with
  /// BOS, longer ones are cut to their last order-1 ids. PAD and BOS get 0.
  double prob(std::span<const TokenId> context, TokenId word) const {
    if (word <= Vocabulary::kPad || word >= bos()) return 0.0;
    const auto ctx = full_context(context);
    return prob_at(order_, std::span<const TokenId>(ctx), word);
  }

  /// The whole conditional distribution, indexed by id (size vocab_size()).
  std::vector<double> distribution(std::span<const TokenId> context) const {
    const auto ctx = full_context(context);
    std::vector<double> dist(tokens_.size(), 0.0);
    const double uniform = 1.0 / static_cast<double>(predictable_size());
    for (std::size_t id = 1; id < dist.size(); ++id) dist[id] = uniform;
    for (int k = 1; k <= order_; ++k) {
      const auto h = std::span<const TokenId>(ctx).last(static_cast<std::size_t>(k - 1));
      const auto& ctx_map = contexts_[static_cast<std::size_t>(k - 1)];
      auto it = ctx_map.find(pack(h));
      if (it == ctx_map.end()) continue;
      const auto& c = it->second;
      const Discounts& d = discounts_[static_cast<std::size_t>(k - 1)];
      const double total = static_cast<double>(c.total);
      const double gamma = (d.one * c.n1 + d.two * c.n2 + d.three_plus * c.n3plus) / total;
      for (std::size_t id = 1; id < dist.size(); ++id) dist[id] *= gamma;
      for (const auto& [w, n] : c.successors) {
        dist[static_cast<std::size_t>(w)] += std::max(static_cast<double>(n) - d(n), 0.0) / total;
      }
    }
    return dist;
  }

 private:
  static constexpr int kBits = 21;

  struct ContextStats {
    std::vector<std::pair<TokenId, std::uint64_t>> successors;
    std::uint64_t total = 0;
    std::uint64_t n1 = 0, n2 = 0, n3plus = 0;
  };

  static void check_order(int order) {
    if (order != 2 && order != 3) throw Error("kneser-ney: order must be 2 or 3, got " + std::to_string(order));
  }

  // Ids are shifted by one so that the empty and shorter n-grams never
  // collide with longer ones.
  static std::uint64_t pack(std::span<const TokenId> ids) {
    std::uint64_t key = 0;
    for (TokenId id : ids) key = (key << kBits) | static_cast<std::uint64_t>(id + 1);
    return key;
  }

  static NGram unpack(std::uint64_t key, int len) {
    NGram g(static_cast<std::size_t>(len));
    const std::uint64_t mask = (std::uint64_t{1} << kBits) - 1;
    for (int i = len - 1; i >= 0; --i) {
      g[static_cast<std::size_t>(i)] = static_cast<TokenId>(key & mask) - 1;
      key >>= kBits;
    }
    return g;
  }

  std::vector<TokenId> full_context(std::span<const TokenId> context) const {
    const std::size_t need = static_cast<std::size_t>(order_ - 1);
    std::vector<TokenId> ctx(need, bos());
    const std::size_t take = std::min(need, context.size());
    std::copy(context.end() - static_cast<std::ptrdiff_t>(take), context.end(), ctx.end() - static_cast<std::ptrdiff_t>(take));
    return ctx;
  }

  double prob_at(int k, std::span<const TokenId> ctx, TokenId w) const {
    if (k == 0) return 1.0 / static_cast<double>(predictable_size());
    const auto h = ctx.last(static_cast<std::size_t>(k - 1));
    const double lower = prob_at(k - 1, ctx, w);
    const auto& ctx_map = contexts_[static_cast<std::size_t>(k - 1)];
    auto it = ctx_map.find(pack(h));
    if (it == ctx_map.end()) return lower;
    const auto& c = it->second;
    const Discounts& d = discounts_[static_cast<std::size_t>(k - 1)];
    auto pos = std::lower_bound(c.successors.begin(), c.successors.end(), std::pair<TokenId, std::uint64_t>(w, 0));
    std::uint64_t n = (pos != c.successors.end() && pos->first == w) ? pos->second : 0;
    const double total = static_cast<double>(c.total);
    const double gamma = (d.one * c.n1 + d.two * c.n2 + d.three_plus * c.n3plus) / total;
    return std::max(static_cast<double>(n) - d(n), 0.0) / total + gamma * lower;
  }

  int order_ = 2;
  std::vector<std::string> tokens_;
  CountTables tables_;
  std::vector<Discounts> discounts_;
  std::vector<std::unordered_map<std::uint64_t, ContextStats>> contexts_;
};

inline KneserNeyModel train_kn(const std::vector<std::vector<TokenId>>& sentences, int order, const Vocabulary& vocab) {
  std::vector<std::string> tokens;
  tokens.reserve(vocab.size());
  for (std::size_t id = 0; id < vocab.size(); ++id) tokens.push_back(vocab.token(static_cast<TokenId>(id)));
  return KneserNeyModel::train(sentences, order, std::move(tokens));
}

}  // namespace detprod
