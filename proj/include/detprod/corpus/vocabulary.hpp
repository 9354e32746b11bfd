#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "detprod/corpus/utterance.hpp"
#include "detprod/error.hpp"

namespace detprod {

using TokenId = std::int32_t;

/// Capped token <-> id bijection. Ids 0..2 are the reserved PAD, OOV and
/// EOS symbols; word ids start at 3 in descending-count order.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kOov = 1;
  static constexpr TokenId kEos = 2;
  static constexpr TokenId kFirstWord = 3;
  static constexpr std::size_t kDefaultMaxWords = 3000;

  static constexpr std::string_view kPadToken = "PAD";
  static constexpr std::string_view kOovToken = "OOV";
  static constexpr std::string_view kEosToken = "EOS";

  struct Entry {
    std::string token;
    std::uint64_t count = 0;

    bool operator==(const Entry&) const = default;
  };

  Vocabulary() : Vocabulary(std::vector<Entry>{}, kDefaultMaxWords) {}

  /// Entries must already be in canonical order (descending count, then
  /// ascending token); at most max_words of them are kept.
  Vocabulary(std::vector<Entry> entries, std::size_t max_words) : max_words_(max_words) {
    if (max_words == 0) throw Error("vocabulary: max_words must be >= 1");
    if (entries.size() > max_words) entries.resize(max_words);
    entries_ = std::move(entries);
    tokens_ = {std::string(kPadToken), std::string(kOovToken), std::string(kEosToken)};
    for (TokenId id = 0; id < kFirstWord; ++id) id_of_.emplace(tokens_[static_cast<std::size_t>(id)], id);
    for (const auto& e : entries_) {
      if (e.count == 0) throw Error("vocabulary: entry '" + e.token + "' has zero count");
      if (!id_of_.emplace(e.token, static_cast<TokenId>(tokens_.size())).second) {
        throw Error("vocabulary: duplicate token '" + e.token + "'");
      }
      tokens_.push_back(e.token);
    }
  }

  /// Counts every token and keeps the max_words most frequent.
  static Vocabulary build(const Corpus& corpus, std::size_t max_words = kDefaultMaxWords) {
    if (max_words == 0) throw Error("vocabulary: max_words must be >= 1");
    std::unordered_map<std::string, std::uint64_t> counts;
    for (const auto& u : corpus)
      for (const auto& t : u.tokens) ++counts[t];
    if (counts.empty()) throw Error("vocabulary: empty corpus");

    std::vector<Entry> entries;
    entries.reserve(counts.size());
    for (auto& [tok, n] : counts) entries.push_back({tok, n});
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
      return a.count != b.count ? a.count > b.count : a.token < b.token;
    });
    return Vocabulary(std::move(entries), max_words);
  }

  TokenId id(std::string_view token) const {
    auto it = id_of_.find(std::string(token));
    return it == id_of_.end() ? kOov : it->second;
  }

  bool contains(std::string_view token) const { return id_of_.contains(std::string(token)); }

  const std::string& token(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
      throw Error("vocabulary: id " + std::to_string(id) + " out of range");
    }
    return tokens_[static_cast<std::size_t>(id)];
  }

  bool valid(TokenId id) const { return id >= 0 && static_cast<std::size_t>(id) < tokens_.size(); }

  /// Number of ids including the specials.
  std::size_t size() const { return tokens_.size(); }
  std::size_t word_count() const { return entries_.size(); }
  std::size_t max_words() const { return max_words_; }
  const std::vector<Entry>& entries() const { return entries_; }

  /// TSV: a `#specials` header row, then `token<TAB>id<TAB>count` per word.
  void write_tsv(std::ostream& out) const {
    out << "#specials\tPAD=" << kPad << "\tOOV=" << kOov << "\tEOS=" << kEos
        << "\tmax_words=" << max_words_ << '\n';
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      out << entries_[i].token << '\t' << (kFirstWord + static_cast<TokenId>(i)) << '\t'
          << entries_[i].count << '\n';
    }
  }

  static Vocabulary read_tsv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    std::size_t max_words = kDefaultMaxWords;
    std::vector<Entry> entries;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      if (line.front() == '#') {
        if (line_no != 1) continue;
        std::map<std::string, long long> fields;
        std::istringstream hs(line.substr(line.find('\t') == std::string::npos ? line.size()
                                                                                : line.find('\t') + 1));
        std::string kv;
        while (std::getline(hs, kv, '\t')) {
          auto eq = kv.find('=');
          if (eq == std::string::npos) throw ParseError(line_no, "bad header field '" + kv + "'");
          fields[kv.substr(0, eq)] = std::stoll(kv.substr(eq + 1));
        }
        if (fields["PAD"] != kPad || fields["OOV"] != kOov || fields["EOS"] != kEos) {
          throw ParseError(line_no, "special ids differ from PAD=0 OOV=1 EOS=2");
        }
        if (fields.contains("max_words")) max_words = static_cast<std::size_t>(fields["max_words"]);
        continue;
      }
      std::istringstream ls(line);
      std::string token, id_s, count_s;
      if (!std::getline(ls, token, '\t') || !std::getline(ls, id_s, '\t') || !std::getline(ls, count_s)) {
        throw ParseError(line_no, "expected token<TAB>id<TAB>count");
      }
      TokenId expected = kFirstWord + static_cast<TokenId>(entries.size());
      if (std::stol(id_s) != expected) {
        throw ParseError(line_no, "id " + id_s + " out of sequence (expected " + std::to_string(expected) + ")");
      }
      entries.push_back({token, std::stoull(count_s)});
    }
    return Vocabulary(std::move(entries), std::max(max_words, entries.size()));
  }

 private:
  std::size_t max_words_;
  std::vector<Entry> entries_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> id_of_;
};

}  // namespace detprod
