#pragma once

#include <algorithm>
#include <cstddef>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

namespace detprod {

/// One speaker turn: an uppercase speaker code and its lowercase word tokens.
struct Utterance {
  std::string speaker;
  std::vector<std::string> tokens;

  bool operator==(const Utterance&) const = default;
};

using Corpus = std::vector<Utterance>;

/// Keeps the utterances whose speaker is not a child, preserving order.
inline Corpus filter_child_directed(const Corpus& utterances,
                                    const std::set<std::string>& child_codes = {"CHI"}) {
  Corpus out;
  std::copy_if(utterances.begin(), utterances.end(), std::back_inserter(out),
               [&](const Utterance& u) { return !child_codes.contains(u.speaker); });
  return out;
}

struct CorpusStats {
  std::size_t utterances = 0;
  std::size_t tokens = 0;
  std::size_t types = 0;

  bool operator==(const CorpusStats&) const = default;
};

inline CorpusStats corpus_stats(const Corpus& utterances) {
  CorpusStats stats;
  std::unordered_set<std::string> types;
  for (const auto& u : utterances) {
    ++stats.utterances;
    stats.tokens += u.tokens.size();
    types.insert(u.tokens.begin(), u.tokens.end());
  }
  stats.types = types.size();
  return stats;
}

}  // namespace detprod
