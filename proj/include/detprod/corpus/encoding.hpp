#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "detprod/corpus/utterance.hpp"
#include "detprod/corpus/vocabulary.hpp"
#include "detprod/error.hpp"

namespace detprod {

inline constexpr std::size_t kDefaultMaxLen = 10;

/// Fixed-length id sequence; any PAD ids form a prefix.
struct EncodedUtterance {
  std::vector<TokenId> ids;

  bool operator==(const EncodedUtterance&) const = default;
};

/// Maps tokens to ids (unknown -> OOV), keeps the first max_len tokens and
/// left-pads shorter utterances with PAD.
inline EncodedUtterance encode_utterance(const Utterance& u, const Vocabulary& vocab,
                                         std::size_t max_len = kDefaultMaxLen) {
  if (max_len == 0) throw Error("encode_utterance: max_len must be >= 1");
  const std::size_t kept = std::min(u.tokens.size(), max_len);
  EncodedUtterance out{std::vector<TokenId>(max_len, Vocabulary::kPad)};
  const std::size_t offset = max_len - kept;
  for (std::size_t i = 0; i < kept; ++i) out.ids[offset + i] = vocab.id(u.tokens[i]);
  return out;
}

inline std::vector<EncodedUtterance> encode_corpus(const Corpus& corpus, const Vocabulary& vocab,
                                                   std::size_t max_len = kDefaultMaxLen) {
  std::vector<EncodedUtterance> out;
  out.reserve(corpus.size());
  for (const auto& u : corpus) out.push_back(encode_utterance(u, vocab, max_len));
  return out;
}

/// Ids to token strings with the PAD prefix (and any stray PADs) removed.
inline std::vector<std::string> decode_ids(const std::vector<TokenId>& ids, const Vocabulary& vocab) {
  std::vector<std::string> out;
  for (TokenId id : ids) {
    if (id != Vocabulary::kPad) out.push_back(vocab.token(id));
  }
  return out;
}

/// Unpadded id sequence with OOV mapping, as consumed by the n-gram models.
inline std::vector<TokenId> to_ids(const Utterance& u, const Vocabulary& vocab) {
  std::vector<TokenId> out;
  out.reserve(u.tokens.size());
  for (const auto& t : u.tokens) {
    TokenId id = vocab.id(t);
    if (id != Vocabulary::kPad) out.push_back(id);
  }
  return out;
}

}  // namespace detprod
