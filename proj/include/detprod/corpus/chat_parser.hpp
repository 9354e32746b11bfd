#pragma once

// Minimal reader for CHAT transcripts (the CHILDES line format) and for
// the plain one-utterance-per-line fallback.

#include <algorithm>
#include <cctype>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "detprod/corpus/utterance.hpp"
#include "detprod/error.hpp"

namespace detprod {

namespace chat_detail {

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline std::string to_upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

inline bool is_terminal_punct(char c) { return c == '.' || c == '?' || c == '!'; }

// Removes [...] and <...> spans and media bullets (\x15...\x15).
inline std::string strip_spans(std::string_view body) {
  std::string out;
  out.reserve(body.size());
  int square = 0;
  int angle = 0;
  bool bullet = false;
  for (char c : body) {
    if (c == '\x15') {
      bullet = !bullet;
      out.push_back(' ');
      continue;
    }
    if (bullet) continue;
    if (c == '[') { ++square; out.push_back(' '); continue; }
    if (c == ']' && square > 0) { --square; out.push_back(' '); continue; }
    if (c == '<') { ++angle; out.push_back(' '); continue; }
    if (c == '>' && angle > 0) { --angle; out.push_back(' '); continue; }
    if (square == 0 && angle == 0) out.push_back(c);
  }
  return out;
}

inline bool is_dropped(std::string_view tok) {
  if (tok.empty()) return true;
  if (tok.front() == '&' || tok.front() == '+' || tok.front() == '0') return true;
  if (tok == "xxx" || tok == "yyy" || tok == "www") return true;
  // CHAT tag markers
  if (tok == "‡" || tok == "„") return true;
  return false;
}

// Cleans one whitespace-delimited CHAT word and appends the resulting
// tokens (the word and a split-off terminal punctuation mark).
inline void push_word(std::string_view raw, std::vector<std::string>& out) {
  std::string tok = to_lower(raw);
  if (is_dropped(tok)) return;

  std::string punct;
  if (tok.size() > 1 && is_terminal_punct(tok.back())) {
    punct.assign(1, tok.back());
    tok.pop_back();
  }
  // word@c style form markers and (elided) letters
  if (auto at = tok.find('@'); at != std::string::npos && at > 0) tok.resize(at);
  std::erase_if(tok, [](char c) { return c == '(' || c == ')'; });

  if (!tok.empty() && !is_dropped(tok)) out.push_back(std::move(tok));
  if (!punct.empty()) out.push_back(std::move(punct));
}

inline Utterance parse_utterance_line(std::string_view line, std::size_t line_no) {
  auto colon = line.find(':');
  if (colon == std::string_view::npos) throw ParseError(line_no, "utterance line without ':'");
  std::string speaker = to_upper(line.substr(1, colon - 1));
  if (speaker.empty()) throw ParseError(line_no, "empty speaker code");

  Utterance u{std::move(speaker), {}};
  std::istringstream words(strip_spans(line.substr(colon + 1)));
  std::string w;
  while (words >> w) push_word(w, u.tokens);
  return u;
}

}  // namespace chat_detail

/// Parses a CHAT transcript. Each `*CODE:` line (plus its tab-indented
/// continuation lines) becomes one Utterance; `@` headers and `%`
/// dependent tiers are ignored.
inline Corpus parse_chat(std::istream& in) {
  Corpus out;
  std::string line;
  std::string pending;
  std::size_t pending_line = 0;
  std::size_t line_no = 0;

  auto flush = [&] {
    if (!pending.empty()) out.push_back(chat_detail::parse_utterance_line(pending, pending_line));
    pending.clear();
  };

  bool in_utterance = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '\t' || line.front() == ' ') {
      if (in_utterance) pending += " " + line;
      continue;
    }
    flush();
    in_utterance = line.front() == '*';
    if (in_utterance) {
      pending = line;
      pending_line = line_no;
    }
  }
  flush();
  return out;
}

inline Corpus parse_chat(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_chat(in);
}

/// Speaker assigned to plain-text lines that carry no `SPEAKER<TAB>` prefix.
inline constexpr std::string_view kDefaultSpeaker = "UNK";

/// Plain fallback: one utterance per line, optional `SPEAKER<TAB>` prefix,
/// whitespace-separated tokens. Tokens are lowercased except the reserved
/// all-caps special tokens, which pass through unchanged.
inline Corpus parse_plain(std::istream& in) {
  Corpus out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    Utterance u{std::string(kDefaultSpeaker), {}};
    std::string_view body = line;
    if (auto tab = body.find('\t'); tab != std::string_view::npos) {
      std::string speaker = chat_detail::to_upper(body.substr(0, tab));
      if (!speaker.empty()) u.speaker = std::move(speaker);
      body.remove_prefix(tab + 1);
    }
    std::istringstream words{std::string(body)};
    std::string w;
    while (words >> w) {
      if (w == "PAD" || w == "OOV" || w == "EOS") {
        u.tokens.push_back(w);
      } else {
        u.tokens.push_back(chat_detail::to_lower(w));
      }
    }
    out.push_back(std::move(u));
  }
  return out;
}

inline Corpus parse_plain(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_plain(in);
}

}  // namespace detprod
