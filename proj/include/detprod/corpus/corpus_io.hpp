#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <ostream>
#include <string>

#include "detprod/corpus/chat_parser.hpp"
#include "detprod/corpus/utterance.hpp"
#include "detprod/corpus/vocabulary.hpp"
#include "detprod/error.hpp"

namespace detprod {

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

/// `.cha` files are read as CHAT, anything else as the plain line format.
inline Corpus load_transcript(const std::filesystem::path& path) {
  auto in = open_input(path);
  if (path.extension() == ".cha") return parse_chat(in);
  return parse_plain(in);
}

/// Loads a file, or every `.cha`/`.txt` file under a directory in path order.
inline Corpus load_transcripts(const std::filesystem::path& path) {
  if (!std::filesystem::is_directory(path)) return load_transcript(path);
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(path)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension();
    if (ext == ".cha" || ext == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  Corpus out;
  for (const auto& f : files) {
    auto part = load_transcript(f);
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

/// One utterance per line, tokens separated by single spaces. Speakers
/// are not written.
inline void write_tokenized(std::ostream& out, const Corpus& corpus) {
  for (const auto& u : corpus) {
    for (std::size_t i = 0; i < u.tokens.size(); ++i) {
      if (i) out << ' ';
      out << u.tokens[i];
    }
    out << '\n';
  }
}

inline void save_tokenized(const std::filesystem::path& path, const Corpus& corpus) {
  auto out = open_output(path);
  write_tokenized(out, corpus);
}

inline void save_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab) {
  auto out = open_output(path);
  vocab.write_tsv(out);
}

inline Vocabulary load_vocabulary(const std::filesystem::path& path) {
  auto in = open_input(path);
  return Vocabulary::read_tsv(in);
}

}  // namespace detprod
