#pragma once

// Text model file:
//
//   detprod-kneser-ney 1
//   order <n>
//   vocab <V>
//   <token for id 0>            (V lines, id order; BOS is id V, implicit)
//   ...
//   discounts <k> <D1> <D2> <D3+>          (k = 1..n)
//   ngrams <k> <count>                     (k = 1..n, lexicographic by ids)
//   <id_1> ... <id_k><TAB><count>
//   end
//
// Order n holds raw counts; lower orders hold continuation counts.

#include <filesystem>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "detprod/corpus/corpus_io.hpp"
#include "detprod/error.hpp"
#include "detprod/ngram/kneser_ney.hpp"

namespace detprod {

inline constexpr int kKneserNeyFormatVersion = 1;

inline void write_kn_model(std::ostream& out, const KneserNeyModel& model) {
  out << "detprod-kneser-ney " << kKneserNeyFormatVersion << '\n';
  out << "order " << model.order() << '\n';
  out << "vocab " << model.vocab_size() << '\n';
  for (const auto& t : model.tokens()) out << t << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (int k = 1; k <= model.order(); ++k) {
    const auto& d = model.discounts()[static_cast<std::size_t>(k - 1)];
    out << "discounts " << k << ' ' << d.one << ' ' << d.two << ' ' << d.three_plus << '\n';
  }
  for (int k = 1; k <= model.order(); ++k) {
    const auto& table = model.tables()[static_cast<std::size_t>(k - 1)];
    out << "ngrams " << k << ' ' << table.size() << '\n';
    for (const auto& [g, n] : table) {
      for (std::size_t i = 0; i < g.size(); ++i) out << (i ? " " : "") << g[i];
      out << '\t' << n << '\n';
    }
  }
  out << "end\n";
}

inline KneserNeyModel read_kn_model(std::istream& in) {
  std::size_t line_no = 0;
  std::string line;
  auto next = [&]() -> std::istringstream {
    if (!std::getline(in, line)) throw ParseError(line_no + 1, "unexpected end of model file");
    ++line_no;
    return std::istringstream(line);
  };
  auto expect_word = [&](std::istringstream& ls, const std::string& word) {
    std::string w;
    if (!(ls >> w) || w != word) throw ParseError(line_no, "expected '" + word + "'");
  };

  auto ls = next();
  expect_word(ls, "detprod-kneser-ney");
  int version = 0;
  if (!(ls >> version) || version != kKneserNeyFormatVersion) {
    throw ParseError(line_no, "unsupported model version");
  }
  int order = 0;
  ls = next();
  expect_word(ls, "order");
  if (!(ls >> order)) throw ParseError(line_no, "missing order");
  std::size_t vocab = 0;
  ls = next();
  expect_word(ls, "vocab");
  if (!(ls >> vocab)) throw ParseError(line_no, "missing vocabulary size");
  std::vector<std::string> tokens;
  tokens.reserve(vocab);
  for (std::size_t i = 0; i < vocab; ++i) {
    next();
    tokens.push_back(line);
  }
  std::vector<Discounts> discounts;
  for (int k = 1; k <= order; ++k) {
    ls = next();
    expect_word(ls, "discounts");
    int kk = 0;
    Discounts d;
    if (!(ls >> kk >> d.one >> d.two >> d.three_plus) || kk != k) throw ParseError(line_no, "bad discounts line");
    discounts.push_back(d);
  }
  KneserNeyModel::CountTables tables(static_cast<std::size_t>(std::max(order, 0)));
  for (int k = 1; k <= order; ++k) {
    ls = next();
    expect_word(ls, "ngrams");
    int kk = 0;
    std::size_t rows = 0;
    if (!(ls >> kk >> rows) || kk != k) throw ParseError(line_no, "bad ngrams header");
    auto& table = tables[static_cast<std::size_t>(k - 1)];
    for (std::size_t r = 0; r < rows; ++r) {
      ls = next();
      KneserNeyModel::NGram g(static_cast<std::size_t>(k));
      std::uint64_t n = 0;
      for (auto& id : g)
        if (!(ls >> id)) throw ParseError(line_no, "bad n-gram row");
      if (!(ls >> n)) throw ParseError(line_no, "bad n-gram count");
      table[g] = n;
    }
  }
  ls = next();
  expect_word(ls, "end");
  return KneserNeyModel(order, std::move(tokens), std::move(tables), std::move(discounts));
}

inline void save_kn_model(const std::filesystem::path& path, const KneserNeyModel& model) {
  auto out = open_output(path);
  write_kn_model(out, model);
}

inline KneserNeyModel load_kn_model(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_kn_model(in);
}

}  // namespace detprod
