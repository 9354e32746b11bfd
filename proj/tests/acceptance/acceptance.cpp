// Acceptance suite: one PASS/FAIL line per criterion, tolerances as
// specified. Exit status is nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "detprod/autoencoder/trainer.hpp"
#include "detprod/ngram/kneser_ney.hpp"
#include "detprod/overlap.hpp"
#include "detprod/pipeline/pipeline.hpp"
#include "detprod/zipf.hpp"
#include "oracles/finite_difference.hpp"
#include "oracles/kn_oracle.hpp"

namespace fs = std::filesystem;
using namespace detprod;

namespace {

enum class Status { kPass, kFail, kSkip };

struct Outcome {
  Status status = Status::kFail;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void note(const std::string& line) { std::cout << "      " << line << '\n'; }

// ---------------------------------------------------------------- 2
struct GridResult {
  std::size_t cells = 0;
  std::size_t within = 0;
  double seconds = 0;
};

GridResult monte_carlo_grid() {
  GridResult g;
  const auto t0 = Clock::now();
  const std::size_t reps = 200000;
  std::uint64_t cell_seed = 0;
  for (std::size_t n : {5, 10, 50}) {
    for (std::size_t s : {10, 100, 1000}) {
      for (double a : {0.8, 1.0, 1.06}) {
        for (int d : {2, 3}) {
          const auto profile = d == 2 ? DeterminerProfile() : DeterminerProfile({"a", "the", "this"}, {0.2, 0.3, 0.5});
          const OverlapParams p{n, s, a, profile};
          const double exact = expected_overlap(p);
          const auto mc = monte_carlo_overlap(p, reps, derive_seed(2024, cell_seed++));
          // a replicate mean moves in steps of 1/(N*R); that is the
          // resolution when every replicate agrees and the SE is 0
          const double tol = 3.0 * std::max(mc.standard_error, 1.0 / (static_cast<double>(n) * reps));
          const bool ok = std::abs(exact - mc.mean) <= tol;
          ++g.cells;
          if (ok) {
            ++g.within;
          } else {
            note("outside 3 SE: N=" + std::to_string(n) + " S=" + std::to_string(s) + fmt(" a=%.2f", a) +
                 " D=" + std::to_string(d) + fmt(" exact=%.6f", exact) + fmt(" mc=%.6f", mc.mean) +
                 fmt(" se=%.2e", mc.standard_error));
          }
        }
      }
    }
  }
  g.seconds = seconds_since(t0);
  return g;
}

Outcome criterion2(const GridResult& g) {
  const double frac = static_cast<double>(g.within) / static_cast<double>(g.cells);
  const bool ok = frac >= 0.95 && g.seconds < 60.0;
  return {ok ? Status::kPass : Status::kFail,
          std::to_string(g.within) + "/" + std::to_string(g.cells) + " cells within 3 SE (" + fmt("%.1f%%", 100 * frac) +
              ", need >= 95%); " + fmt("%.1f s", g.seconds) + " (limit 60 s)"};
}

// ---------------------------------------------------------------- 1
Outcome criterion1(const Outcome& grid) {
  struct Row {
    const char* label;
    std::size_t n, s;
    double target;
  };
  const Row rows[] = {{"adult", 1390, 34138, 0.775}, {"ae-10", 816, 31181, 0.908}, {"ae-20", 870, 28817, 0.876},
                      {"ae-30", 861, 29497, 0.884},  {"bigram", 1780, 5177, 0.176}, {"trigram", 2506, 4595, 0.112}};
  int within = 0, above = 0, below = 0;
  double slowest = 0;
  for (const auto& r : rows) {
    const auto t0 = Clock::now();
    const double v = expected_overlap({r.n, r.s, 1.06, DeterminerProfile()});
    slowest = std::max(slowest, seconds_since(t0));
    const double dev = v - r.target;
    const bool ok = std::abs(dev) <= 0.01;
    within += ok;
    if (!ok) (dev > 0 ? above : below)++;
    note(std::string(r.label) + ": N=" + std::to_string(r.n) + " S=" + std::to_string(r.s) + fmt(" got %.4f", v) +
         fmt(" reference %.3f", r.target) + fmt(" dev %+.4f", dev) + (ok ? "" : "  outside +-0.01"));
  }
  // diagnostic only: the profile under which every row reproduces
  int alt_within = 0;
  for (const auto& r : rows) {
    const double v = expected_overlap({r.n, r.s, 1.06, DeterminerProfile({"a", "the"}, {1.0 / 3.0, 2.0 / 3.0})});
    alt_within += std::abs(v - r.target) <= 0.01;
  }
  note("diagnostic: with d=(1/3, 2/3), a=1.06: " + std::to_string(alt_within) + "/6 rows within +-0.01");

  const std::string timing = fmt("; slowest %.4f s (limit 1 s)", slowest);
  const bool fast = slowest < 1.0;
  if (within == 6) return {fast ? Status::kPass : Status::kFail, "6/6 rows within +-0.01" + timing};
  const bool systematic = (above == 0) != (below == 0);
  const bool fallback = systematic && grid.status == Status::kPass && fast;
  return {fallback ? Status::kPass : Status::kFail,
          "strict: " + std::to_string(within) + "/6 rows within +-0.01; " + std::to_string(above + below) +
              " mismatches, all " + (above ? "above" : "below") + " the reference (" +
              (systematic ? "systematic" : "mixed signs") + "); " +
              (fallback ? "fallback clause applied, criterion 2 binding and passing, discrepancy documented"
                        : "fallback not applicable") +
              timing};
}

// ---------------------------------------------------------------- 3
Outcome criterion3() {
  int checks = 0, failures = 0;
  auto expect = [&](bool ok, const std::string& what) {
    ++checks;
    if (!ok) {
      ++failures;
      note("failed: " + what);
    }
  };
  for (std::size_t n : {1, 2, 50, 3000})
    for (std::size_t s : {0, 1, 7, 34138})
      for (double a : {0.5, 1.06, 2.0}) {
        const std::string tag = " N=" + std::to_string(n) + " S=" + std::to_string(s) + fmt(" a=%.2f", a);
        expect(expected_overlap({n, s, a, DeterminerProfile({"the"}, {1.0})}) == 0.0, "D=1 not exactly 0" + tag);
        if (s == 0) expect(expected_overlap({n, s, a, DeterminerProfile()}) == 0.0, "S=0 not exactly 0" + tag);
      }
  for (double a : {0.1, 1.0, 1.06, 3.0}) {
    expect(zipf_probability(1, 1, a) == 1.0, fmt("p_1 != 1 for a=%.2f", a));
    expect(ZipfDistribution(1, a)(1) == 1.0, fmt("ZipfDistribution(1) != 1 for a=%.2f", a));
  }
  const auto mc = monte_carlo_overlap({10, 0, 1.0, DeterminerProfile()}, 1000, 1);
  expect(mc.mean == 0.0 && mc.standard_error == 0.0, "Monte Carlo with S=0 not exactly 0");
  return {failures == 0 ? Status::kPass : Status::kFail,
          std::to_string(checks - failures) + "/" + std::to_string(checks) + " exact checks hold"};
}

// ---------------------------------------------------------------- 4
Corpus random_corpus(std::size_t utterances, int types, unsigned seed) {
  std::mt19937 rng(seed);
  Corpus c;
  for (std::size_t i = 0; i < utterances; ++i) {
    Utterance u{"MOT", {}};
    const int len = 1 + static_cast<int>(rng() % 7);
    for (int j = 0; j < len; ++j) u.tokens.push_back("w" + std::to_string(std::min(rng() % types, rng() % types)));
    c.push_back(u);
  }
  return c;
}

Outcome criterion4() {
  double worst_mass = 0;
  std::size_t contexts = 0;
  {
    const auto corpus = random_corpus(100, 30, 11);
    const auto vocab = Vocabulary::build(corpus);
    std::vector<std::vector<TokenId>> sentences;
    for (const auto& u : corpus) sentences.push_back(to_ids(u, vocab));
    for (int order : {2, 3}) {
      const auto model = train_kn(sentences, order, vocab);
      const TokenId top = model.bos();
      // every context over ids 1..BOS (PAD never appears in a context)
      std::vector<TokenId> ctx(static_cast<std::size_t>(order - 1), 1);
      while (true) {
        double mass = 0;
        for (TokenId w = 0; w <= top; ++w) mass += model.prob(ctx, w);
        worst_mass = std::max(worst_mass, std::abs(mass - 1.0));
        ++contexts;
        std::size_t k = 0;
        while (k < ctx.size() && ++ctx[k] > top) ctx[k++] = 1;
        if (k == ctx.size()) break;
      }
    }
  }
  double worst_oracle = 0;
  std::size_t compared = 0;
  for (unsigned seed = 1; seed <= 4; ++seed) {
    const auto corpus = random_corpus(10, 6, 100 + seed);
    const auto vocab = Vocabulary::build(corpus);
    std::vector<std::vector<TokenId>> sentences;
    std::vector<std::vector<int>> plain;
    for (const auto& u : corpus) {
      sentences.push_back(to_ids(u, vocab));
      plain.emplace_back(sentences.back().begin(), sentences.back().end());
    }
    for (int order : {2, 3}) {
      const auto model = train_kn(sentences, order, vocab);
      const oracle::BruteForceKneserNey ref(plain, order, static_cast<int>(vocab.size()));
      const int top = model.bos();
      for (int c1 = 1; c1 <= top; ++c1)
        for (int c2 = 1; c2 <= top; ++c2) {
          const std::vector<int> ctx = order == 2 ? std::vector<int>{c2} : std::vector<int>{c1, c2};
          const std::vector<TokenId> tctx(ctx.begin(), ctx.end());
          for (int w = 1; w < top; ++w) {
            worst_oracle = std::max(worst_oracle, std::abs(model.prob(tctx, w) - ref.prob(ctx, w)));
            ++compared;
          }
          if (order == 2 && c2 == top) c1 = top;
        }
    }
  }
  const bool ok = worst_mass <= 1e-9 && worst_oracle <= 1e-9;
  return {ok ? Status::kPass : Status::kFail,
          std::to_string(contexts) + " contexts, max |mass-1| " + fmt("%.2e", worst_mass) + "; " +
              std::to_string(compared) + " oracle comparisons, max diff " + fmt("%.2e", worst_oracle) +
              " (limit 1e-9)"};
}

// ---------------------------------------------------------------- 5
Outcome criterion5() {
  AutoencoderConfig c;
  c.vocab_size = 8;
  c.embedding_dim = 4;
  c.latent_dim = 3;
  c.max_len = 4;
  AutoencoderModel<double> model(c, 5);
  const std::vector<EncodedUtterance> batch{{{0, 3, 4, 7}}, {{1, 2, 6, 5}}, {{0, 0, 7, 3}}};
  auto loss = [&] {
    nn::Graph<double> g;
    const auto b = model.bind(g);
    return g.value(model.loss(g, b, batch, false, nullptr))[0];
  };
  nn::Graph<double> g;
  const auto b = model.bind(g);
  for (auto* p : model.parameters()) p->zero_grad();
  g.backward(model.loss(g, b, batch, false, nullptr));
  double worst = 0;
  std::string worst_name;
  for (auto* p : model.parameters()) {
    const auto analytic = p->grad;
    const double err = oracle::relative_error(analytic, oracle::numeric_gradient(*p, loss, 1e-5));
    if (err > worst) {
      worst = err;
      worst_name = p->name;
    }
  }
  return {worst < 1e-4 ? Status::kPass : Status::kFail,
          std::to_string(model.parameters().size()) + " parameter tensors, max relative error " + fmt("%.2e", worst) +
              " (" + worst_name + "), limit 1e-4"};
}

// ---------------------------------------------------------------- 6
Outcome criterion6() {
  const auto t0 = Clock::now();
  std::mt19937 rng(6);
  Corpus corpus;
  for (int i = 0; i < 20; ++i) {
    Utterance u{"MOT", {}};
    const int len = 3 + static_cast<int>(rng() % 6);
    for (int j = 0; j < len; ++j) u.tokens.push_back("t" + std::to_string((i * 7 + j * 3 + rng() % 2) % 15));
    corpus.push_back(u);
  }
  const auto vocab = Vocabulary::build(corpus);
  const auto encoded = encode_corpus(corpus, vocab, kDefaultMaxLen);
  AutoencoderConfig c;
  c.vocab_size = vocab.size();
  AutoencoderModel<double> model(c, 6);
  auto accuracy = [&] {
    std::size_t hit = 0, total = 0;
    const auto out = model.reconstruct(encoded);
    for (std::size_t i = 0; i < encoded.size(); ++i)
      for (std::size_t t = 0; t < c.max_len; ++t) {
        if (encoded[i].ids[t] == Vocabulary::kPad) continue;
        ++total;
        hit += out[i][t] == encoded[i].ids[t];
      }
    return static_cast<double>(hit) / static_cast<double>(total);
  };
  TrainOptions opt;
  opt.epochs = 500;
  // one update per sentence: at lr 0.001 larger batches leave too few
  // steps in 500 epochs for a corpus this small
  opt.batch_size = 1;
  opt.seed = 6;
  std::size_t reached = 0;
  opt.on_epoch = [&](const EpochRecord& r) {
    if (reached == 0 && r.epoch % 5 == 0 && accuracy() >= 0.95) reached = r.epoch;
  };
  const auto log = train(model, encoded, opt);
  const double final_acc = accuracy();
  const double ref = std::log(static_cast<double>(vocab.size()));
  const double initial = log.epochs.front().mean_loss;
  const double secs = seconds_since(t0);
  bool decreasing = true;
  for (std::size_t e = 1; e < 10; ++e) decreasing = decreasing && log.epochs[e].mean_loss < log.epochs[e - 1].mean_loss;
  note(std::string("loss strictly decreasing over the first 10 epochs: ") + (decreasing ? "yes" : "no"));
  const bool ok = vocab.word_count() == 15 && reached > 0 && std::abs(initial - ref) <= 0.05 * ref && secs < 300;
  return {ok ? Status::kPass : Status::kFail,
          std::to_string(vocab.word_count()) + " words + 3 specials; " +
              (reached ? ">= 95% token accuracy by epoch " + std::to_string(reached) : std::string("95% never reached")) +
              fmt(", final %.1f%%", 100 * final_acc) + fmt("; epoch-1 loss %.4f", initial) + fmt(" vs log(18)=%.4f", ref) +
              fmt(" (%.2f%% off, limit 5%%)", 100 * std::abs(initial - ref) / ref) + fmt("; %.1f s", secs)};
}

// ---------------------------------------------------------------- 7
Outcome criterion7() {
  double worst_exact = 0, worst_r2 = 0;
  for (double a : {0.8, 1.0, 1.06, 2.0}) {
    for (std::size_t n : {50, 3000}) {
      RankedCounts rc;
      for (std::size_t r = 1; r <= n; ++r) rc.counts.push_back(1e6 * std::pow(static_cast<double>(r), -a));
      const auto fit = fit_zipf_shape(rc);
      worst_exact = std::max(worst_exact, std::abs(fit.a - a));
      worst_r2 = std::max(worst_r2, 1.0 - fit.r_squared);
    }
  }
  std::mt19937_64 rng(7);
  std::vector<double> w(3000);
  for (std::size_t r = 0; r < w.size(); ++r) w[r] = zipf_probability(r + 1, 3000, 1.06);
  std::discrete_distribution<std::size_t> draw(w.begin(), w.end());
  std::unordered_map<std::string, std::uint64_t> counts;
  for (int i = 0; i < 1000000; ++i) ++counts["r" + std::to_string(draw(rng))];
  const auto sampled = fit_zipf_shape(rank_frequencies(counts));
  const bool ok = worst_exact <= 1e-6 && worst_r2 <= 1e-9 && std::abs(sampled.a - 1.06) < 0.05;
  return {ok ? Status::kPass : Status::kFail,
          fmt("exact laws: max |a err| %.2e", worst_exact) + fmt(", max 1-r2 %.2e", worst_r2) +
              fmt("; 10^6 draws a=1.06 N=3000: a_hat %.4f", sampled.a) + " over " + std::to_string(sampled.ranks) +
              " observed ranks" + fmt(" (|err| %.4f, limit 0.05)", std::abs(sampled.a - 1.06))};
}

// ---------------------------------------------------------------- 8
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion8() {
  const fs::path root = DETPROD_SOURCE_DIR;
  const fs::path out = fs::temp_directory_path() / "detprod_acceptance_pipeline";
  fs::remove_all(out);
  RunConfig config = load_config(root / "configs" / "sample.json");
  config.output_dir = out;
  validate_config(config, root);
  const auto t0 = Clock::now();
  const auto first = run_pipeline(config);
  const double secs = seconds_since(t0);
  const auto csv = slurp(out / "results.csv");
  const auto curve = slurp(out / "epoch_curve.csv");
  run_pipeline(config);
  const bool same = slurp(out / "results.csv") == csv && slurp(out / "epoch_curve.csv") == curve;
  std::istringstream lines(csv);
  for (std::string l; std::getline(lines, l);) note(l);
  fs::remove_all(out);
  const bool ok = first.table.rows.size() == 6 && secs < 300 && same;
  return {ok ? Status::kPass : Status::kFail,
          std::to_string(first.table.rows.size()) + " rows; " + fmt("%.1f s", secs) + " (limit 300 s); rerun " +
              (same ? "byte-identical" : "DIFFERS")};
}

// ---------------------------------------------------------------- 9
Outcome criterion9() {
  const char* dir = std::getenv("DETPROD_CHILDES_DIR");
  if (!dir || !*dir) return {Status::kSkip, "set DETPROD_CHILDES_DIR to a directory of CHILDES .cha exports to run"};
  const fs::path root = DETPROD_SOURCE_DIR;
  RunConfig config = load_config(root / "configs" / "default.json");
  config.corpora = {dir};
  config.output_dir = fs::temp_directory_path() / "detprod_acceptance_childes";
  validate_config(config, root);
  const auto r = run_pipeline(config);
  std::map<std::string, ResultRow> by;
  for (const auto& row : r.table.rows) by[row.source] = row;
  const auto& adult = by.at("adult");
  const bool adult_ok = adult.empirical >= 0.45 && adult.empirical <= 0.70;
  const bool ae_ok = std::abs(by.at(dropout_label(0.3)).empirical - adult.empirical) <= 0.10;
  bool ngram_ok = true;
  for (const char* k : {"bigram", "trigram"}) ngram_ok = ngram_ok && by.at(k).pairs < adult.pairs && by.at(k).nouns > adult.nouns;
  for (const auto& row : r.table.rows) {
    note(row.source + ": N=" + std::to_string(row.nouns) + " S=" + std::to_string(row.pairs) +
         fmt(" emp=%.3f", row.empirical) + fmt(" exp=%.3f", row.expected));
  }
  return {adult_ok && ae_ok && ngram_ok ? Status::kPass : Status::kFail,
          fmt("adult empirical %.3f", adult.empirical) + (adult_ok ? " in" : " outside") + " [0.45, 0.70]; AE(30%) " +
              (ae_ok ? "within" : "outside") + " 10 points; n-gram S<<adult, N>adult " + (ngram_ok ? "holds" : "fails")};
}

}  // namespace

int main() {
  log_level() = LogLevel::kQuiet;
  int failures = 0;
  auto report = [&](int id, const std::string& name, const Outcome& o) {
    const char* tag = o.status == Status::kPass ? "PASS" : o.status == Status::kFail ? "FAIL" : "SKIP";
    if (o.status == Status::kFail) ++failures;
    std::cout << tag << "  [" << id << "] " << name << ": " << o.detail << '\n' << std::flush;
  };
  auto guarded = [](const std::function<Outcome()>& f) {
    try {
      return f();
    } catch (const std::exception& e) {
      return Outcome{Status::kFail, std::string("exception: ") + e.what()};
    }
  };

  // criterion 1 falls back on criterion 2, so the grid runs first
  std::cout << "Monte Carlo grid (criterion 2):\n";
  const auto grid = monte_carlo_grid();
  const Outcome c2 = criterion2(grid);
  std::cout << "Expected overlap against the reference values (criterion 1):\n";
  report(1, "expected overlap vs reference values, d=(0.393,0.607) a=1.06", guarded([&] { return criterion1(c2); }));
  report(2, "closed form vs Monte Carlo, 54-cell grid, 200k reps", c2);
  report(3, "exact degenerate cases", guarded(criterion3));
  report(4, "Kneser-Ney mass and brute-force oracle", guarded(criterion4));
  report(5, "autoencoder gradients vs central differences", guarded(criterion5));
  report(6, "autoencoder capacity on a 20-sentence toy corpus", guarded(criterion6));
  report(7, "Zipf shape fitting", guarded(criterion7));
  std::cout << "Pipeline on the shipped sample (criterion 8):\n";
  report(8, "pipeline smoke run, deterministic rerun", guarded(criterion8));
  report(9, "CHILDES reproduction (informational)", guarded(criterion9));
  return failures == 0 ? 0 : 1;
}
