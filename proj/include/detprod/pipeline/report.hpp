#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "detprod/autoencoder/checkpoint_io.hpp"
#include "detprod/corpus/encoding.hpp"
#include "detprod/log.hpp"
#include "detprod/overlap.hpp"

namespace detprod {

struct ResultRow {
  std::string source;
  std::size_t nouns = 0;
  std::size_t pairs = 0;
  double expected = 0.0;
  double empirical = 0.0;
  // Extras for the JSON form only.
  std::optional<double> refit_shape;
  std::optional<double> expected_refit;
  std::optional<MonteCarloEstimate> monte_carlo;
};

struct ResultTable {
  std::vector<ResultRow> rows;
};

inline std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

inline constexpr const char* kResultHeader = "source,N,S,expected_overlap,empirical_overlap";

/// The hash goes on a leading '#' comment line; the header row follows.
inline void write_result_csv(std::ostream& out, const ResultTable& table, const std::string& hash) {
  out << "# config_hash=" << hash << '\n' << kResultHeader << '\n';
  for (const auto& r : table.rows) {
    out << r.source << ',' << r.nouns << ',' << r.pairs << ',' << fixed3(r.expected) << ',' << fixed3(r.empirical)
        << '\n';
  }
}

inline nlohmann::json to_json(const ResultRow& r) {
  nlohmann::json j{{"source", r.source},
                   {"N", r.nouns},
                   {"S", r.pairs},
                   {"expected_overlap", r.expected},
                   {"empirical_overlap", r.empirical}};
  if (r.refit_shape) {
    j["zipf_a_refit"] = *r.refit_shape;
    j["expected_overlap_refit"] = *r.expected_refit;
  }
  if (r.monte_carlo) {
    j["monte_carlo"] = {{"mean", r.monte_carlo->mean},
                        {"standard_error", r.monte_carlo->standard_error},
                        {"replicates", r.monte_carlo->replicates}};
  }
  return j;
}

inline nlohmann::json to_json(const ResultTable& t, const std::string& hash) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows) rows.push_back(to_json(r));
  return {{"config_hash", hash}, {"rows", rows}};
}

inline nlohmann::json to_json(const OverlapReport& r) {
  return {{"N", r.nouns}, {"S", r.pairs}, {"empirical_overlap", r.empirical}, {"expected_overlap", r.expected}};
}

struct EpochCurveRow {
  std::size_t epoch = 0;
  double dropout = 0.0;
  double empirical = 0.0;
  std::filesystem::path checkpoint;
};

/// Scores the reconstruction of `corpus` by every *.ckpt under `dir`
/// (recursively). Unreadable checkpoints are skipped with a warning.
inline std::vector<EpochCurveRow> report_epoch_curve(const std::filesystem::path& dir, const Corpus& corpus,
                                                     const NounLexicon& lexicon,
                                                     const DeterminerProfile& profile) {
  if (!std::filesystem::is_directory(dir)) throw Error("report: '" + dir.string() + "' is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().extension() != ".ckpt") continue;
    // the state saved on abort repeats an earlier epoch
    if (e.path().stem().string().ends_with("_aborted")) continue;
    files.push_back(e.path());
  }
  if (files.empty()) throw Error("report: no checkpoints in '" + dir.string() + "'");
  std::sort(files.begin(), files.end());

  std::vector<EpochCurveRow> rows;
  for (const auto& f : files) {
    std::optional<AutoencoderCheckpoint<double>> ck;
    try {
      ck = load_autoencoder<double>(f);
    } catch (const Error& e) {
      log_warning("skipping checkpoint '" + f.string() + "': " + e.what());
      continue;
    }
    if (!ck->vocab) {
      log_warning("skipping checkpoint '" + f.string() + "': no embedded vocabulary");
      continue;
    }
    const auto encoded = encode_corpus(corpus, *ck->vocab, ck->model.config().max_len);
    const auto generated = generate_corpus(ck->model, encoded, *ck->vocab);
    rows.push_back({ck->epoch, ck->model.config().dropout,
                    empirical_overlap(extract_det_noun_pairs(generated, profile, lexicon)), f});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const EpochCurveRow& a, const EpochCurveRow& b) {
    return std::tie(a.dropout, a.epoch) < std::tie(b.dropout, b.epoch);
  });
  return rows;
}

inline void write_epoch_curve_csv(std::ostream& out, const std::vector<EpochCurveRow>& rows, const std::string& hash) {
  out << "# config_hash=" << hash << '\n' << "epoch,dropout,empirical_overlap\n";
  for (const auto& r : rows) out << r.epoch << ',' << fixed3(r.dropout) << ',' << fixed3(r.empirical) << '\n';
}

}  // namespace detprod
