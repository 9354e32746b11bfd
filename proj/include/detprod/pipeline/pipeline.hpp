#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "detprod/autoencoder/trainer.hpp"
#include "detprod/corpus/corpus_io.hpp"
#include "detprod/corpus/encoding.hpp"
#include "detprod/ngram/generation.hpp"
#include "detprod/ngram/model_io.hpp"
#include "detprod/overlap.hpp"
#include "detprod/pipeline/config.hpp"
#include "detprod/pipeline/report.hpp"
#include "detprod/zipf.hpp"

namespace detprod {

/// Stage failure; the message names the stage.
class StageError : public Error {
 public:
  StageError(const std::string& stage, const std::string& what)
      : Error("stage '" + stage + "' failed: " + what), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct PipelineResult {
  ResultTable table;
  std::vector<EpochCurveRow> curve;
  std::optional<ZipfFit> zipf_fit;
  double shape = 0.0;  // Zipf a used for every expected-overlap value
  std::string config_hash;
};

inline Corpus load_corpus_path(const std::filesystem::path& p) {
  return std::filesystem::is_directory(p) ? load_transcripts(p) : load_transcript(p);
}

inline Corpus ingest(const std::vector<std::filesystem::path>& inputs, const std::vector<std::string>& excluded) {
  Corpus all;
  for (const auto& p : inputs) {
    auto part = load_corpus_path(p);
    all.insert(all.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return filter_child_directed(all, std::set<std::string>(excluded.begin(), excluded.end()));
}

/// Token counts of the population the Zipf shape is fitted on.
inline std::unordered_map<std::string, std::uint64_t> zipf_population_counts(const Corpus& corpus,
                                                                           ZipfPopulation population,
                                                                           const DeterminerProfile& profile,
                                                                           const NounLexicon& lexicon) {
  if (population == ZipfPopulation::kDeterminerNouns) return noun_counts(extract_det_noun_pairs(corpus, profile, lexicon));
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& u : corpus)
    for (const auto& t : u.tokens) ++counts[t];
  return counts;
}

inline std::optional<ZipfFit> try_fit_zipf(const std::unordered_map<std::string, std::uint64_t>& counts) {
  try {
    return fit_zipf_shape(rank_frequencies(counts));
  } catch (const Error&) {
    return std::nullopt;
  }
}

inline nlohmann::json to_json(const ZipfFit& fit) {
  return {{"a", fit.a}, {"r_squared", fit.r_squared}, {"N", fit.ranks}};
}

/// Scores one corpus. The refit variant re-estimates the Zipf shape on the
/// scored corpus's own noun counts.
inline ResultRow score_corpus(const std::string& source, const Corpus& corpus, const DeterminerProfile& profile,
                              const NounLexicon& lexicon, double shape, std::size_t mc_replicates,
                              std::uint64_t mc_seed) {
  const auto pairs = extract_det_noun_pairs(corpus, profile, lexicon);
  const auto counts = count_pairs(pairs);
  ResultRow row;
  row.source = source;
  row.nouns = counts.nouns;
  row.pairs = counts.pairs;
  row.empirical = empirical_overlap(pairs);
  if (counts.nouns == 0) return row;
  const OverlapParams params{counts.nouns, counts.pairs, shape, profile};
  row.expected = expected_overlap(params);
  if (auto fit = try_fit_zipf(noun_counts(pairs)); fit && fit->a > 0.0) {
    row.refit_shape = fit->a;
    row.expected_refit = expected_overlap({counts.nouns, counts.pairs, fit->a, profile});
  }
  if (mc_replicates > 0) row.monte_carlo = monte_carlo_overlap(params, mc_replicates, mc_seed);
  return row;
}

inline std::string dropout_label(double d) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ae_d%.2g", d);
  return buf;
}

inline std::string ngram_label(int order) { return order == 2 ? "bigram" : "trigram"; }

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  auto out = open_output(path);
  out << j.dump(2) << '\n';
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

/// ingest -> vocabulary -> Zipf fit -> autoencoders (one per dropout level)
/// and n-gram models -> generation -> overlap scoring. `config` must have
/// passed validate_config. Artifacts land under config.output_dir.
inline PipelineResult run_pipeline(const RunConfig& config) {
  namespace fs = std::filesystem;
  const fs::path out = config.output_dir;
  PipelineResult result;
  result.config_hash = config_hash(config);
  fs::create_directories(out);
  std::ofstream run_log(out / "run.log");
  auto stamp = [&](const std::string& msg) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char when[32];
    std::strftime(when, sizeof when, "%Y-%m-%dT%H:%M:%S", std::localtime(&now));
    run_log << when << ' ' << msg << std::endl;
    log_info(msg);
  };
  auto stage = [&](const std::string& name, const std::function<void()>& body) {
    stamp("begin " + name);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      body();
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      stamp("failed " + name + ": " + e.what());
      throw StageError(name, e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    stamp("end " + name + " (" + std::to_string(secs) + " s)");
  };
  stamp("config_hash=" + result.config_hash);

  Corpus adult;
  NounLexicon lexicon;
  stage("ingest", [&] {
    adult = ingest(config.corpora, config.excluded_speakers);
    if (adult.empty()) throw Error("no child-directed utterances found");
    auto in = open_input(config.lexicon);
    lexicon = NounLexicon::read(in);
    save_tokenized(out / "corpus" / "adult.txt", adult);
    const auto stats = corpus_stats(adult);
    stamp("utterances=" + std::to_string(stats.utterances) + " tokens=" + std::to_string(stats.tokens) +
          " types=" + std::to_string(stats.types));
  });

  Vocabulary vocab;
  std::vector<EncodedUtterance> encoded;
  stage("vocabulary", [&] {
    vocab = Vocabulary::build(adult, config.vocab_size);
    encoded = encode_corpus(adult, vocab, config.max_len);
    save_vocabulary(out / "corpus" / "vocab.tsv", vocab);
  });

  stage("fit-zipf", [&] {
    result.zipf_fit = try_fit_zipf(zipf_population_counts(adult, config.zipf_population, config.profile, lexicon));
    if (config.zipf_a) {
      result.shape = *config.zipf_a;
      if (!result.zipf_fit) log_warning("Zipf fit on the training corpus failed; using the configured shape");
    } else {
      if (!result.zipf_fit) throw Error("Zipf fit failed and no zipf_a is configured");
      result.shape = result.zipf_fit->a;
    }
    nlohmann::json j{{"config_hash", result.config_hash},
                     {"population", config.zipf_population == ZipfPopulation::kAllWords ? "all" : "det-nouns"},
                     {"shape_used", result.shape}};
    j["fit"] = result.zipf_fit ? to_json(*result.zipf_fit) : nlohmann::json(nullptr);
    write_json_file(out / "zipf.json", j);
  });

  std::vector<std::pair<std::string, Corpus>> generated;
  const fs::path checkpoints = out / "checkpoints";
  for (std::size_t i = 0; i < config.autoencoder.dropouts.size(); ++i) {
    const double dropout = config.autoencoder.dropouts[i];
    const std::string label = dropout_label(dropout);
    stage("train-ae " + label, [&] {
      const auto& s = config.autoencoder;
      AutoencoderConfig ac;
      ac.vocab_size = vocab.size();
      ac.max_len = config.max_len;
      ac.embedding_dim = s.embedding_dim;
      ac.latent_dim = s.latent_dim;
      ac.dropout = dropout;
      ac.placement = s.placement;
      ac.mask_pad = s.mask_pad;
      AutoencoderModel<double> model(ac, derive_seed(config.seed, 100 + i));
      TrainOptions opt;
      opt.epochs = s.epochs;
      opt.batch_size = s.batch_size;
      opt.seed = derive_seed(config.seed, 200 + i);
      opt.adam.learning_rate = s.learning_rate;
      opt.checkpoint_dir = checkpoints / label;
      opt.checkpoint_prefix = "ae";
      opt.vocab = &vocab;
      opt.on_epoch = [&](const EpochRecord& r) {
        stamp(label + " epoch " + std::to_string(r.epoch) + " loss " + std::to_string(r.mean_loss) + " (" +
              std::to_string(r.seconds) + " s)");
      };
      train(model, encoded, opt);
      auto text = generate_corpus(model, encoded, vocab);
      save_tokenized(out / "generated" / (label + ".txt"), text);
      generated.emplace_back(label, std::move(text));
    });
  }

  for (int order : config.ngram_orders) {
    const std::string label = ngram_label(order);
    stage("train-ngram " + label, [&] {
      std::vector<std::vector<TokenId>> sentences;
      sentences.reserve(adult.size());
      for (const auto& u : adult) sentences.push_back(to_ids(u, vocab));
      const auto model = train_kn(sentences, order, vocab);
      save_kn_model(out / "models" / (label + ".kn"), model);
      auto text = generate_corpus(model, adult, derive_seed(config.seed, 300 + static_cast<std::uint64_t>(order)),
                                  config.max_len, label);
      save_tokenized(out / "generated" / (label + ".txt"), text);
      generated.emplace_back(label, std::move(text));
    });
  }

  stage("score", [&] {
    std::uint64_t k = 400;
    result.table.rows.push_back(
        score_corpus("adult", adult, config.profile, lexicon, result.shape, config.mc_replicates, derive_seed(config.seed, k++)));
    for (const auto& [label, text] : generated) {
      result.table.rows.push_back(
          score_corpus(label, text, config.profile, lexicon, result.shape, config.mc_replicates, derive_seed(config.seed, k++)));
    }
    auto csv = open_output(out / "results.csv");
    write_result_csv(csv, result.table, result.config_hash);
    auto j = to_json(result.table, result.config_hash);
    j["zipf_a"] = result.shape;
    write_json_file(out / "results.json", j);
  });

  if (!config.autoencoder.dropouts.empty()) {
    stage("epoch-curve", [&] {
      result.curve = report_epoch_curve(checkpoints, adult, lexicon, config.profile);
      auto csv = open_output(out / "epoch_curve.csv");
      write_epoch_curve_csv(csv, result.curve, result.config_hash);
    });
  }

  auto resolved = to_json(config);
  resolved["config_hash"] = result.config_hash;
  write_json_file(out / "config.json", resolved);
  stamp("done");
  return result;
}

}  // namespace detprod
