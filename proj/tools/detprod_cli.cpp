// detprod: command-line front end for the determiner/noun productivity
// pipeline. Run `detprod --help` or `detprod <subcommand> --help`.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "detprod/autoencoder/checkpoint_io.hpp"
#include "detprod/autoencoder/trainer.hpp"
#include "detprod/corpus/corpus_io.hpp"
#include "detprod/ngram/generation.hpp"
#include "detprod/ngram/model_io.hpp"
#include "detprod/overlap.hpp"
#include "detprod/pipeline/config.hpp"
#include "detprod/pipeline/pipeline.hpp"
#include "detprod/pipeline/report.hpp"
#include "detprod/zipf.hpp"

namespace fs = std::filesystem;
using namespace detprod;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  std::string data_root;
  bool quiet = false;
  bool verbose = false;
};

fs::path input_path(const Globals& g, const std::string& p) { return resolve_path(p, resolve_data_root(g.data_root)); }

NounLexicon read_lexicon(const fs::path& p) {
  auto in = open_input(p);
  return NounLexicon::read(in);
}

void emit_json(const nlohmann::json& j, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << j.dump(2) << '\n';
  } else {
    write_json_file(out, j);
  }
}

// Hash for the single-command outputs: the command's own options.
std::string options_hash(const nlohmann::json& options) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : options.dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// token<TAB>count or the vocabulary layout token<TAB>id<TAB>count; '#' lines skipped.
std::unordered_map<std::string, std::uint64_t> read_count_tsv(const fs::path& path) {
  auto in = open_input(path);
  std::unordered_map<std::string, std::uint64_t> counts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, '\t');) cols.push_back(c);
    if (cols.size() != 2 && cols.size() != 3) throw ParseError(line_no, "expected 2 or 3 tab-separated columns");
    if (cols[0] == "PAD" || cols[0] == "OOV" || cols[0] == "EOS") continue;
    try {
      const auto n = std::stoull(cols.back());
      if (n > 0) counts[cols[0]] += n;
    } catch (const std::logic_error&) {
      throw ParseError(line_no, "count '" + cols.back() + "' is not a non-negative integer");
    }
  }
  return counts;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Determiner/noun productivity experiments on child-directed speech"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Base random seed");
  app.add_option("--data-root", g.data_root, std::string("Root for relative input paths (default $") + kDataRootEnv + " or cwd)");
  app.add_flag("-q,--quiet", g.quiet, "Suppress warnings");
  app.add_flag("-v,--verbose", g.verbose, "Progress messages on stderr");

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "Parse transcripts into a tokenized corpus and vocabulary");
  std::vector<std::string> ingest_inputs, ingest_excluded{"CHI"};
  std::string ingest_corpus_out, ingest_vocab_out;
  std::size_t ingest_vocab_size = Vocabulary::kDefaultMaxWords;
  ingest_cmd->add_option("inputs", ingest_inputs, ".cha / plain-text files or directories")->required();
  ingest_cmd->add_option("--out-corpus", ingest_corpus_out, "Tokenized corpus output")->required();
  ingest_cmd->add_option("--out-vocab", ingest_vocab_out, "Vocabulary TSV output");
  ingest_cmd->add_option("--vocab-size", ingest_vocab_size, "Word cap (specials excluded)");
  ingest_cmd->add_option("--exclude-speaker", ingest_excluded, "Speaker codes to drop")->expected(0, -1);

  // fit-zipf
  auto* zipf_cmd = app.add_subcommand("fit-zipf", "Least-squares Zipf shape from counts or a corpus");
  std::string zipf_counts, zipf_corpus, zipf_lexicon, zipf_out, zipf_population = "det-nouns";
  std::vector<std::string> zipf_dets{"a:0.393", "the:0.607"};
  auto* zipf_counts_opt = zipf_cmd->add_option("--counts", zipf_counts, "token<TAB>count TSV (vocabulary TSV accepted)");
  auto* zipf_corpus_opt = zipf_cmd->add_option("--corpus", zipf_corpus, "Tokenized corpus");
  zipf_counts_opt->excludes(zipf_corpus_opt);
  zipf_cmd->add_option("--lexicon", zipf_lexicon, "Noun lexicon (with --corpus and det-nouns)");
  zipf_cmd->add_option("--population", zipf_population, "det-nouns or all (with --corpus)")
      ->check(CLI::IsMember({"det-nouns", "all"}));
  zipf_cmd->add_option("--det", zipf_dets, "Determiner WORD:PROB (repeatable)");
  zipf_cmd->add_option("--out", zipf_out, "JSON output (default stdout)");

  // train-ngram
  auto* ngram_cmd = app.add_subcommand("train-ngram", "Train a modified Kneser-Ney model");
  std::string ngram_corpus, ngram_vocab, ngram_out;
  int ngram_order = 2;
  std::size_t ngram_vocab_size = Vocabulary::kDefaultMaxWords;
  ngram_cmd->add_option("--corpus", ngram_corpus, "Tokenized corpus")->required();
  ngram_cmd->add_option("--vocab", ngram_vocab, "Vocabulary TSV (default: built from the corpus)");
  ngram_cmd->add_option("--vocab-size", ngram_vocab_size, "Word cap when building the vocabulary");
  ngram_cmd->add_option("--order", ngram_order, "2 or 3")->check(CLI::IsMember({2, 3}));
  ngram_cmd->add_option("--out", ngram_out, "Model file")->required();

  // generate
  auto* gen_cmd = app.add_subcommand("generate", "Sample one sentence per seed sentence from an n-gram model");
  std::string gen_model, gen_seeds, gen_out;
  std::size_t gen_max_len = kDefaultMaxLen;
  gen_cmd->add_option("--model", gen_model, "Model file")->required();
  gen_cmd->add_option("--seeds-from", gen_seeds, "Tokenized corpus; each line's first word seeds one output")->required();
  gen_cmd->add_option("--out", gen_out, "Tokenized corpus output")->required();
  gen_cmd->add_option("--max-len", gen_max_len, "Maximum generated length");

  // train-ae
  auto* ae_cmd = app.add_subcommand("train-ae", "Train the GRU autoencoder");
  std::string ae_corpus, ae_vocab, ae_ckpt_dir, ae_out, ae_placement = "embedding+decoder", ae_prefix = "ae";
  AutoencoderSettings ae_settings;
  double ae_dropout = 0.3;
  std::size_t ae_max_len = kDefaultMaxLen, ae_vocab_size = Vocabulary::kDefaultMaxWords;
  bool ae_mask_pad = false;
  ae_cmd->add_option("--corpus", ae_corpus, "Tokenized corpus")->required();
  ae_cmd->add_option("--vocab", ae_vocab, "Vocabulary TSV (default: built from the corpus)");
  ae_cmd->add_option("--vocab-size", ae_vocab_size, "Word cap when building the vocabulary");
  ae_cmd->add_option("--epochs", ae_settings.epochs, "Training epochs");
  ae_cmd->add_option("--batch", ae_settings.batch_size, "Minibatch size");
  ae_cmd->add_option("--dropout", ae_dropout, "Dropout rate in [0, 1)");
  ae_cmd->add_option("--placement", ae_placement, "embedding or embedding+decoder")
      ->check(CLI::IsMember({"embedding", "embedding+decoder"}));
  ae_cmd->add_option("--lr", ae_settings.learning_rate, "Adam learning rate");
  ae_cmd->add_option("--embedding-dim", ae_settings.embedding_dim, "Embedding size");
  ae_cmd->add_option("--latent-dim", ae_settings.latent_dim, "Latent (GRU hidden) size");
  ae_cmd->add_option("--max-len", ae_max_len, "Utterance length after padding/truncation");
  ae_cmd->add_flag("--mask-pad", ae_mask_pad, "Exclude PAD targets from the loss");
  ae_cmd->add_option("--checkpoint-dir", ae_ckpt_dir, "Directory for per-epoch checkpoints");
  ae_cmd->add_option("--prefix", ae_prefix, "Checkpoint file prefix");
  ae_cmd->add_option("--out", ae_out, "Final model checkpoint");
  ae_cmd->callback([&] {
    if (ae_ckpt_dir.empty() && ae_out.empty()) throw CLI::ValidationError("train-ae", "need --checkpoint-dir or --out");
  });

  // ae-generate
  auto* aegen_cmd = app.add_subcommand("ae-generate", "Reconstruct a corpus with a trained autoencoder");
  std::string aegen_model, aegen_corpus, aegen_out;
  aegen_cmd->add_option("--model", aegen_model, "Autoencoder checkpoint")->required();
  aegen_cmd->add_option("--corpus", aegen_corpus, "Tokenized corpus")->required();
  aegen_cmd->add_option("--out", aegen_out, "Tokenized corpus output")->required();

  // overlap
  auto* ov_cmd = app.add_subcommand("overlap", "Empirical and expected determiner/noun overlap of a corpus");
  std::string ov_corpus, ov_lexicon, ov_out;
  std::vector<std::string> ov_dets{"a:0.393", "the:0.607"};
  double ov_a = 1.06;
  std::size_t ov_reps = 0;
  ov_cmd->add_option("--corpus", ov_corpus, "Tokenized corpus")->required();
  ov_cmd->add_option("--lexicon", ov_lexicon, "Noun lexicon")->required();
  ov_cmd->add_option("--det", ov_dets, "Determiner WORD:PROB (repeatable)");
  ov_cmd->add_option("--zipf-a", ov_a, "Zipf shape")->check(CLI::PositiveNumber);
  ov_cmd->add_option("--mc-reps", ov_reps, "Monte Carlo replicates (0: skip)");
  ov_cmd->add_option("--out", ov_out, "JSON output (default stdout)");

  // report
  auto* rep_cmd = app.add_subcommand("report", "Overlap-by-epoch curve from autoencoder checkpoints");
  std::string rep_dir, rep_corpus, rep_lexicon, rep_out;
  std::vector<std::string> rep_dets{"a:0.393", "the:0.607"};
  rep_cmd->add_option("--checkpoint-dir", rep_dir, "Directory searched recursively for *.ckpt")->required();
  rep_cmd->add_option("--corpus", rep_corpus, "Tokenized corpus to reconstruct")->required();
  rep_cmd->add_option("--lexicon", rep_lexicon, "Noun lexicon")->required();
  rep_cmd->add_option("--det", rep_dets, "Determiner WORD:PROB (repeatable)");
  rep_cmd->add_option("--out", rep_out, "CSV output (default stdout)");

  // pipeline
  auto* pipe_cmd = app.add_subcommand("pipeline", "Run every stage and write the result table");
  std::string pipe_config, pipe_output;
  std::optional<std::size_t> pipe_epochs, pipe_reps;
  pipe_cmd->add_option("--config", pipe_config, "JSON run configuration")->required();
  pipe_cmd->add_option("--output-dir", pipe_output, "Override output_dir");
  pipe_cmd->add_option("--epochs", pipe_epochs, "Override autoencoder epochs");
  pipe_cmd->add_option("--mc-reps", pipe_reps, "Override Monte Carlo replicates");

  CLI11_PARSE(app, argc, argv);
  log_level() = g.quiet ? LogLevel::kQuiet : g.verbose ? LogLevel::kInfo : LogLevel::kWarning;
  auto* seed_opt = app.get_option("--seed");

  try {
    if (ingest_cmd->parsed()) {
      std::vector<fs::path> inputs;
      for (const auto& p : ingest_inputs) inputs.push_back(input_path(g, p));
      for (const auto& p : inputs) {
        if (!fs::exists(p)) throw Error("input '" + p.string() + "' does not exist");
      }
      const auto corpus = ingest(inputs, ingest_excluded);
      save_tokenized(ingest_corpus_out, corpus);
      if (!ingest_vocab_out.empty()) save_vocabulary(ingest_vocab_out, Vocabulary::build(corpus, ingest_vocab_size));
      const auto s = corpus_stats(corpus);
      log_info("utterances " + std::to_string(s.utterances) + ", tokens " + std::to_string(s.tokens) + ", types " +
               std::to_string(s.types));
    } else if (zipf_cmd->parsed()) {
      std::unordered_map<std::string, std::uint64_t> counts;
      if (!zipf_counts.empty()) {
        counts = read_count_tsv(input_path(g, zipf_counts));
      } else if (!zipf_corpus.empty()) {
        const auto corpus = load_transcript(input_path(g, zipf_corpus));
        const auto population = zipf_population == "all" ? ZipfPopulation::kAllWords : ZipfPopulation::kDeterminerNouns;
        NounLexicon lexicon;
        if (population == ZipfPopulation::kDeterminerNouns) {
          if (zipf_lexicon.empty()) throw Error("fit-zipf: --population det-nouns needs --lexicon");
          lexicon = read_lexicon(input_path(g, zipf_lexicon));
        }
        counts = zipf_population_counts(corpus, population, profile_from_specs(zipf_dets), lexicon);
      } else {
        throw Error("fit-zipf: need --counts or --corpus");
      }
      auto j = to_json(fit_zipf_shape(rank_frequencies(counts)));
      j["config_hash"] = options_hash({{"counts", zipf_counts}, {"corpus", zipf_corpus}, {"population", zipf_population},
                                       {"lexicon", zipf_lexicon}, {"det", zipf_dets}});
      emit_json(j, zipf_out);
    } else if (ngram_cmd->parsed()) {
      const auto corpus = load_transcript(input_path(g, ngram_corpus));
      const auto vocab = ngram_vocab.empty() ? Vocabulary::build(corpus, ngram_vocab_size)
                                             : load_vocabulary(input_path(g, ngram_vocab));
      std::vector<std::vector<TokenId>> sentences;
      for (const auto& u : corpus) sentences.push_back(to_ids(u, vocab));
      save_kn_model(ngram_out, train_kn(sentences, ngram_order, vocab));
    } else if (gen_cmd->parsed()) {
      const auto model = load_kn_model(input_path(g, gen_model));
      const auto sources = load_transcript(input_path(g, gen_seeds));
      save_tokenized(gen_out, generate_corpus(model, sources, g.seed, gen_max_len, ngram_label(model.order())));
    } else if (ae_cmd->parsed()) {
      const auto corpus = load_transcript(input_path(g, ae_corpus));
      const auto vocab =
          ae_vocab.empty() ? Vocabulary::build(corpus, ae_vocab_size) : load_vocabulary(input_path(g, ae_vocab));
      AutoencoderConfig ac;
      ac.vocab_size = vocab.size();
      ac.max_len = ae_max_len;
      ac.embedding_dim = ae_settings.embedding_dim;
      ac.latent_dim = ae_settings.latent_dim;
      ac.dropout = ae_dropout;
      ac.placement = parse_placement(ae_placement);
      ac.mask_pad = ae_mask_pad;
      AutoencoderModel<double> model(ac, derive_seed(g.seed, 100));
      TrainOptions opt;
      opt.epochs = ae_settings.epochs;
      opt.batch_size = ae_settings.batch_size;
      opt.seed = derive_seed(g.seed, 200);
      opt.adam.learning_rate = ae_settings.learning_rate;
      opt.checkpoint_dir = ae_ckpt_dir;
      opt.checkpoint_prefix = ae_prefix;
      opt.vocab = &vocab;
      opt.on_epoch = [](const EpochRecord& r) {
        log_info("epoch " + std::to_string(r.epoch) + " loss " + std::to_string(r.mean_loss) + " (" +
                 std::to_string(r.seconds) + " s)");
      };
      const auto log = train(model, encode_corpus(corpus, vocab, ae_max_len), opt);
      if (!ae_out.empty()) save_autoencoder(ae_out, model, log.epochs.size(), &vocab);
    } else if (aegen_cmd->parsed()) {
      auto ck = load_autoencoder<double>(input_path(g, aegen_model));
      if (!ck.vocab) throw Error("checkpoint has no embedded vocabulary");
      const auto corpus = load_transcript(input_path(g, aegen_corpus));
      save_tokenized(aegen_out, generate_corpus(ck.model, encode_corpus(corpus, *ck.vocab, ck.model.config().max_len), *ck.vocab));
    } else if (ov_cmd->parsed()) {
      const auto corpus = load_transcript(input_path(g, ov_corpus));
      const auto profile = profile_from_specs(ov_dets);
      const auto lexicon = read_lexicon(input_path(g, ov_lexicon));
      const auto report = overlap_report(corpus, profile, lexicon, ov_a);
      auto j = to_json(report);
      if (ov_reps > 0 && report.nouns > 0) {
        const auto mc = monte_carlo_overlap({report.nouns, report.pairs, ov_a, profile}, ov_reps, g.seed);
        j["monte_carlo"] = {{"mean", mc.mean}, {"standard_error", mc.standard_error}, {"replicates", mc.replicates}};
      }
      j["config_hash"] = options_hash({{"corpus", ov_corpus}, {"lexicon", ov_lexicon}, {"det", ov_dets},
                                       {"zipf_a", ov_a}, {"mc_reps", ov_reps}, {"seed", g.seed}});
      emit_json(j, ov_out);
    } else if (rep_cmd->parsed()) {
      const auto corpus = load_transcript(input_path(g, rep_corpus));
      const auto rows = report_epoch_curve(input_path(g, rep_dir), corpus, read_lexicon(input_path(g, rep_lexicon)),
                                           profile_from_specs(rep_dets));
      const auto hash = options_hash({{"checkpoint_dir", rep_dir}, {"corpus", rep_corpus}, {"lexicon", rep_lexicon},
                                      {"det", rep_dets}});
      if (rep_out.empty() || rep_out == "-") {
        write_epoch_curve_csv(std::cout, rows, hash);
      } else {
        auto out = open_output(rep_out);
        write_epoch_curve_csv(out, rows, hash);
      }
    } else if (pipe_cmd->parsed()) {
      auto config = load_config(input_path(g, pipe_config));
      if (seed_opt->count() > 0) config.seed = g.seed;
      if (!pipe_output.empty()) config.output_dir = pipe_output;
      if (pipe_epochs) config.autoencoder.epochs = *pipe_epochs;
      if (pipe_reps) config.mc_replicates = *pipe_reps;
      validate_config(config, resolve_data_root(g.data_root));
      const auto result = run_pipeline(config);
      std::ostringstream table;
      write_result_csv(table, result.table, result.config_hash);
      std::cout << table.str();
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
