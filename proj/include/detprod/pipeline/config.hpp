#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "detprod/autoencoder/model.hpp"
#include "detprod/corpus/corpus_io.hpp"
#include "detprod/error.hpp"
#include "detprod/overlap.hpp"

namespace detprod {

inline constexpr const char* kDataRootEnv = "DETPROD_DATA_ROOT";

struct AutoencoderSettings {
  std::size_t embedding_dim = 30;
  std::size_t latent_dim = 20;
  std::size_t epochs = 10;
  std::size_t batch_size = 64;
  double learning_rate = 0.001;
  std::vector<double> dropouts{0.1, 0.2, 0.3};
  DropoutPlacement placement = DropoutPlacement::kEmbeddingAndDecoderInput;
  bool mask_pad = false;
};

enum class ZipfPopulation { kDeterminerNouns, kAllWords };

struct RunConfig {
  std::vector<std::filesystem::path> corpora;
  std::filesystem::path lexicon;
  std::filesystem::path output_dir = "out";
  std::vector<std::string> excluded_speakers{"CHI"};
  std::size_t vocab_size = Vocabulary::kDefaultMaxWords;
  std::size_t max_len = kDefaultMaxLen;
  AutoencoderSettings autoencoder;
  std::vector<int> ngram_orders{2, 3};
  DeterminerProfile profile;
  /// Unset: use the shape fitted on the training corpus.
  std::optional<double> zipf_a = 1.06;
  ZipfPopulation zipf_population = ZipfPopulation::kDeterminerNouns;
  std::uint64_t seed = 1;
  std::size_t mc_replicates = 0;
};

/// Flag beats environment beats the working directory.
inline std::filesystem::path resolve_data_root(const std::string& flag_value = "") {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv(kDataRootEnv); env && *env) return env;
  return std::filesystem::current_path();
}

inline std::filesystem::path resolve_path(const std::filesystem::path& p, const std::filesystem::path& root) {
  return p.is_relative() ? root / p : p;
}

inline std::string placement_name(DropoutPlacement p) {
  return p == DropoutPlacement::kEmbedding ? "embedding" : "embedding+decoder";
}

inline DropoutPlacement parse_placement(const std::string& s) {
  if (s == "embedding") return DropoutPlacement::kEmbedding;
  if (s == "embedding+decoder") return DropoutPlacement::kEmbeddingAndDecoderInput;
  throw Error("unknown dropout placement '" + s + "' (expected embedding or embedding+decoder)");
}

/// "a:0.393" -> ("a", 0.393)
inline std::pair<std::string, double> parse_determiner_spec(const std::string& spec) {
  const auto colon = spec.rfind(':');
  if (colon == std::string::npos || colon == 0) throw Error("determiner '" + spec + "' must look like WORD:PROB");
  try {
    std::size_t used = 0;
    const double p = std::stod(spec.substr(colon + 1), &used);
    if (used != spec.size() - colon - 1) throw std::invalid_argument(spec);
    return {spec.substr(0, colon), p};
  } catch (const std::logic_error&) {
    throw Error("determiner '" + spec + "' has a malformed probability");
  }
}

inline DeterminerProfile profile_from_specs(const std::vector<std::string>& specs) {
  std::vector<std::string> names;
  std::vector<double> probs;
  for (const auto& s : specs) {
    auto [n, p] = parse_determiner_spec(s);
    names.push_back(n);
    probs.push_back(p);
  }
  return DeterminerProfile(names, probs);
}

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json dets = nlohmann::json::array();
  for (std::size_t i = 0; i < c.profile.size(); ++i) {
    dets.push_back({{"word", c.profile.determiners()[i]}, {"prob", c.profile.probs()[i]}});
  }
  std::vector<std::string> corpora;
  for (const auto& p : c.corpora) corpora.push_back(p.generic_string());
  const auto& ae = c.autoencoder;
  return {
      {"corpora", corpora},
      {"lexicon", c.lexicon.generic_string()},
      {"output_dir", c.output_dir.generic_string()},
      {"excluded_speakers", c.excluded_speakers},
      {"vocab_size", c.vocab_size},
      {"max_len", c.max_len},
      {"autoencoder",
       {{"embedding_dim", ae.embedding_dim},
        {"latent_dim", ae.latent_dim},
        {"epochs", ae.epochs},
        {"batch_size", ae.batch_size},
        {"learning_rate", ae.learning_rate},
        {"dropouts", ae.dropouts},
        {"placement", placement_name(ae.placement)},
        {"mask_pad", ae.mask_pad}}},
      {"ngram_orders", c.ngram_orders},
      {"determiners", dets},
      {"zipf_a", c.zipf_a ? nlohmann::json(*c.zipf_a) : nlohmann::json(nullptr)},
      {"zipf_population", c.zipf_population == ZipfPopulation::kAllWords ? "all" : "det-nouns"},
      {"seed", c.seed},
      {"mc_replicates", c.mc_replicates},
  };
}

/// Missing keys keep their defaults; unknown keys are rejected so typos
/// do not silently fall back to defaults.
inline RunConfig config_from_json(const nlohmann::json& j) {
  static const std::vector<std::string> known{"corpora", "lexicon", "output_dir", "excluded_speakers",
                                              "vocab_size", "max_len", "autoencoder", "ngram_orders",
                                              "determiners", "zipf_a", "zipf_population", "seed",
                                              "mc_replicates"};
  if (!j.is_object()) throw Error("config: top level must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) throw Error("config: unknown key '" + key + "'");
  }
  RunConfig c;
  try {
    if (j.contains("corpora")) {
      c.corpora.clear();
      for (const auto& p : j.at("corpora")) c.corpora.emplace_back(p.get<std::string>());
    }
    if (j.contains("lexicon")) c.lexicon = j.at("lexicon").get<std::string>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("excluded_speakers")) c.excluded_speakers = j.at("excluded_speakers").get<std::vector<std::string>>();
    if (j.contains("vocab_size")) c.vocab_size = j.at("vocab_size").get<std::size_t>();
    if (j.contains("max_len")) c.max_len = j.at("max_len").get<std::size_t>();
    if (j.contains("autoencoder")) {
      const auto& a = j.at("autoencoder");
      auto& ae = c.autoencoder;
      ae.embedding_dim = a.value("embedding_dim", ae.embedding_dim);
      ae.latent_dim = a.value("latent_dim", ae.latent_dim);
      ae.epochs = a.value("epochs", ae.epochs);
      ae.batch_size = a.value("batch_size", ae.batch_size);
      ae.learning_rate = a.value("learning_rate", ae.learning_rate);
      ae.dropouts = a.value("dropouts", ae.dropouts);
      if (a.contains("placement")) ae.placement = parse_placement(a.at("placement").get<std::string>());
      ae.mask_pad = a.value("mask_pad", ae.mask_pad);
    }
    if (j.contains("ngram_orders")) c.ngram_orders = j.at("ngram_orders").get<std::vector<int>>();
    if (j.contains("determiners")) {
      std::vector<std::string> names;
      std::vector<double> probs;
      for (const auto& d : j.at("determiners")) {
        names.push_back(d.at("word").get<std::string>());
        probs.push_back(d.at("prob").get<double>());
      }
      c.profile = DeterminerProfile(names, probs);
    }
    if (j.contains("zipf_a")) {
      c.zipf_a = j.at("zipf_a").is_null() ? std::nullopt : std::optional<double>(j.at("zipf_a").get<double>());
    }
    if (j.contains("zipf_population")) {
      const auto pop = j.at("zipf_population").get<std::string>();
      if (pop == "all") c.zipf_population = ZipfPopulation::kAllWords;
      else if (pop == "det-nouns") c.zipf_population = ZipfPopulation::kDeterminerNouns;
      else throw Error("config: zipf_population must be 'det-nouns' or 'all'");
    }
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("mc_replicates")) c.mc_replicates = j.at("mc_replicates").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("config '" + path.string() + "': " + e.what());
  }
}

/// Rewrites relative input paths against the data root and checks that
/// every input exists and every setting is usable.
inline void validate_config(RunConfig& c, const std::filesystem::path& data_root) {
  if (c.corpora.empty()) throw Error("config: no corpora given");
  for (auto& p : c.corpora) {
    p = resolve_path(p, data_root);
    if (!std::filesystem::exists(p)) throw Error("config: corpus path '" + p.string() + "' does not exist");
  }
  if (c.lexicon.empty()) throw Error("config: no noun lexicon given");
  c.lexicon = resolve_path(c.lexicon, data_root);
  if (!std::filesystem::is_regular_file(c.lexicon)) {
    throw Error("config: lexicon '" + c.lexicon.string() + "' does not exist");
  }
  if (c.vocab_size == 0) throw Error("config: vocab_size must be >= 1");
  if (c.max_len == 0) throw Error("config: max_len must be >= 1");
  for (int order : c.ngram_orders) {
    if (order != 2 && order != 3) throw Error("config: n-gram orders must be 2 or 3");
  }
  for (double d : c.autoencoder.dropouts) {
    if (!(d >= 0.0 && d < 1.0)) throw Error("config: dropout levels must be in [0, 1)");
  }
  if (c.autoencoder.batch_size == 0) throw Error("config: batch_size must be >= 1");
  if (c.zipf_a && !(*c.zipf_a > 0.0)) throw Error("config: zipf_a must be positive");
}

/// FNV-1a over the canonical (key-sorted, compact) JSON form.
inline std::string config_hash(const RunConfig& c) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : to_json(c).dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace detprod
