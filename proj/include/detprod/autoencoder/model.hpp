#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "detprod/corpus/encoding.hpp"
#include "detprod/corpus/utterance.hpp"
#include "detprod/corpus/vocabulary.hpp"
#include "detprod/error.hpp"
#include "detprod/neural/graph.hpp"
#include "detprod/neural/layers.hpp"
#include "detprod/random.hpp"

namespace detprod {

/// Where inverted dropout is applied during training.
enum class DropoutPlacement : std::uint8_t {
  kEmbedding = 0,                 // encoder inputs only
  kEmbeddingAndDecoderInput = 1,  // encoder inputs and the latent fed to the decoder
};

struct AutoencoderConfig {
  std::size_t vocab_size = 0;  // all ids, specials included
  std::size_t max_len = kDefaultMaxLen;
  std::size_t embedding_dim = 30;
  std::size_t latent_dim = 20;
  double dropout = 0.0;
  DropoutPlacement placement = DropoutPlacement::kEmbeddingAndDecoderInput;
  bool mask_pad = false;  // exclude PAD targets from the loss

  void validate() const {
    if (vocab_size <= static_cast<std::size_t>(Vocabulary::kEos)) throw Error("autoencoder: vocab_size must include the specials");
    if (max_len == 0 || embedding_dim == 0 || latent_dim == 0) throw Error("autoencoder: dimensions must be >= 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw Error("autoencoder: dropout must be in [0, 1)");
  }
};

/// embedding -> encoder GRU -> latent (its final state) -> decoder GRU fed
/// the latent at every step -> shared output projection per step.
template <class Real>
class AutoencoderModel {
 public:
  using Graph = nn::Graph<Real>;
  using Var = nn::Var;

  /// Parameters on the tape for one forward/backward pass.
  struct Bound {
    Var embedding;
    nn::GruVars encoder;
    nn::GruVars decoder;
    Var output_w;
    Var output_b;
  };

  /// All parameters zero.
  explicit AutoencoderModel(AutoencoderConfig config)
      : config_(config),
        embedding_("embedding", nn::Tensor<Real>::matrix(config.vocab_size, config.embedding_dim)),
        encoder_("encoder", config.embedding_dim, config.latent_dim),
        decoder_("decoder", config.latent_dim, config.latent_dim),
        output_w_("output.W", nn::Tensor<Real>::matrix(config.latent_dim, config.vocab_size)),
        output_b_("output.b", nn::Tensor<Real>::matrix(1, config.vocab_size)) {
    config_.validate();
  }

  /// Glorot-uniform matrices, zero biases, embeddings uniform(-0.05, 0.05).
  AutoencoderModel(AutoencoderConfig config, std::uint64_t init_seed) : AutoencoderModel(config) {
    Rng rng(init_seed);
    nn::uniform_init(embedding_.value, 0.05, rng);
    encoder_.init(rng);
    decoder_.init(rng);
    nn::glorot_uniform(output_w_.value, rng);
  }

  AutoencoderModel(const AutoencoderModel&) = default;
  AutoencoderModel& operator=(const AutoencoderModel&) = default;

  const AutoencoderConfig& config() const { return config_; }
  AutoencoderConfig& mutable_config() { return config_; }

  std::vector<nn::Parameter<Real>*> parameters() {
    std::vector<nn::Parameter<Real>*> out{&embedding_};
    for (auto* p : encoder_.parameters()) out.push_back(p);
    for (auto* p : decoder_.parameters()) out.push_back(p);
    out.push_back(&output_w_);
    out.push_back(&output_b_);
    return out;
  }

  std::vector<const nn::Parameter<Real>*> parameters() const {
    auto mut = const_cast<AutoencoderModel*>(this)->parameters();
    return {mut.begin(), mut.end()};
  }

  Bound bind(Graph& g) {
    return {g.parameter(embedding_), nn::bind(g, encoder_), nn::bind(g, decoder_), g.parameter(output_w_),
            g.parameter(output_b_)};
  }

  /// Latent states (batch x latent) for a batch of encoded utterances.
  Var encode(Graph& g, const Bound& b, std::span<const EncodedUtterance> batch, bool training, Rng* rng) const {
    check_batch(batch);
    Var h = g.constant(nn::Tensor<Real>::matrix(batch.size(), config_.latent_dim));
    std::vector<TokenId> column(batch.size());
    for (std::size_t t = 0; t < config_.max_len; ++t) {
      for (std::size_t i = 0; i < batch.size(); ++i) column[i] = batch[i].ids[t];
      Var x = g.embedding(b.embedding, column);
      if (training && config_.dropout > 0.0) x = g.dropout(x, config_.dropout, true, *rng);
      h = nn::gru_step(g, x, h, b.encoder);
    }
    return h;
  }

  /// One logits matrix (batch x vocab) per timestep. The decoder sees only
  /// the latent, never its own outputs.
  std::vector<Var> decode(Graph& g, const Bound& b, Var latent, bool training, Rng* rng) const {
    const std::size_t rows = g.value(latent).rows();
    if (training && config_.dropout > 0.0 && config_.placement == DropoutPlacement::kEmbeddingAndDecoderInput) {
      latent = g.dropout(latent, config_.dropout, true, *rng);
    }
    Var h = g.constant(nn::Tensor<Real>::matrix(rows, config_.latent_dim));
    std::vector<Var> logits;
    logits.reserve(config_.max_len);
    for (std::size_t t = 0; t < config_.max_len; ++t) {
      h = nn::gru_step(g, latent, h, b.decoder);
      logits.push_back(g.add_row(g.matmul(h, b.output_w), b.output_b));
    }
    return logits;
  }

  /// Mean over the batch of each utterance's mean per-step cross-entropy
  /// (PAD targets excluded when mask_pad is set).
  Var loss(Graph& g, const Bound& b, std::span<const EncodedUtterance> batch, bool training, Rng* rng) const {
    const Var latent = encode(g, b, batch, training, rng);
    const auto logits = decode(g, b, latent, training, rng);
    const std::size_t n = batch.size();
    std::vector<Real> row_weight(n, Real(1.0 / (static_cast<double>(n) * static_cast<double>(config_.max_len))));
    if (config_.mask_pad) {
      for (std::size_t i = 0; i < n; ++i) {
        const auto real = std::count_if(batch[i].ids.begin(), batch[i].ids.end(),
                                        [](TokenId id) { return id != Vocabulary::kPad; });
        row_weight[i] = real == 0 ? Real(0) : Real(1.0 / (static_cast<double>(n) * static_cast<double>(real)));
      }
    }
    std::vector<TokenId> targets(n);
    std::vector<Real> weights(n);
    Var total{};
    for (std::size_t t = 0; t < config_.max_len; ++t) {
      for (std::size_t i = 0; i < n; ++i) {
        targets[i] = batch[i].ids[t];
        weights[i] = (config_.mask_pad && targets[i] == Vocabulary::kPad) ? Real(0) : row_weight[i];
      }
      const Var step = g.cross_entropy(logits[t], targets, weights);
      total = t == 0 ? step : g.add(total, step);
    }
    return total;
  }

  // Inference helpers (dropout off).

  std::vector<Real> encode(const EncodedUtterance& u) {
    Graph g;
    const auto b = bind(g);
    const auto v = g.value(encode(g, b, std::span(&u, 1), false, nullptr));
    return {v.values().begin(), v.values().end()};
  }

  /// max_len rows of vocab_size logits.
  std::vector<std::vector<Real>> decode_logits(std::span<const Real> latent) {
    if (latent.size() != config_.latent_dim) throw nn::ShapeError("decode_logits: latent has " + std::to_string(latent.size()) + " dims");
    Graph g;
    const auto b = bind(g);
    const Var z = g.constant(nn::Tensor<Real>::row({latent.begin(), latent.end()}));
    std::vector<std::vector<Real>> out;
    for (Var l : decode(g, b, z, false, nullptr)) out.emplace_back(g.value(l).values().begin(), g.value(l).values().end());
    return out;
  }

  /// One decoder step from an explicit hidden state: (h', logits).
  std::pair<std::vector<Real>, std::vector<Real>> decoder_step(std::span<const Real> latent, std::span<const Real> hidden) {
    Graph g;
    const auto b = bind(g);
    const Var z = g.constant(nn::Tensor<Real>::row({latent.begin(), latent.end()}));
    const Var h = nn::gru_step(g, z, g.constant(nn::Tensor<Real>::row({hidden.begin(), hidden.end()})), b.decoder);
    const Var l = g.add_row(g.matmul(h, b.output_w), b.output_b);
    return {{g.value(h).values().begin(), g.value(h).values().end()},
            {g.value(l).values().begin(), g.value(l).values().end()}};
  }

  /// Greedy decoding for a batch: argmax per step, ties to the lowest id.
  std::vector<std::vector<TokenId>> reconstruct(std::span<const EncodedUtterance> batch) {
    if (batch.empty()) return {};
    Graph g;
    const auto b = bind(g);
    const auto logits = decode(g, b, encode(g, b, batch, false, nullptr), false, nullptr);
    std::vector<std::vector<TokenId>> out(batch.size(), std::vector<TokenId>(config_.max_len));
    for (std::size_t t = 0; t < config_.max_len; ++t) {
      const auto& L = g.value(logits[t]);
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto row = L.row_span(i);
        out[i][t] = static_cast<TokenId>(std::max_element(row.begin(), row.end()) - row.begin());
      }
    }
    return out;
  }

  std::vector<TokenId> reconstruct(const EncodedUtterance& u) { return reconstruct(std::span(&u, 1)).front(); }

 private:
  void check_batch(std::span<const EncodedUtterance> batch) const {
    if (batch.empty()) throw Error("autoencoder: empty batch");
    for (const auto& u : batch) {
      if (u.ids.size() != config_.max_len) {
        throw nn::ShapeError("autoencoder: utterance length " + std::to_string(u.ids.size()) + ", expected " +
                             std::to_string(config_.max_len));
      }
    }
  }

  AutoencoderConfig config_;
  nn::Parameter<Real> embedding_;
  nn::GruParams<Real> encoder_;
  nn::GruParams<Real> decoder_;
  nn::Parameter<Real> output_w_;
  nn::Parameter<Real> output_b_;
};

/// Greedy reconstruction of every utterance, PAD stripped, as tokens.
template <class Real>
Corpus generate_corpus(AutoencoderModel<Real>& model, const std::vector<EncodedUtterance>& corpus,
                       const Vocabulary& vocab, std::size_t batch_size = 256) {
  Corpus out;
  out.reserve(corpus.size());
  for (std::size_t start = 0; start < corpus.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, corpus.size() - start);
    for (auto& ids : model.reconstruct(std::span(corpus).subspan(start, n))) {
      out.push_back({"AE", decode_ids(ids, vocab)});
    }
  }
  return out;
}

}  // namespace detprod
