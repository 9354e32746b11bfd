#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "detprod/autoencoder/checkpoint_io.hpp"
#include "detprod/autoencoder/model.hpp"
#include "detprod/neural/adam.hpp"
#include "detprod/random.hpp"

namespace detprod {

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double seconds = 0.0;
  std::filesystem::path checkpoint;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
};

struct TrainOptions {
  std::size_t epochs = 10;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  nn::AdamConfig adam;
  /// Empty: no checkpoints. Otherwise <dir>/<prefix>_e<NN>.ckpt per epoch.
  std::filesystem::path checkpoint_dir;
  std::string checkpoint_prefix = "ae";
  const Vocabulary* vocab = nullptr;  // embedded into checkpoints when set
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Raised when training produces a non-finite value.
class TrainingAborted : public Error {
 public:
  using Error::Error;
};

inline std::filesystem::path epoch_checkpoint_path(const TrainOptions& opt, std::size_t epoch) {
  char name[64];
  std::snprintf(name, sizeof name, "_e%02zu.ckpt", epoch);
  return opt.checkpoint_dir / (opt.checkpoint_prefix + name);
}

/// Mean per-utterance reconstruction loss with dropout off.
template <class Real>
double evaluate_loss(AutoencoderModel<Real>& model, const std::vector<EncodedUtterance>& corpus,
                     std::size_t batch_size = 256) {
  double total = 0.0;
  for (std::size_t start = 0; start < corpus.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, corpus.size() - start);
    nn::Graph<Real> g;
    const auto b = model.bind(g);
    const auto l = model.loss(g, b, std::span(corpus).subspan(start, n), false, nullptr);
    total += static_cast<double>(g.value(l)[0]) * static_cast<double>(n);
  }
  return total / static_cast<double>(corpus.size());
}

/// Minibatch Adam on the reconstruction loss; the data order is reshuffled
/// each epoch from `seed`. Epoch mean loss is the size-weighted mean of the
/// batch losses seen during that epoch.
template <class Real>
TrainLog train(AutoencoderModel<Real>& model, const std::vector<EncodedUtterance>& corpus, const TrainOptions& opt) {
  if (corpus.empty()) throw Error("train: empty corpus");
  if (opt.batch_size == 0) throw Error("train: batch size must be >= 1");
  if (!opt.checkpoint_dir.empty()) std::filesystem::create_directories(opt.checkpoint_dir);

  Rng shuffle_rng(derive_seed(opt.seed, 0));
  Rng dropout_rng(derive_seed(opt.seed, 1));
  nn::Adam<Real> adam(model.parameters(), opt.adam);
  for (auto* p : model.parameters()) p->zero_grad();

  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<EncodedUtterance> batch;
  TrainLog log;

  for (std::size_t epoch = 1; epoch <= opt.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    const AutoencoderModel<Real> snapshot = model;
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    try {
      for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
        const std::size_t n = std::min(opt.batch_size, order.size() - start);
        batch.clear();
        for (std::size_t i = 0; i < n; ++i) batch.push_back(corpus[order[start + i]]);
        nn::Graph<Real> g;
        const auto b = model.bind(g);
        const auto l = model.loss(g, b, batch, true, &dropout_rng);
        loss_sum += static_cast<double>(g.value(l)[0]) * static_cast<double>(n);
        g.backward(l);
        adam.step();
      }
    } catch (const Error& e) {
      std::string where;
      if (!opt.checkpoint_dir.empty()) {
        const auto path = opt.checkpoint_dir / (opt.checkpoint_prefix + "_aborted.ckpt");
        save_autoencoder(path, snapshot, epoch - 1, opt.vocab);
        where = "; state after epoch " + std::to_string(epoch - 1) + " saved to " + path.string();
      }
      throw TrainingAborted("training aborted in epoch " + std::to_string(epoch) + ": " + e.what() + where);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.mean_loss = loss_sum / static_cast<double>(corpus.size());
    if (!opt.checkpoint_dir.empty()) {
      rec.checkpoint = epoch_checkpoint_path(opt, epoch);
      save_autoencoder(rec.checkpoint, model, epoch, opt.vocab);
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (opt.on_epoch) opt.on_epoch(rec);
    log.epochs.push_back(std::move(rec));
  }
  return log;
}

}  // namespace detprod
