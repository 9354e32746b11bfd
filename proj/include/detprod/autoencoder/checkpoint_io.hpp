#pragma once

// Autoencoder checkpoint: a config header followed by the neuralcore
// parameter block.
//
//   magic "DPAE" | u32 version | u32 epoch | u32 vocab_size | u32 max_len
//   | u32 embedding_dim | u32 latent_dim | f64 dropout | u8 placement
//   | u8 mask_pad | u32 length + vocabulary TSV bytes (may be empty)
//   | parameter block ("DPCK", see neural/checkpoint.hpp)

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "detprod/autoencoder/model.hpp"
#include "detprod/corpus/corpus_io.hpp"
#include "detprod/neural/checkpoint.hpp"

namespace detprod {

inline constexpr char kAutoencoderMagic[4] = {'D', 'P', 'A', 'E'};
inline constexpr std::uint32_t kAutoencoderVersion = 1;

template <class Real>
struct AutoencoderCheckpoint {
  AutoencoderModel<Real> model;
  std::size_t epoch = 0;
  std::optional<Vocabulary> vocab;
};

template <class Real>
void write_autoencoder(std::ostream& out, const AutoencoderModel<Real>& model, std::size_t epoch,
                       const Vocabulary* vocab) {
  namespace bin = nn::binary;
  const auto& c = model.config();
  out.write(kAutoencoderMagic, 4);
  bin::put_u32(out, kAutoencoderVersion);
  bin::put_u32(out, static_cast<std::uint32_t>(epoch));
  bin::put_u32(out, static_cast<std::uint32_t>(c.vocab_size));
  bin::put_u32(out, static_cast<std::uint32_t>(c.max_len));
  bin::put_u32(out, static_cast<std::uint32_t>(c.embedding_dim));
  bin::put_u32(out, static_cast<std::uint32_t>(c.latent_dim));
  bin::put_f64(out, c.dropout);
  out.put(static_cast<char>(c.placement));
  out.put(static_cast<char>(c.mask_pad ? 1 : 0));
  std::ostringstream tsv;
  if (vocab) vocab->write_tsv(tsv);
  bin::put_bytes(out, tsv.str());
  nn::write_parameters(out, model.parameters());
}

template <class Real>
AutoencoderCheckpoint<Real> read_autoencoder(std::istream& in) {
  namespace bin = nn::binary;
  bin::expect_magic(in, kAutoencoderMagic);
  const auto version = bin::get_u32(in);
  if (version != kAutoencoderVersion) throw Error("autoencoder checkpoint: unsupported version " + std::to_string(version));
  const std::size_t epoch = bin::get_u32(in);
  AutoencoderConfig c;
  c.vocab_size = bin::get_u32(in);
  c.max_len = bin::get_u32(in);
  c.embedding_dim = bin::get_u32(in);
  c.latent_dim = bin::get_u32(in);
  c.dropout = bin::get_f64(in);
  char flags[2];
  bin::read_exact(in, flags, 2);
  if (flags[0] != 0 && flags[0] != 1) throw Error("autoencoder checkpoint: bad dropout placement");
  c.placement = static_cast<DropoutPlacement>(flags[0]);
  c.mask_pad = flags[1] != 0;
  const std::string tsv = bin::get_bytes(in);

  AutoencoderCheckpoint<Real> ck{AutoencoderModel<Real>(c), epoch, std::nullopt};
  if (!tsv.empty()) {
    std::istringstream ts(tsv);
    ck.vocab = Vocabulary::read_tsv(ts);
    if (ck.vocab->size() != c.vocab_size) throw Error("autoencoder checkpoint: vocabulary size mismatch");
  }
  nn::assign_parameters(nn::read_parameters(in), ck.model.parameters());
  return ck;
}

template <class Real>
void save_autoencoder(const std::filesystem::path& path, const AutoencoderModel<Real>& model, std::size_t epoch,
                      const Vocabulary* vocab) {
  auto out = open_output(path);
  write_autoencoder(out, model, epoch, vocab);
  if (!out) throw Error("failed writing checkpoint '" + path.string() + "'");
}

template <class Real>
AutoencoderCheckpoint<Real> load_autoencoder(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_autoencoder<Real>(in);
}

}  // namespace detprod
