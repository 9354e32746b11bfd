#pragma once

// Parameter checkpoint, little-endian binary:
//
//   magic "DPCK" | u32 version | u32 parameter count
//   per parameter: u32 name length | name bytes | u32 rank | u64 dims[rank]
//                  | f64 values[prod(dims)] (row-major)

#include <bit>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "detprod/error.hpp"
#include "detprod/neural/tensor.hpp"

namespace detprod::nn {

inline constexpr char kCheckpointMagic[4] = {'D', 'P', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace binary {

inline void put_u64(std::ostream& out, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, 8);
}

inline void put_u32(std::ostream& out, std::uint32_t v) {
  char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, 4);
}

inline void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

inline void put_bytes(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void read_exact(std::istream& in, char* buf, std::size_t n) {
  if (!in.read(buf, static_cast<std::streamsize>(n))) throw Error("checkpoint: truncated file");
}

inline std::uint64_t get_u64(std::istream& in) {
  unsigned char buf[8];
  read_exact(in, reinterpret_cast<char*>(buf), 8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | buf[i];
  return v;
}

inline std::uint32_t get_u32(std::istream& in) {
  unsigned char buf[4];
  read_exact(in, reinterpret_cast<char*>(buf), 4);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | buf[i];
  return v;
}

inline double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

inline std::string get_bytes(std::istream& in, std::size_t limit = std::size_t{1} << 30) {
  const std::uint32_t n = get_u32(in);
  if (n > limit) throw Error("checkpoint: string length " + std::to_string(n) + " exceeds limit");
  std::string s(n, '\0');
  read_exact(in, s.data(), n);
  return s;
}

inline void expect_magic(std::istream& in, const char (&magic)[4]) {
  char buf[4];
  read_exact(in, buf, 4);
  if (!std::equal(buf, buf + 4, magic)) throw Error("checkpoint: bad magic, not a " + std::string(magic, 4) + " file");
}

}  // namespace binary

template <class Real>
void write_parameters(std::ostream& out, const std::vector<const Parameter<Real>*>& params) {
  out.write(kCheckpointMagic, 4);
  binary::put_u32(out, kCheckpointVersion);
  binary::put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto* p : params) {
    binary::put_bytes(out, p->name);
    binary::put_u32(out, static_cast<std::uint32_t>(p->value.rank()));
    for (auto d : p->value.shape()) binary::put_u64(out, d);
    for (Real x : p->value.values()) binary::put_f64(out, static_cast<double>(x));
  }
}

/// name -> tensor, in double precision.
inline std::map<std::string, Tensor<double>> read_parameters(std::istream& in) {
  binary::expect_magic(in, kCheckpointMagic);
  const auto version = binary::get_u32(in);
  if (version != kCheckpointVersion) throw Error("checkpoint: unsupported version " + std::to_string(version));
  const auto count = binary::get_u32(in);
  std::map<std::string, Tensor<double>> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = binary::get_bytes(in, 4096);
    const auto rank = binary::get_u32(in);
    if (rank > 8) throw Error("checkpoint: implausible rank for '" + name + "'");
    std::vector<std::size_t> shape(rank);
    std::size_t total = 1;
    for (auto& d : shape) {
      d = static_cast<std::size_t>(binary::get_u64(in));
      total *= d;
    }
    if (total > (std::size_t{1} << 32)) throw Error("checkpoint: implausible size for '" + name + "'");
    std::vector<double> values(total);
    for (auto& v : values) v = binary::get_f64(in);
    out.emplace(std::move(name), Tensor<double>(std::move(shape), std::move(values)));
  }
  return out;
}

/// Copies stored tensors into params by name; names and shapes must match.
template <class Real>
void assign_parameters(const std::map<std::string, Tensor<double>>& stored, const std::vector<Parameter<Real>*>& params) {
  if (stored.size() != params.size()) {
    throw Error("checkpoint: holds " + std::to_string(stored.size()) + " parameters, model has " +
                std::to_string(params.size()));
  }
  for (auto* p : params) {
    auto it = stored.find(p->name);
    if (it == stored.end()) throw Error("checkpoint: missing parameter '" + p->name + "'");
    if (it->second.shape() != p->value.shape()) {
      throw ShapeError("checkpoint: parameter '" + p->name + "' has shape " + it->second.shape_string() +
                       ", model expects " + p->value.shape_string());
    }
    for (std::size_t k = 0; k < p->value.size(); ++k) p->value[k] = static_cast<Real>(it->second[k]);
    p->zero_grad();
  }
}

}  // namespace detprod::nn
