#include "kvsim/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "kvsim/errors.hpp"

namespace kvsim {

namespace {

constexpr std::array<char, 4> kMagic{'K', 'V', 'S', 'F'};

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> b{};
  for (int i = 0; i < 4; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(b.data(), 4);
}

void put_f64(std::ostream& out, double x) {
  const auto v = std::bit_cast<std::uint64_t>(x);
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(b.data(), 8);
}

std::uint64_t get_bytes(std::istream& in, int n) {
  std::array<unsigned char, 8> b{};
  in.read(reinterpret_cast<char*>(b.data()), n);
  if (!in) throw IoError("checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = n - 1; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}

std::uint32_t get_u32(std::istream& in) { return static_cast<std::uint32_t>(get_bytes(in, 4)); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_bytes(in, 8)); }

}  // namespace

void write_snapshot(std::ostream& out, const SpectralField& field, double time) {
  out.write(kMagic.data(), 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(field.dim()));
  put_u32(out, static_cast<std::uint32_t>(field.N()));
  put_u32(out, static_cast<std::uint32_t>(field.shape()));
  put_f64(out, time);
  for (const Complex& c : field.coefficients()) {
    put_f64(out, c.real());
    put_f64(out, c.imag());
  }
  if (!out) throw IoError("checkpoint write failed");
}

FieldSnapshot read_snapshot(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), 4);
  if (!in || magic != kMagic) throw IoError("not a KVSF checkpoint (bad magic)");
  const std::uint32_t version = get_u32(in);
  if (version != kCheckpointVersion) throw IoError(fmt::format("unsupported checkpoint version {}", version));
  const std::uint32_t d = get_u32(in);
  const std::uint32_t N = get_u32(in);
  const std::uint32_t shape = get_u32(in);
  if (d < 1 || d > static_cast<std::uint32_t>(kMaxDim) || shape > 2 || N > (1u << 16))
    throw IoError(fmt::format("corrupt checkpoint header (d = {}, N = {}, shape = {})", d, N, shape));
  FieldSnapshot snap;
  snap.time = get_f64(in);
  snap.field = SpectralField(static_cast<int>(d), static_cast<int>(N), static_cast<FieldShape>(shape));
  for (Complex& c : snap.field.coefficients()) {
    const double re = get_f64(in);
    const double im = get_f64(in);
    c = Complex(re, im);
  }
  return snap;
}

void write_snapshot(const std::filesystem::path& path, const SpectralField& field, double time) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  write_snapshot(out, field, time);
}

FieldSnapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  return read_snapshot(in);
}

}  // namespace kvsim
