#pragma once

#include <filesystem>
#include <iosfwd>

#include "kvsim/spectral.hpp"

namespace kvsim {

/// Binary field snapshot, little-endian throughout:
///   "KVSF" | u32 version | u32 d | u32 N | u32 shape | f64 time
///   then (re, im) f64 pairs, component-major, modes in ModeSet order.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct FieldSnapshot {
  SpectralField field;
  double time = 0.0;
};

void write_snapshot(std::ostream& out, const SpectralField& field, double time);
FieldSnapshot read_snapshot(std::istream& in);

void write_snapshot(const std::filesystem::path& path, const SpectralField& field, double time);
FieldSnapshot read_snapshot(const std::filesystem::path& path);

}  // namespace kvsim
