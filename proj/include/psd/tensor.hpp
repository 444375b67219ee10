#pragma once

// "TNSR" dense tensor format, little-endian:
//   'T' 'N' 'S' 'R' | u32 rank | rank x u32 dims | prod(dims) f64, row-major

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "psd/matrix.hpp"

namespace psd {

struct Tensor {
  std::vector<std::size_t> dims;
  std::vector<double> values;

  std::size_t element_count() const;
  bool operator==(const Tensor&) const = default;
};

std::vector<std::uint8_t> encode_tensor(const Tensor& t);
/// Throws ParseError on wrong magic, truncation, or trailing bytes.
Tensor decode_tensor(std::span<const std::uint8_t> bytes);

void save_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor load_tensor(const std::filesystem::path& path);

/// rows x len tensor from equal-length vectors. Throws InputError on ragged input.
Tensor stack_rows(std::span<const Vector> rows);
/// Splits a rank-2 tensor back into row vectors.
std::vector<Vector> unstack_rows(const Tensor& t);

}  // namespace psd
