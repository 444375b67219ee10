#pragma once

// "PSD1" binary model format, little-endian:
//   'P' 'S' 'D' '1' | u32 n | u32 m | B column-major (n*m f64)
//   | W row-major (m*n f64) | D (m f64) | diag(G) (m f64)

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "psd/model.hpp"

namespace psd {

std::vector<std::uint8_t> encode_model(const Model& model);
/// Throws ParseError on wrong magic, truncation, or trailing bytes.
Model decode_model(std::span<const std::uint8_t> bytes);

void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

}  // namespace psd
