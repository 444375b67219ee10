#include "psd/model_io.hpp"

#include <limits>

#include "binary_io.hpp"
#include "psd/error.hpp"
#include "psd/file_io.hpp"

namespace psd {

std::vector<std::uint8_t> encode_model(const Model& model) {
  const Dictionary& b = model.dictionary;
  const Predictor& p = model.predictor;
  check_model_shapes(b, p);
  constexpr auto kMax = std::numeric_limits<std::uint32_t>::max();
  if (b.signal_size() > kMax || b.code_size() > kMax) throw SizeError("model too large for PSD1");

  detail::ByteWriter out;
  out.magic("PSD1");
  out.u32(static_cast<std::uint32_t>(b.signal_size()));
  out.u32(static_cast<std::uint32_t>(b.code_size()));
  out.f64s(b.atoms().data());
  out.f64s(p.filters.data());
  out.f64s(p.bias);
  out.f64s(p.gain);
  return out.take();
}

Model decode_model(std::span<const std::uint8_t> bytes) {
  detail::ByteReader in(bytes, "PSD1");
  in.expect_magic("PSD1");
  const std::size_t n = in.u32("n");
  const std::size_t m = in.u32("m");
  if (n == 0 || m == 0) throw ParseError(in.position(), "PSD1: n and m must be positive");
  // Size check before allocating: a corrupt header must not trigger a huge allocation.
  const std::size_t remaining = bytes.size() - in.position();
  const std::size_t expected = 8 * (2 * n * m + 2 * m);
  if (remaining < expected) {
    throw ParseError(in.position(), "PSD1: truncated payload, expected " +
                                        std::to_string(expected) + " bytes, found " +
                                        std::to_string(remaining));
  }

  Model model{Dictionary(n, m), Predictor(n, m)};
  in.f64s(model.dictionary.atoms().data(), "basis");
  in.f64s(model.predictor.filters.data(), "filters");
  in.f64s(model.predictor.bias, "bias");
  in.f64s(model.predictor.gain, "gain");
  in.expect_end();
  return model;
}

void save_model(const std::filesystem::path& path, const Model& model) {
  write_file_atomic(path, encode_model(model));
}

Model load_model(const std::filesystem::path& path) { return decode_model(read_file(path)); }

}  // namespace psd
