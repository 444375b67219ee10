#include <functional>
#include <limits>
#include <numeric>
#include <string>

#include "binary_io.hpp"
#include "psd/error.hpp"
#include "psd/file_io.hpp"
#include "psd/tensor.hpp"

namespace psd {

std::size_t Tensor::element_count() const {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  if (t.values.size() != t.element_count()) {
    throw ShapeError("tensor holds " + std::to_string(t.values.size()) +
                     " values but its dims describe " + std::to_string(t.element_count()));
  }
  detail::ByteWriter out;
  out.magic("TNSR");
  out.u32(static_cast<std::uint32_t>(t.dims.size()));
  for (std::size_t d : t.dims) {
    if (d > std::numeric_limits<std::uint32_t>::max()) throw SizeError("tensor dim exceeds u32");
    out.u32(static_cast<std::uint32_t>(d));
  }
  out.f64s(t.values);
  return out.take();
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  detail::ByteReader in(bytes, "TNSR");
  in.expect_magic("TNSR");
  const std::uint32_t rank = in.u32("rank");
  if (std::size_t{rank} * 4 > bytes.size()) {
    throw ParseError(in.position(), "TNSR: truncated dims, rank " + std::to_string(rank) +
                                        " needs " + std::to_string(4 * std::size_t{rank}) +
                                        " bytes");
  }
  Tensor t;
  t.dims.resize(rank);
  std::size_t count = 1;
  for (auto& d : t.dims) {
    d = in.u32("dims");
    if (d != 0 && count > std::numeric_limits<std::size_t>::max() / 8 / d) {
      throw ParseError(in.position(), "TNSR: element count overflows");
    }
    count *= d;
  }
  const std::size_t remaining = bytes.size() - in.position();
  if (remaining < 8 * count) {
    throw ParseError(in.position(), "TNSR: truncated payload, expected " +
                                        std::to_string(8 * count) + " bytes, found " +
                                        std::to_string(remaining));
  }
  t.values.resize(count);
  in.f64s(t.values, "payload");
  in.expect_end();
  return t;
}

void save_tensor(const std::filesystem::path& path, const Tensor& t) {
  write_file_atomic(path, encode_tensor(t));
}

Tensor load_tensor(const std::filesystem::path& path) { return decode_tensor(read_file(path)); }

Tensor stack_rows(std::span<const Vector> rows) {
  Tensor t;
  const std::size_t len = rows.empty() ? 0 : rows.front().size();
  t.dims = {rows.size(), len};
  t.values.reserve(rows.size() * len);
  for (const auto& r : rows) {
    if (r.size() != len) throw InputError("cannot stack rows of unequal length");
    t.values.insert(t.values.end(), r.begin(), r.end());
  }
  return t;
}

std::vector<Vector> unstack_rows(const Tensor& t) {
  if (t.dims.size() != 2) {
    throw ShapeError("expected a rank-2 tensor, got rank " + std::to_string(t.dims.size()));
  }
  std::vector<Vector> rows(t.dims[0]);
  for (std::size_t i = 0; i < t.dims[0]; ++i) {
    const auto first = t.values.begin() + static_cast<std::ptrdiff_t>(i * t.dims[1]);
    rows[i].assign(first, first + static_cast<std::ptrdiff_t>(t.dims[1]));
  }
  return rows;
}

}  // namespace psd
