#include "psd/matrix.hpp"

#include <cmath>
#include <string>

#include "psd/error.hpp"
#include "psd/kernels.hpp"

namespace psd {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("matrix data has " + std::to_string(data_.size()) + " entries, expected " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
}

void Matrix::multiply(std::span<const double> x, std::span<double> out) const {
  if (x.size() != cols_ || out.size() != rows_) {
    throw ShapeError("matrix-vector product: " + std::to_string(rows_) + "x" +
                     std::to_string(cols_) + " times vector of length " + std::to_string(x.size()));
  }
  kernels::active().gemv(data_.data(), rows_, cols_, x.data(), out.data());
}

void Matrix::multiply_transposed(std::span<const double> x, std::span<double> out) const {
  if (x.size() != rows_ || out.size() != cols_) {
    throw ShapeError("transposed matrix-vector product: (" + std::to_string(rows_) + "x" +
                     std::to_string(cols_) + ")^T times vector of length " +
                     std::to_string(x.size()));
  }
  kernels::active().gemv_t(data_.data(), rows_, cols_, x.data(), out.data());
}

bool all_finite(std::span<const double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace psd
