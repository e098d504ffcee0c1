#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "specvis/core/error.hpp"

namespace specvis::nn {

/// Dense row-major matrix. Rows are samples, columns are features.
template <std::floating_point T>
class Matrix {
 public:
  using value_type = T;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{0})
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<T> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows * cols) {
      throw ConfigError("matrix " + std::to_string(rows) + "x" + std::to_string(cols) +
                        " given " + std::to_string(values_.size()) + " values");
    }
  }
  Matrix(std::initializer_list<std::initializer_list<T>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    values_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw ConfigError("ragged matrix literal");
      values_.insert(values_.end(), r.begin(), r.end());
    }
  }

  template <std::floating_point U>
  static Matrix cast(const Matrix<U>& other) {
    Matrix out(other.rows(), other.cols());
    std::transform(other.data().begin(), other.data().end(), out.values_.begin(),
                   [](U v) { return static_cast<T>(v); });
    return out;
  }

  static Matrix identity(std::size_t n) {
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) out(i, i) = T{1};
    return out;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  T operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  std::span<T> data() { return values_; }
  std::span<const T> data() const { return values_; }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](T v) { return std::isfinite(v); });
  }

  void fill(T value) { std::fill(values_.begin(), values_.end(), value); }

  /// Copies the listed rows, in order, into a new matrix.
  Matrix gather_rows(std::span<const std::size_t> indices) const {
    Matrix out(indices.size(), cols_);
    for (std::size_t i = 0; i < indices.size(); ++i)
      std::copy_n(values_.data() + indices[i] * cols_, cols_, out.values_.data() + i * cols_);
    return out;
  }

  /// Side-by-side concatenation [left | right].
  static Matrix hconcat(const Matrix& left, const Matrix& right) {
    if (left.rows() != right.rows()) throw ConfigError("hconcat: row counts differ");
    Matrix out(left.rows(), left.cols() + right.cols());
    for (std::size_t r = 0; r < left.rows(); ++r) {
      auto dst = out.row(r);
      std::copy(left.row(r).begin(), left.row(r).end(), dst.begin());
      std::copy(right.row(r).begin(), right.row(r).end(), dst.begin() + left.cols());
    }
    return out;
  }

  /// Columns [first, first + count).
  Matrix column_block(std::size_t first, std::size_t count) const {
    Matrix out(rows_, count);
    for (std::size_t r = 0; r < rows_; ++r)
      std::copy_n(values_.data() + r * cols_ + first, count, out.values_.data() + r * count);
    return out;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> values_;
};

template <std::floating_point T>
T dot(std::span<const T> a, std::span<const T> b) {
  // Four fixed lanes; the summation order is part of the determinism contract.
  T s0{}, s1{}, s2{}, s3{};
  const std::size_t n = a.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

template <std::floating_point T>
void axpy(T alpha, std::span<const T> x, std::span<T> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

/// y += a[0] x0 + a[1] x1 + a[2] x2 + a[3] x3, evaluated left to right so the
/// result equals four successive axpy calls.
template <std::floating_point T>
void axpy4(const T* a, const T* x0, const T* x1, const T* x2, const T* x3, T* y, std::size_t n) {
  const T a0 = a[0], a1 = a[1], a2 = a[2], a3 = a[3];
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + a0 * x0[i] + a1 * x1[i] + a2 * x2[i] + a3 * x3[i];
}

}  // namespace specvis::nn
