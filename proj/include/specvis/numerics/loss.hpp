#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "specvis/core/error.hpp"
#include "specvis/numerics/matrix.hpp"

namespace specvis::nn {

/// Row-wise softmax, stabilized by subtracting each row's maximum.
template <std::floating_point T>
Matrix<T> softmax(const Matrix<T>& logits) {
  Matrix<T> p(logits.rows(), logits.cols());
  for (std::size_t b = 0; b < logits.rows(); ++b) {
    const auto z = logits.row(b);
    auto out = p.row(b);
    const T zmax = *std::max_element(z.begin(), z.end());
    T total{0};
    for (std::size_t k = 0; k < z.size(); ++k) {
      out[k] = std::exp(z[k] - zmax);
      total += out[k];
    }
    for (T& v : out) v /= total;
  }
  return p;
}

template <std::floating_point T>
struct LossResult {
  double loss = 0.0;
  Matrix<T> grad_logits;
};

/// Mean negative log-likelihood of `labels` under softmax(logits), and its
/// gradient (softmax - one_hot) / batch.
template <std::floating_point T>
LossResult<T> softmax_cross_entropy(const Matrix<T>& logits, std::span<const int> labels) {
  if (labels.size() != logits.rows()) throw ConfigError("loss: label count differs from batch size");
  if (logits.rows() == 0) throw ConfigError("loss: empty batch");
  const auto classes = static_cast<int>(logits.cols());
  LossResult<T> result{0.0, softmax(logits)};
  const T inv_batch = T{1} / static_cast<T>(logits.rows());
  double total = 0.0;
  for (std::size_t b = 0; b < logits.rows(); ++b) {
    const int y = labels[b];
    if (y < 0 || y >= classes) {
      throw DataError("label " + std::to_string(y) + " outside [0," + std::to_string(classes) + ")");
    }
    const auto z = logits.row(b);
    const T zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (T v : z) sum += std::exp(static_cast<double>(v - zmax));
    total += std::log(sum) - static_cast<double>(z[static_cast<std::size_t>(y)] - zmax);
    auto g = result.grad_logits.row(b);
    g[static_cast<std::size_t>(y)] -= T{1};
    for (T& v : g) v *= inv_batch;
  }
  result.loss = total / static_cast<double>(logits.rows());
  return result;
}

/// Index of the largest entry; ties go to the lowest index.
template <std::floating_point T>
int argmax(std::span<const T> values) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k)
    if (values[k] > values[best]) best = k;
  return static_cast<int>(best);
}

}  // namespace specvis::nn
