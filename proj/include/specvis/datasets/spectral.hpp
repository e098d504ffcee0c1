#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "specvis/core/error.hpp"

namespace specvis::data {

/// Reflectance bands from 740 nm to 1070 nm inclusive, 1 nm apart.
inline constexpr std::size_t kSpectralBands = 331;
inline constexpr int kFirstWavelengthNm = 740;
inline constexpr int kLastWavelengthNm = 1070;
/// Raw spectrum followed by its difference quotient.
inline constexpr std::size_t kSpectralFeatures = 2 * kSpectralBands;

/// First derivative with unit wavelength step: central differences inside,
/// one-sided differences at both ends, so the output matches the input length.
template <typename T>
std::vector<T> difference_quotient(std::span<const T> raw) {
  if (raw.size() < 2) throw DataError("difference quotient needs at least 2 bands");
  for (T v : raw)
    if (!std::isfinite(v)) throw DataError("spectrum contains a non-finite value");
  const std::size_t n = raw.size();
  std::vector<T> out(n);
  out[0] = raw[1] - raw[0];
  for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (raw[i + 1] - raw[i - 1]) / T{2};
  out[n - 1] = raw[n - 1] - raw[n - 2];
  return out;
}

/// One spectral measurement. The derivative is always recomputed from the
/// raw bands, never stored independently.
template <typename T>
class SpectralSample {
 public:
  explicit SpectralSample(std::vector<T> raw) : raw_(std::move(raw)) {
    if (raw_.size() != kSpectralBands) {
      throw DataError("spectrum has " + std::to_string(raw_.size()) + " bands, expected " +
                      std::to_string(kSpectralBands));
    }
    derivative_ = difference_quotient<T>(raw_);
  }

  std::span<const T> raw() const { return raw_; }
  std::span<const T> derivative() const { return derivative_; }

  std::vector<T> combined() const {
    std::vector<T> out(raw_);
    out.insert(out.end(), derivative_.begin(), derivative_.end());
    return out;
  }

 private:
  std::vector<T> raw_;
  std::vector<T> derivative_;
};

/// Writes raw ++ difference_quotient(raw) into `out` (size 2 * raw.size()).
/// The derivative is evaluated in double precision.
template <typename T, typename U>
void write_combined(std::span<const T> raw, std::span<U> out) {
  const std::vector<double> wide(raw.begin(), raw.end());
  const auto dq = difference_quotient<double>(wide);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[i] = static_cast<U>(raw[i]);
    out[raw.size() + i] = static_cast<U>(dq[i]);
  }
}

}  // namespace specvis::data
