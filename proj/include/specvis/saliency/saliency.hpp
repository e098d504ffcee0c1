#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "specvis/core/error.hpp"
#include "specvis/core/keyvalue.hpp"
#include "specvis/datasets/spectral.hpp"
#include "specvis/models/classifier.hpp"
#include "specvis/numerics/loss.hpp"

namespace specvis::saliency {

/// |d logit_target / d input| per input dimension. The gradient is taken of
/// the pre-softmax score so saturated probabilities do not hide it.
struct SaliencyMap {
  std::vector<double> spectral;  // 662 entries when the model sees spectra
  std::vector<double> image;     // embedding-dim entries when it sees images
  int target = 0;
  bool target_is_prediction = true;
  std::size_t samples = 1;  // > 1 only for the averaged extension
};

namespace detail {

template <std::floating_point T>
void require_ready(const nn::Network<T>& net, std::string_view what) {
  if (!net.ready()) throw StateError(std::string(what) + " is not trained or loaded");
}

template <std::floating_point T>
int resolve_target(const nn::Matrix<T>& logits, std::optional<int> target) {
  const int classes = static_cast<int>(logits.cols());
  if (target) {
    if (*target < 0 || *target >= classes) throw ConfigError("saliency target class out of range");
    return *target;
  }
  return nn::argmax<T>(logits.row(0));
}

template <std::floating_point T>
nn::Matrix<T> one_hot_row(std::size_t classes, int target) {
  nn::Matrix<T> g(1, classes);
  g(0, static_cast<std::size_t>(target)) = T{1};
  return g;
}

template <std::floating_point T>
std::vector<double> magnitudes(const nn::Matrix<T>& grad) {
  std::vector<double> out(grad.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::abs(static_cast<double>(grad(0, i)));
  return out;
}

template <std::floating_point T>
nn::Matrix<T> as_row(std::span<const T> v) {
  return nn::Matrix<T>(1, v.size(), std::vector<T>(v.begin(), v.end()));
}

}  // namespace detail

/// Saliency of a single network (inference mode) for one input vector.
template <std::floating_point T>
std::vector<double> network_saliency(const nn::Network<T>& net, std::span<const T> input, std::optional<int> target,
                                     int* resolved = nullptr) {
  detail::require_ready(net, "network");
  auto copy = net;
  const auto logits = copy.forward(detail::as_row(input), nn::Mode::inference);
  const int t = detail::resolve_target(logits, target);
  if (resolved) *resolved = t;
  return detail::magnitudes(copy.backward(detail::one_hot_row<T>(logits.cols(), t)));
}

/// Saliency of a trained classifier of any kind. For the multimodal kind the
/// head gradient is propagated through both frozen encoders.
template <std::floating_point T>
SaliencyMap saliency(const models::Classifier<T>& model, std::span<const T> spectral_input,
                     std::span<const T> image_input, std::optional<int> target = std::nullopt) {
  SaliencyMap map;
  map.target_is_prediction = !target.has_value();
  std::vector<T> spectral(spectral_input.begin(), spectral_input.end());
  if (model.kind != models::ModelKind::image && !model.spectral_standardizer.empty()) {
    auto m = detail::as_row<T>(spectral);
    model.spectral_standardizer.apply(m);
    spectral.assign(m.data().begin(), m.data().end());
  }
  switch (model.kind) {
    case models::ModelKind::spectral:
      map.spectral = network_saliency<T>(model.spectral, spectral, target, &map.target);
      break;
    case models::ModelKind::image:
      map.image = network_saliency<T>(model.image, image_input, target, &map.target);
      break;
    case models::ModelKind::multimodal: {
      if (!model.fusion) throw StateError("multimodal classifier has no fusion model");
      const auto& f = *model.fusion;
      detail::require_ready(f.head, "fusion head");
      detail::require_ready(f.spectral_encoder, "spectral encoder");
      detail::require_ready(f.image_encoder, "image encoder");
      auto senc = f.spectral_encoder;
      auto ienc = f.image_encoder;
      auto head = f.head;
      const auto hs = senc.forward(detail::as_row<T>(spectral), nn::Mode::inference);
      const auto hi = ienc.forward(detail::as_row(image_input), nn::Mode::inference);
      const auto logits = head.forward(nn::Matrix<T>::hconcat(hs, hi), nn::Mode::inference);
      map.target = detail::resolve_target(logits, target);
      const auto g = head.backward(detail::one_hot_row<T>(logits.cols(), map.target));
      map.spectral = detail::magnitudes(senc.backward(g.column_block(0, hs.cols())));
      map.image = detail::magnitudes(ienc.backward(g.column_block(hs.cols(), hi.cols())));
      break;
    }
  }
  // Standardization rescales inputs; chain rule back to the raw feature.
  if (!model.spectral_standardizer.empty())
    for (std::size_t i = 0; i < map.spectral.size(); ++i)
      map.spectral[i] *= std::abs(static_cast<double>(model.spectral_standardizer.scale[i]));
  return map;
}

/// Extension: mean of per-sample maps, each with its own predicted target
/// unless `target` is fixed.
template <std::floating_point T>
SaliencyMap mean_saliency(const models::Classifier<T>& model, const nn::Matrix<T>& spectral,
                          const nn::Matrix<T>& image, std::optional<int> target = std::nullopt) {
  if (spectral.rows() == 0 || spectral.rows() != image.rows()) throw ConfigError("mean saliency needs paired rows");
  SaliencyMap total;
  for (std::size_t r = 0; r < spectral.rows(); ++r) {
    auto m = saliency<T>(model, spectral.row(r), image.row(r), target);
    if (r == 0) {
      total = m;
      continue;
    }
    for (std::size_t i = 0; i < m.spectral.size(); ++i) total.spectral[i] += m.spectral[i];
    for (std::size_t i = 0; i < m.image.size(); ++i) total.image[i] += m.image[i];
  }
  const double n = static_cast<double>(spectral.rows());
  for (double& v : total.spectral) v /= n;
  for (double& v : total.image) v /= n;
  total.samples = spectral.rows();
  return total;
}

inline std::string_view modality_tag(std::size_t spectral_index) {
  return spectral_index < data::kSpectralBands ? "spectral_raw" : "spectral_derivative";
}

/// Delimited output: `index,magnitude,modality`. Spectral indices run over
/// [0, 662) with raw bands in [0, 331) and the difference quotient in
/// [331, 662); image indices restart at 0. `normalize` divides by the
/// largest magnitude across both modalities.
inline void write_saliency(std::ostream& out, const SaliencyMap& map, bool normalize = false) {
  double scale = 1.0;
  if (normalize) {
    double peak = 0.0;
    for (double v : map.spectral) peak = std::max(peak, v);
    for (double v : map.image) peak = std::max(peak, v);
    if (peak > 0.0) scale = 1.0 / peak;
  }
  out << "# quantity = abs_gradient_of_logit\n";
  out << "# target = " << map.target << (map.target_is_prediction ? " (predicted)" : " (specified)") << "\n";
  out << "# normalized = " << (normalize ? "max" : "none") << "\n";
  out << "# aggregate = " << (map.samples > 1 ? "mean_over_" + std::to_string(map.samples) + "_samples" : "single_sample")
      << "\n";
  out << "index,magnitude,modality\n";
  for (std::size_t i = 0; i < map.spectral.size(); ++i)
    out << i << ',' << format_number(map.spectral[i] * scale) << ',' << modality_tag(i) << '\n';
  for (std::size_t i = 0; i < map.image.size(); ++i)
    out << i << ',' << format_number(map.image[i] * scale) << ",image\n";
}

}  // namespace specvis::saliency
