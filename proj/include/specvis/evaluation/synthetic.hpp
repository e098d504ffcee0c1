#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "specvis/core/error.hpp"
#include "specvis/core/random.hpp"
#include "specvis/datasets/dataset.hpp"

namespace specvis::eval {

/// Which modalities carry class information.
enum class SyntheticSignal { both, spectral_only, image_only };

/// Parameters of a desk-scale stand-in corpus.
///
/// Every sample is class prototype + object offset + noise. `separation`,
/// `object_spread`, and `noise` are the standard deviations of those three
/// terms in embedding units; spectra use the same ratios scaled by
/// kSpectralScale around a smooth reflectance baseline.
struct SyntheticCorpusSpec {
  std::size_t objects_per_material = 2;
  std::size_t samples_per_object = 10;
  double separation = 1.0;
  double noise = 0.1;
  double object_spread = 0.1;
  std::uint64_t seed = 0;
  std::size_t embedding_dim = 1920;
  std::size_t heldout_per_material = 0;
  SyntheticSignal signal = SyntheticSignal::both;
  std::set<data::Material> materials{data::kAllMaterials.begin(), data::kAllMaterials.end()};
};

inline constexpr double kSpectralScale = 0.05;

namespace detail {

/// Random smooth curve over the spectral bands with unit RMS: a few
/// low-frequency sinusoids with normal amplitudes and uniform phases.
inline std::vector<double> smooth_curve(Rng& rng) {
  constexpr int kTerms = 4;
  double amp[kTerms], phase[kTerms];
  for (int k = 0; k < kTerms; ++k) {
    amp[k] = standard_normal(rng);
    phase[k] = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  }
  std::vector<double> curve(data::kSpectralBands);
  double ss = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(curve.size() - 1);
    double v = 0.0;
    for (int k = 0; k < kTerms; ++k) v += amp[k] * std::sin(2.0 * std::numbers::pi * (k + 1) * t + phase[k]);
    curve[i] = v;
    ss += v * v;
  }
  const double rms = std::sqrt(ss / static_cast<double>(curve.size()));
  for (double& v : curve) v = rms > 0.0 ? v / rms : 0.0;
  return curve;
}

inline std::vector<double> normal_vector(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = standard_normal(rng);
  return v;
}

}  // namespace detail

inline data::Dataset generate_synthetic_corpus(const SyntheticCorpusSpec& spec) {
  if (spec.objects_per_material == 0 || spec.samples_per_object == 0 || spec.embedding_dim == 0)
    throw ConfigError("synthetic corpus needs objects, samples, and a nonzero embedding dimension");
  if (spec.heldout_per_material > spec.objects_per_material)
    throw ConfigError("more heldout objects than objects per material");
  if (spec.materials.empty()) throw ConfigError("synthetic corpus needs at least one material");
  if (spec.separation < 0.0 || spec.noise < 0.0 || spec.object_spread < 0.0)
    throw ConfigError("synthetic scales must be non-negative");

  const double spectral_sep = spec.signal == SyntheticSignal::image_only ? 0.0 : spec.separation;
  const double image_sep = spec.signal == SyntheticSignal::spectral_only ? 0.0 : spec.separation;

  std::vector<double> baseline(data::kSpectralBands);
  for (std::size_t i = 0; i < baseline.size(); ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(baseline.size() - 1);
    baseline[i] = 0.45 + 0.1 * std::sin(std::numbers::pi * t);
  }

  std::vector<data::ObjectRecord> objects;
  for (data::Material m : spec.materials) {
    const auto mi = static_cast<std::uint64_t>(m);
    Rng proto_rng(derive_seed(spec.seed, "prototype", mi));
    const auto spectral_proto = detail::smooth_curve(proto_rng);
    const auto image_proto = detail::normal_vector(proto_rng, spec.embedding_dim);

    for (std::size_t k = 0; k < spec.objects_per_material; ++k) {
      data::ObjectRecord o;
      char id[64];
      std::snprintf(id, sizeof id, "%s_%02zu", std::string(data::name_of(m)).c_str(), k + 1);
      o.object_id = id;
      o.material = m;
      o.split = k >= spec.objects_per_material - spec.heldout_per_material ? data::SplitTag::heldout
                                                                            : data::SplitTag::train;
      Rng obj_rng(derive_seed(spec.seed, o.object_id));
      const auto spectral_offset = detail::smooth_curve(obj_rng);
      const auto image_offset = detail::normal_vector(obj_rng, spec.embedding_dim);

      o.spectra = nn::Matrix<float>(spec.samples_per_object, data::kSpectralBands);
      o.embeddings = nn::Matrix<float>(spec.samples_per_object, spec.embedding_dim);
      for (std::size_t s = 0; s < spec.samples_per_object; ++s) {
        auto row = o.spectra.row(s);
        for (std::size_t b = 0; b < row.size(); ++b) {
          row[b] = static_cast<float>(baseline[b] + kSpectralScale * (spectral_sep * spectral_proto[b] +
                                                                      spec.object_spread * spectral_offset[b] +
                                                                      spec.noise * standard_normal(obj_rng)));
        }
        auto emb = o.embeddings.row(s);
        for (std::size_t d = 0; d < emb.size(); ++d) {
          emb[d] = static_cast<float>(image_sep * image_proto[d] + spec.object_spread * image_offset[d] +
                                      spec.noise * standard_normal(obj_rng));
        }
      }
      objects.push_back(std::move(o));
    }
  }
  return data::Dataset("synthetic", "synthetic/gaussian-" + std::to_string(spec.embedding_dim),
                       std::vector<data::Material>(spec.materials.begin(), spec.materials.end()),
                       std::move(objects));
}

}  // namespace specvis::eval
