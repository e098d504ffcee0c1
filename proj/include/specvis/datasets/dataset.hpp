#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "specvis/core/error.hpp"
#include "specvis/core/hash.hpp"
#include "specvis/core/random.hpp"
#include "specvis/datasets/material.hpp"
#include "specvis/datasets/spectral.hpp"
#include "specvis/numerics/matrix.hpp"

namespace specvis::data {

enum class SplitTag { train, heldout };

inline std::string_view name_of(SplitTag s) { return s == SplitTag::train ? "train" : "heldout"; }

inline SplitTag parse_split(std::string_view s) {
  if (s == "train") return SplitTag::train;
  if (s == "heldout") return SplitTag::heldout;
  throw DataError("unknown split tag '" + std::string(s) + "'");
}

/// All measurements of one physical object. Row i of `spectra` holds the raw
/// 331-band reflectance of measurement i; row i of `embeddings` holds the
/// image embedding of the i-th texture image.
struct ObjectRecord {
  std::string object_id;
  Material material = Material::ceramic;
  SplitTag split = SplitTag::train;
  nn::Matrix<float> spectra;
  nn::Matrix<float> embeddings;

  std::size_t sample_count() const { return spectra.rows(); }
};

/// Immutable, validated collection of objects. `classes` lists the active
/// materials in canonical order; a sample's label is its material's position
/// in that list.
class Dataset {
 public:
  Dataset() = default;

  /// Validates every invariant and throws DataError naming the first
  /// offending object.
  Dataset(std::string name, std::string extractor_id, std::vector<Material> classes,
          std::vector<ObjectRecord> objects)
      : name_(std::move(name)),
        extractor_id_(std::move(extractor_id)),
        classes_(std::move(classes)),
        objects_(std::move(objects)) {
    validate();
  }

  const std::string& name() const { return name_; }
  const std::string& extractor_id() const { return extractor_id_; }
  const std::vector<Material>& classes() const { return classes_; }
  const std::vector<ObjectRecord>& objects() const { return objects_; }
  std::size_t class_count() const { return classes_.size(); }
  std::size_t embedding_dim() const { return objects_.empty() ? 0 : objects_.front().embeddings.cols(); }

  int label_of(Material m) const {
    const auto it = std::find(classes_.begin(), classes_.end(), m);
    if (it == classes_.end()) throw DataError("material '" + std::string(name_of(m)) + "' not in dataset classes");
    return static_cast<int>(it - classes_.begin());
  }

  std::size_t total_samples() const {
    std::size_t n = 0;
    for (const auto& o : objects_) n += o.sample_count();
    return n;
  }

  std::vector<std::size_t> indices_with_split(SplitTag tag) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < objects_.size(); ++i)
      if (objects_[i].split == tag) out.push_back(i);
    return out;
  }

  std::optional<std::size_t> find(std::string_view object_id) const {
    for (std::size_t i = 0; i < objects_.size(); ++i)
      if (objects_[i].object_id == object_id) return i;
    return std::nullopt;
  }

  /// Content hash over metadata and every stored value.
  std::string content_hash() const {
    Fnv1a h;
    h.update(extractor_id_).update("\n");
    for (Material m : classes_) h.update(name_of(m)).update(",");
    for (const auto& o : objects_) {
      h.update(o.object_id).update("|").update(name_of(o.material)).update("|").update(name_of(o.split));
      h.update_u64(o.spectra.rows()).update_u64(o.spectra.cols());
      h.update_values<float>(o.spectra.data());
      h.update_u64(o.embeddings.rows()).update_u64(o.embeddings.cols());
      h.update_values<float>(o.embeddings.data());
    }
    return h.hex();
  }

 private:
  void validate() const {
    if (objects_.empty()) throw DataError("dataset has no objects");
    if (classes_.empty()) throw DataError("dataset has no classes");
    if (!std::is_sorted(classes_.begin(), classes_.end()) ||
        std::adjacent_find(classes_.begin(), classes_.end()) != classes_.end()) {
      throw DataError("class list must be strictly in canonical order");
    }
    std::set<std::string> seen;
    const std::size_t dim = objects_.front().embeddings.cols();
    if (dim == 0) throw DataError("embedding dimension is zero");
    for (const auto& o : objects_) {
      const std::string who = "object '" + o.object_id + "'";
      if (o.object_id.empty()) throw DataError("empty object id");
      if (o.object_id.find_first_of(" \t\r\n,/\\") != std::string::npos)
        throw DataError(who + ": ids may not contain whitespace, commas, or slashes");
      if (!seen.insert(o.object_id).second) throw DataError("duplicate object id '" + o.object_id + "'");
      if (std::find(classes_.begin(), classes_.end(), o.material) == classes_.end())
        throw DataError(who + ": material '" + std::string(name_of(o.material)) + "' is not a dataset class");
      if (o.spectra.cols() != kSpectralBands)
        throw DataError(who + ": spectra have " + std::to_string(o.spectra.cols()) + " bands, expected " +
                        std::to_string(kSpectralBands));
      if (o.embeddings.cols() != dim)
        throw DataError(who + ": embedding dimension " + std::to_string(o.embeddings.cols()) + " differs from " +
                        std::to_string(dim));
      if (o.spectra.rows() == 0) throw DataError(who + ": no measurements");
      if (o.spectra.rows() != o.embeddings.rows())
        throw DataError(who + ": " + std::to_string(o.spectra.rows()) + " spectral samples but " +
                        std::to_string(o.embeddings.rows()) + " image embeddings");
      if (!o.spectra.all_finite()) throw DataError(who + ": non-finite spectral value");
      if (!o.embeddings.all_finite()) throw DataError(who + ": non-finite embedding value");
    }
  }

  std::string name_;
  std::string extractor_id_;
  std::vector<Material> classes_;
  std::vector<ObjectRecord> objects_;
};

/// Pairs spectral sample i with embedding row `embedding_index[i]`.
struct SamplePairing {
  std::vector<std::size_t> embedding_index;
};

enum class PairingMode { by_index, shuffled };

/// Measurements were collected together but not in strict one-to-one
/// correspondence; `shuffled` draws a seeded permutation instead of the
/// identity.
inline SamplePairing pair_samples(const ObjectRecord& object, PairingMode mode = PairingMode::by_index,
                                  std::uint64_t seed = 0) {
  if (object.spectra.rows() != object.embeddings.rows()) {
    throw DataError("object '" + object.object_id + "': cannot pair " + std::to_string(object.spectra.rows()) +
                    " spectral samples with " + std::to_string(object.embeddings.rows()) + " embeddings");
  }
  SamplePairing pairing;
  pairing.embedding_index.resize(object.sample_count());
  for (std::size_t i = 0; i < pairing.embedding_index.size(); ++i) pairing.embedding_index[i] = i;
  if (mode == PairingMode::shuffled) {
    Rng rng(derive_seed(seed, object.object_id));
    shuffle<std::size_t>(pairing.embedding_index, rng);
  }
  return pairing;
}

/// Model-ready features for a set of objects.
template <std::floating_point T>
struct FeatureSet {
  nn::Matrix<T> spectral;  // n x 662
  nn::Matrix<T> image;     // n x embedding_dim
  std::vector<int> labels;
  std::vector<std::size_t> object_of_row;  // index into the dataset's objects

  std::size_t size() const { return labels.size(); }
};

template <std::floating_point T>
FeatureSet<T> build_features(const Dataset& dataset, std::span<const std::size_t> object_indices,
                             PairingMode pairing = PairingMode::by_index, std::uint64_t pairing_seed = 0) {
  std::size_t rows = 0;
  for (std::size_t i : object_indices) rows += dataset.objects().at(i).sample_count();
  FeatureSet<T> fs;
  fs.spectral = nn::Matrix<T>(rows, kSpectralFeatures);
  fs.image = nn::Matrix<T>(rows, dataset.embedding_dim());
  fs.labels.reserve(rows);
  fs.object_of_row.reserve(rows);
  std::size_t r = 0;
  for (std::size_t i : object_indices) {
    const auto& o = dataset.objects()[i];
    const auto pairs = pair_samples(o, pairing, pairing_seed);
    const int label = dataset.label_of(o.material);
    for (std::size_t s = 0; s < o.sample_count(); ++s, ++r) {
      write_combined<float, T>(o.spectra.row(s), fs.spectral.row(r));
      const auto emb = o.embeddings.row(pairs.embedding_index[s]);
      std::copy(emb.begin(), emb.end(), fs.image.row(r).begin());
      fs.labels.push_back(label);
      fs.object_of_row.push_back(i);
    }
  }
  return fs;
}

/// Per-feature standardization fitted on training rows. The pipeline
/// applies it to spectral features only when explicitly enabled.
template <std::floating_point T>
struct Standardizer {
  std::vector<T> mean;
  std::vector<T> scale;

  bool empty() const { return mean.empty(); }

  static Standardizer fit(const nn::Matrix<T>& x) {
    Standardizer s;
    s.mean.assign(x.cols(), T{0});
    s.scale.assign(x.cols(), T{1});
    if (x.rows() == 0) return s;
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t c = 0; c < x.cols(); ++c) s.mean[c] += x(r, c);
    for (T& m : s.mean) m /= static_cast<T>(x.rows());
    std::vector<T> var(x.cols(), T{0});
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t c = 0; c < x.cols(); ++c) {
        const T d = x(r, c) - s.mean[c];
        var[c] += d * d;
      }
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const T sd = std::sqrt(var[c] / static_cast<T>(x.rows()));
      s.scale[c] = sd > T{0} ? T{1} / sd : T{1};
    }
    return s;
  }

  void apply(nn::Matrix<T>& x) const {
    if (empty()) return;
    if (x.cols() != mean.size()) throw ConfigError("standardizer fitted on a different width");
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t c = 0; c < x.cols(); ++c) x(r, c) = (x(r, c) - mean[c]) * scale[c];
  }
};

}  // namespace specvis::data
