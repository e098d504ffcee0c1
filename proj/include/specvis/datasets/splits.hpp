#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "specvis/core/error.hpp"
#include "specvis/core/keyvalue.hpp"
#include "specvis/datasets/dataset.hpp"

namespace specvis::data {

struct LoooSplit {
  std::vector<std::size_t> train_objects;  // indices into the dataset
  std::size_t test_object = 0;
};

/// One split per listed object: that object is the test set and all the
/// others form the training set.
inline std::vector<LoooSplit> make_looo_splits(std::span<const std::size_t> objects) {
  if (objects.size() < 2) throw ConfigError("leave-one-object-out needs at least 2 objects");
  std::vector<LoooSplit> splits;
  splits.reserve(objects.size());
  for (std::size_t held : objects) {
    LoooSplit s;
    s.test_object = held;
    for (std::size_t o : objects)
      if (o != held) s.train_objects.push_back(o);
    splits.push_back(std::move(s));
  }
  return splits;
}

/// Splits over the dataset's train-tagged objects.
inline std::vector<LoooSplit> make_looo_splits(const Dataset& dataset) {
  const auto train = dataset.indices_with_split(SplitTag::train);
  return make_looo_splits(train);
}

/// Keeps only objects of the given materials. The class list becomes the
/// subset in canonical order, so labels are re-mapped to [0, subset size).
inline Dataset filter_materials(const Dataset& dataset, const std::set<Material>& subset) {
  if (subset.empty()) throw ConfigError("material subset is empty");
  for (Material m : subset)
    if (std::find(dataset.classes().begin(), dataset.classes().end(), m) == dataset.classes().end())
      throw ConfigError("material '" + std::string(name_of(m)) + "' is not a class of this dataset");
  std::vector<ObjectRecord> kept;
  for (const auto& o : dataset.objects())
    if (subset.contains(o.material)) kept.push_back(o);
  if (kept.empty()) throw ConfigError("material subset selects no objects");
  return Dataset(dataset.name(), dataset.extractor_id(), std::vector<Material>(subset.begin(), subset.end()),
                 std::move(kept));
}

inline std::set<Material> parse_material_set(std::string_view text) {
  std::set<Material> out;
  if (text == "all" || text.empty()) return {kAllMaterials.begin(), kAllMaterials.end()};
  for (const auto& part : split(text, ','))
    if (!part.empty()) out.insert(parse_material(part));
  if (out.empty()) throw ConfigError("material subset is empty");
  return out;
}

}  // namespace specvis::data
