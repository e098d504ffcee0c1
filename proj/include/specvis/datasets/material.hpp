#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "specvis/core/error.hpp"

namespace specvis::data {

/// The eight material categories; the enumerator value is the canonical
/// (alphabetical) class index.
enum class Material : std::uint8_t { ceramic, fabric, foam, glass, metal, paper, plastic, wood };

inline constexpr std::size_t kMaterialCount = 8;

inline constexpr std::array<std::string_view, kMaterialCount> kMaterialNames = {
    "ceramic", "fabric", "foam", "glass", "metal", "paper", "plastic", "wood"};

inline constexpr std::array<Material, kMaterialCount> kAllMaterials = {
    Material::ceramic, Material::fabric, Material::foam,  Material::glass,
    Material::metal,   Material::paper,  Material::plastic, Material::wood};

constexpr std::string_view name_of(Material m) { return kMaterialNames[static_cast<std::size_t>(m)]; }

inline Material parse_material(std::string_view name) {
  for (std::size_t i = 0; i < kMaterialCount; ++i)
    if (kMaterialNames[i] == name) return kAllMaterials[i];
  throw DataError("unknown material '" + std::string(name) + "'");
}

}  // namespace specvis::data
