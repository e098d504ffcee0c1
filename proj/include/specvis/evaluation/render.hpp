#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "specvis/evaluation/report.hpp"

namespace specvis::eval {

// Text renderings of aggregate reports: accuracy tables with one column per
// model kind (spectral, image, multimodal) and one row per material subset,
// a per-material heatmap as CSV, and a per-object case-study table.

namespace detail {

inline const std::vector<std::string>& kind_columns() {
  static const std::vector<std::string> kinds = {"spectral", "image", "multimodal"};
  return kinds;
}

inline std::string percent(MeanStd v, bool with_std) {
  if (std::isnan(v.mean)) return "-";
  char buf[48];
  if (with_std)
    std::snprintf(buf, sizeof buf, "%.1f +- %.1f", 100.0 * v.mean, 100.0 * v.std);
  else
    std::snprintf(buf, sizeof buf, "%.1f", 100.0 * v.mean);
  return buf;
}

inline std::string subset_label(const std::vector<std::string>& classes) {
  return std::to_string(classes.size()) + " Materials";
}

inline std::string protocol_title(const std::string& protocol) {
  return protocol == "looo" ? "Leave-one-object-out accuracy (%)" : "Heldout test set accuracy (%)";
}

}  // namespace detail

/// Tables grouped by protocol; within each, rows ordered by subset size.
inline void render_accuracy_tables(std::ostream& out, const std::vector<SeedAggregate>& aggs, bool with_std = true) {
  // protocol -> (subset size, subset) -> kind -> overall
  std::map<std::string, std::map<std::pair<std::size_t, std::string>, std::map<std::string, MeanStd>>> grid;
  for (const auto& a : aggs) {
    const auto& r = a.first();
    grid[r.protocol][{r.classes.size(), join(r.classes, ",")}][r.model_kind] = a.overall;
  }
  for (const auto& [protocol, rows] : grid) {
    out << "# " << detail::protocol_title(protocol) << "\n";
    out << "| Materials | Spectral | Image | Multimodal |\n";
    out << "|---|---|---|---|\n";
    for (const auto& [subset, kinds] : rows) {
      out << "| " << std::to_string(subset.first) << " Materials";
      for (const auto& k : detail::kind_columns()) {
        const auto it = kinds.find(k);
        out << " | " << (it == kinds.end() ? "-" : detail::percent(it->second, with_std));
      }
      out << " |\n";
    }
    out << "\n";
  }
}

/// CSV heatmap: one row per material, one column per model kind.
inline void render_material_heatmap(std::ostream& out, const std::vector<SeedAggregate>& aggs) {
  std::map<std::tuple<std::string, std::string>, std::vector<const SeedAggregate*>> groups;
  for (const auto& a : aggs) groups[{a.first().protocol, join(a.first().classes, ",")}].push_back(&a);
  for (const auto& [key, members] : groups) {
    const auto& classes = members.front()->first().classes;
    out << "# per-material accuracy (%), protocol=" << std::get<0>(key) << ", " << detail::subset_label(classes)
        << "\n";
    out << "material,spectral,image,multimodal\n";
    for (std::size_t c = 0; c < classes.size(); ++c) {
      out << classes[c];
      for (const auto& k : detail::kind_columns()) {
        std::string cell = "-";
        for (const auto* m : members)
          if (m->first().model_kind == k) cell = detail::percent(m->per_material[c], false);
        out << ',' << cell;
      }
      out << "\n";
    }
    out << "\n";
  }
}

/// Per-object accuracies across model kinds.
inline void render_object_table(std::ostream& out, const std::vector<SeedAggregate>& aggs) {
  std::map<std::tuple<std::string, std::string>, std::vector<const SeedAggregate*>> groups;
  for (const auto& a : aggs) groups[{a.first().protocol, join(a.first().classes, ",")}].push_back(&a);
  for (const auto& [key, members] : groups) {
    out << "# per-object accuracy (%), protocol=" << std::get<0>(key) << ", "
        << detail::subset_label(members.front()->first().classes) << "\n";
    out << "| Object | Material | Spectral | Image | Multimodal |\n";
    out << "|---|---|---|---|---|\n";
    const auto& ref = members.front()->first();
    for (std::size_t o = 0; o < ref.outcomes.size(); ++o) {
      out << "| " << ref.outcomes[o].object_id << " | " << ref.classes[static_cast<std::size_t>(ref.outcomes[o].truth)];
      for (const auto& k : detail::kind_columns()) {
        std::string cell = "-";
        for (const auto* m : members)
          if (m->first().model_kind == k && o < m->per_object.size()) cell = detail::percent(m->per_object[o], false);
        out << " | " << cell;
      }
      out << " |\n";
    }
    out << "\n";
  }
}

}  // namespace specvis::eval
