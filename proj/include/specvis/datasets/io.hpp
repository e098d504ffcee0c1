#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "specvis/core/binary.hpp"
#include "specvis/core/error.hpp"
#include "specvis/core/keyvalue.hpp"
#include "specvis/datasets/dataset.hpp"

namespace specvis::data {

// Canonical on-disk layout of a dataset directory:
//
//   dataset.manifest   key/value text: name, extractor_id, classes, and one
//                      `object = <id> <material> <split> <spectral rows>
//                      <embedding rows>` line per object, in storage order
//   spectra.f32        raw spectra, little-endian float32, 331 per row
//   embeddings.f32     image embeddings, little-endian float32, dim per row
//
// Rows are grouped by object in manifest order.
//
// The feature extractor writes embedding sets:
//
//   <name>.manifest    format, extractor_id, dim, matrix_file, and one
//                      `object = <id> <rows>` line per object
//   <matrix_file>      little-endian float32, dim per row, grouped by object

inline constexpr std::string_view kDatasetFormat = "specvis-dataset/1";
inline constexpr std::string_view kEmbeddingFormat = "specvis-embeddings/1";
inline constexpr std::string_view kDatasetManifestName = "dataset.manifest";

namespace detail {

inline std::vector<char> encode_rows(const nn::Matrix<float>& m) {
  std::vector<char> out;
  out.reserve(m.size() * 4);
  for (float v : m.data()) append_f32_le(out, v);
  return out;
}

inline std::string material_list(const std::vector<Material>& classes) {
  std::vector<std::string> names;
  for (Material m : classes) names.emplace_back(name_of(m));
  return join(names, ",");
}

struct RowBlock {
  std::string object_id;
  std::size_t rows;
};

/// Slices a flat float32 file into per-object matrices, naming the first
/// object whose rows run past the end of the file.
inline std::vector<nn::Matrix<float>> slice_rows(const std::vector<char>& bytes, std::size_t cols,
                                                 const std::vector<RowBlock>& blocks, std::string_view what) {
  if (bytes.size() % 4 != 0) throw DataError(std::string(what) + " file size is not a multiple of 4 bytes");
  const std::size_t values = bytes.size() / 4;
  std::vector<nn::Matrix<float>> out;
  std::size_t offset = 0;
  for (const auto& b : blocks) {
    const std::size_t need = b.rows * cols;
    if (offset + need > values) {
      throw DataError("object '" + b.object_id + "': " + std::string(what) + " file ends before its " +
                      std::to_string(b.rows) + " rows of " + std::to_string(cols) + " values");
    }
    std::vector<float> v(need);
    for (std::size_t i = 0; i < need; ++i) v[i] = read_f32_le(bytes.data() + 4 * (offset + i));
    out.emplace_back(b.rows, cols, std::move(v));
    offset += need;
  }
  if (offset != values) {
    throw DataError(std::string(what) + " file holds " + std::to_string(values - offset) +
                    " values beyond the rows listed in the manifest");
  }
  return out;
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!trim(line).empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace detail

inline std::filesystem::path manifest_path(const std::filesystem::path& path) {
  return std::filesystem::is_directory(path) ? path / kDatasetManifestName : path;
}

inline void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  KeyValueFile kv;
  kv.add("format", std::string(kDatasetFormat));
  kv.add("name", dataset.name());
  kv.add("extractor_id", dataset.extractor_id());
  kv.add("spectral_bands", std::to_string(kSpectralBands));
  kv.add("embedding_dim", std::to_string(dataset.embedding_dim()));
  kv.add("classes", detail::material_list(dataset.classes()));
  kv.add("spectral_file", "spectra.f32");
  kv.add("embedding_file", "embeddings.f32");
  kv.add("object_count", std::to_string(dataset.objects().size()));
  std::vector<char> spectra, embeddings;
  for (const auto& o : dataset.objects()) {
    kv.add("object", o.object_id + " " + std::string(name_of(o.material)) + " " + std::string(name_of(o.split)) +
                         " " + std::to_string(o.spectra.rows()) + " " + std::to_string(o.embeddings.rows()));
    const auto s = detail::encode_rows(o.spectra);
    const auto e = detail::encode_rows(o.embeddings);
    spectra.insert(spectra.end(), s.begin(), s.end());
    embeddings.insert(embeddings.end(), e.begin(), e.end());
  }
  write_bytes(dir / "spectra.f32", spectra);
  write_bytes(dir / "embeddings.f32", embeddings);
  kv.write(dir / kDatasetManifestName);
}

/// Loads a canonical dataset from a directory or its manifest path and
/// checks every Dataset invariant.
inline Dataset load_dataset(const std::filesystem::path& path) {
  const auto manifest = manifest_path(path);
  const auto dir = manifest.parent_path();
  const auto kv = KeyValueFile::read(manifest);
  if (kv.require("format") != kDatasetFormat) throw DataError(manifest.string() + ": not a dataset manifest");
  if (kv.require_number<std::size_t>("spectral_bands") != kSpectralBands)
    throw DataError("dataset spectral_bands must be " + std::to_string(kSpectralBands));
  const auto dim = kv.require_number<std::size_t>("embedding_dim");
  const auto object_lines = kv.all("object");
  if (object_lines.empty()) throw DataError(manifest.string() + ": manifest lists no objects");
  if (kv.require_number<std::size_t>("object_count") != object_lines.size())
    throw DataError(manifest.string() + ": object_count disagrees with the object table");

  std::vector<Material> classes;
  for (const auto& c : split(kv.require("classes"), ',')) classes.push_back(parse_material(c));

  std::vector<ObjectRecord> objects;
  std::vector<detail::RowBlock> spectral_blocks, embedding_blocks;
  for (const auto& line : object_lines) {
    std::istringstream in(line);
    std::string id, material, tag, ns, ne, extra;
    if (!(in >> id >> material >> tag >> ns >> ne) || (in >> extra))
      throw DataError("malformed object line '" + line + "'");
    ObjectRecord o;
    o.object_id = id;
    o.material = parse_material(material);
    o.split = parse_split(tag);
    const auto n_spec = parse_number<std::size_t>(ns, "spectral rows of " + id);
    const auto n_emb = parse_number<std::size_t>(ne, "embedding rows of " + id);
    if (n_spec != n_emb)
      throw DataError("object '" + id + "': " + ns + " spectral samples but " + ne + " image embeddings");
    spectral_blocks.push_back({id, n_spec});
    embedding_blocks.push_back({id, n_emb});
    objects.push_back(std::move(o));
  }
  auto spectra = detail::slice_rows(read_bytes(dir / kv.require("spectral_file")), kSpectralBands,
                                    spectral_blocks, "spectral");
  auto embeddings =
      detail::slice_rows(read_bytes(dir / kv.require("embedding_file")), dim, embedding_blocks, "embedding");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    objects[i].spectra = std::move(spectra[i]);
    objects[i].embeddings = std::move(embeddings[i]);
  }
  return Dataset(kv.require("name"), kv.require("extractor_id"), std::move(classes), std::move(objects));
}

/// Embedding rows per object as emitted by the feature extractor.
struct EmbeddingSet {
  std::string extractor_id;
  std::size_t dim = 0;
  std::vector<std::string> object_ids;
  std::map<std::string, nn::Matrix<float>> rows;
};

inline EmbeddingSet load_embedding_set(const std::filesystem::path& manifest) {
  const auto kv = KeyValueFile::read(manifest);
  if (kv.require("format") != kEmbeddingFormat) throw DataError(manifest.string() + ": not an embedding manifest");
  EmbeddingSet set;
  set.extractor_id = kv.require("extractor_id");
  set.dim = kv.require_number<std::size_t>("dim");
  if (set.dim == 0) throw DataError("embedding dimension is zero");
  std::vector<detail::RowBlock> blocks;
  for (const auto& line : kv.all("object")) {
    const auto fields = split(line, ' ');
    if (fields.size() != 2) throw DataError("malformed embedding object line '" + line + "'");
    blocks.push_back({fields[0], parse_number<std::size_t>(fields[1], "rows of " + fields[0])});
    set.object_ids.push_back(fields[0]);
  }
  if (blocks.empty()) throw DataError(manifest.string() + ": manifest lists no objects");
  auto mats = detail::slice_rows(read_bytes(manifest.parent_path() / kv.require("matrix_file")), set.dim, blocks,
                                 "embedding");
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (!set.rows.emplace(blocks[i].object_id, std::move(mats[i])).second)
      throw DataError("duplicate object id '" + blocks[i].object_id + "' in embedding manifest");
  }
  return set;
}

inline void save_embedding_set(const EmbeddingSet& set, const std::filesystem::path& manifest) {
  KeyValueFile kv;
  kv.add("format", std::string(kEmbeddingFormat));
  kv.add("extractor_id", set.extractor_id);
  kv.add("dim", std::to_string(set.dim));
  const auto matrix = manifest.stem().string() + ".f32";
  kv.add("matrix_file", matrix);
  std::vector<char> bytes;
  for (const auto& id : set.object_ids) {
    const auto& m = set.rows.at(id);
    kv.add("object", id + " " + std::to_string(m.rows()));
    const auto b = detail::encode_rows(m);
    bytes.insert(bytes.end(), b.begin(), b.end());
  }
  write_bytes(manifest.parent_path() / matrix, bytes);
  kv.write(manifest);
}

/// Builds a dataset from the distribution's text form:
///   metadata csv  `object_id,material,split` (header required)
///   spectra csv   `object_id,material,<331 reflectance values>` per
///                 measurement (header optional)
///   embeddings    an extractor manifest (see above)
/// Objects keep metadata order; measurements keep file order.
inline Dataset import_csv(const std::filesystem::path& spectra_csv, const std::filesystem::path& metadata_csv,
                          const std::filesystem::path& embeddings_manifest, std::string name) {
  const auto meta_lines = detail::read_lines(metadata_csv);
  if (meta_lines.size() < 2) throw DataError(metadata_csv.string() + ": no object rows");
  std::vector<ObjectRecord> objects;
  std::map<std::string, std::size_t> index;
  std::set<Material> present;
  for (std::size_t i = 1; i < meta_lines.size(); ++i) {
    const auto f = split(meta_lines[i], ',');
    if (f.size() != 3) throw DataError(metadata_csv.string() + ": line " + std::to_string(i + 1) + " needs 3 fields");
    ObjectRecord o;
    o.object_id = f[0];
    o.material = parse_material(f[1]);
    o.split = parse_split(f[2]);
    if (!index.emplace(o.object_id, objects.size()).second)
      throw DataError("duplicate object id '" + o.object_id + "'");
    present.insert(o.material);
    objects.push_back(std::move(o));
  }

  std::vector<std::vector<float>> spectra(objects.size());
  const auto spec_lines = detail::read_lines(spectra_csv);
  for (std::size_t i = 0; i < spec_lines.size(); ++i) {
    const auto f = split(spec_lines[i], ',');
    if (i == 0 && !f.empty() && f[0] == "object_id") continue;
    if (f.size() < 2) throw DataError(spectra_csv.string() + ": line " + std::to_string(i + 1) + " is malformed");
    const auto it = index.find(f[0]);
    if (it == index.end()) throw DataError("spectra reference unknown object '" + f[0] + "'");
    auto& o = objects[it->second];
    if (parse_material(f[1]) != o.material)
      throw DataError("object '" + o.object_id + "': spectral row material '" + f[1] + "' disagrees with metadata");
    if (f.size() - 2 != kSpectralBands)
      throw DataError("object '" + o.object_id + "': spectral row has " + std::to_string(f.size() - 2) +
                      " values, expected " + std::to_string(kSpectralBands));
    auto& dst = spectra[it->second];
    for (std::size_t k = 2; k < f.size(); ++k) dst.push_back(parse_number<float>(f[k], "reflectance"));
  }

  const auto emb = load_embedding_set(embeddings_manifest);
  for (std::size_t i = 0; i < objects.size(); ++i) {
    auto& o = objects[i];
    if (spectra[i].empty()) throw DataError("object '" + o.object_id + "': no spectral measurements");
    const std::size_t rows = spectra[i].size() / kSpectralBands;
    o.spectra = nn::Matrix<float>(rows, kSpectralBands, std::move(spectra[i]));
    const auto it = emb.rows.find(o.object_id);
    if (it == emb.rows.end()) throw DataError("object '" + o.object_id + "': no embeddings");
    o.embeddings = it->second;
  }
  for (const auto& id : emb.object_ids)
    if (!index.contains(id)) throw DataError("embeddings reference unknown object '" + id + "'");
  return Dataset(std::move(name), emb.extractor_id, std::vector<Material>(present.begin(), present.end()),
                 std::move(objects));
}

/// Writes `metadata.csv`, `spectra.csv`, and `embeddings.manifest` such that
/// import_csv reproduces the dataset bit-exactly.
inline void export_csv(const Dataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream meta(dir / "metadata.csv", std::ios::binary);
    meta << "object_id,material,split\n";
    for (const auto& o : dataset.objects())
      meta << o.object_id << ',' << name_of(o.material) << ',' << name_of(o.split) << '\n';
  }
  {
    std::ofstream spec(dir / "spectra.csv", std::ios::binary);
    spec << "object_id,material";
    for (int nm = kFirstWavelengthNm; nm <= kLastWavelengthNm; ++nm) spec << ",nm" << nm;
    spec << '\n';
    for (const auto& o : dataset.objects())
      for (std::size_t r = 0; r < o.spectra.rows(); ++r) {
        spec << o.object_id << ',' << name_of(o.material);
        for (float v : o.spectra.row(r)) spec << ',' << format_number(v);
        spec << '\n';
      }
  }
  EmbeddingSet set;
  set.extractor_id = dataset.extractor_id();
  set.dim = dataset.embedding_dim();
  for (const auto& o : dataset.objects()) {
    set.object_ids.push_back(o.object_id);
    set.rows.emplace(o.object_id, o.embeddings);
  }
  save_embedding_set(set, dir / "embeddings.manifest");
}

}  // namespace specvis::data
