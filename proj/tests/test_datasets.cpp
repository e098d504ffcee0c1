#include <gtest/gtest.h>

#include <fstream>
#include <numeric>
#include <set>

#include "specvis/datasets/io.hpp"
#include "specvis/datasets/splits.hpp"
#include "specvis/evaluation/synthetic.hpp"
#include "support/checks.hpp"

using namespace specvis;
using namespace specvis::data;

namespace {

Dataset small_corpus(std::size_t per_material = 2, std::size_t samples = 3, std::size_t heldout = 0) {
  eval::SyntheticCorpusSpec s;
  s.objects_per_material = per_material;
  s.samples_per_object = samples;
  s.embedding_dim = 6;
  s.heldout_per_material = heldout;
  s.seed = 5;
  return eval::generate_synthetic_corpus(s);
}

ObjectRecord record(std::string id, Material m, std::size_t n, std::size_t dim = 4) {
  ObjectRecord o;
  o.object_id = std::move(id);
  o.material = m;
  o.spectra = nn::Matrix<float>(n, kSpectralBands, 0.5f);
  o.embeddings = nn::Matrix<float>(n, dim, 1.0f);
  return o;
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

}  // namespace

// ---- materials --------------------------------------------------------------

TEST(Material, AlphabeticalOrderAndRoundTrip) {
  EXPECT_TRUE(std::is_sorted(kMaterialNames.begin(), kMaterialNames.end()));
  for (Material m : kAllMaterials) EXPECT_EQ(parse_material(name_of(m)), m);
  EXPECT_THROW(parse_material("rubber"), DataError);
}

// ---- difference quotient ----------------------------------------------------

TEST(DifferenceQuotient, HandExample) {
  const double raw[] = {0, 1, 4, 9};
  EXPECT_EQ(difference_quotient<double>(raw), (std::vector<double>{1, 2, 4, 5}));
}

TEST(DifferenceQuotient, ConstantSpectrumIsZero) {
  const std::vector<double> raw(kSpectralBands, 0.37);
  for (double v : difference_quotient<double>(raw)) EXPECT_EQ(v, 0.0);
}

TEST(DifferenceQuotient, CombinedVectorHas662Entries) {
  SpectralSample<float> s(std::vector<float>(kSpectralBands, 0.5f));
  EXPECT_EQ(s.combined().size(), 662u);
  EXPECT_EQ(s.derivative().size(), 331u);
  EXPECT_THROW(SpectralSample<float>(std::vector<float>(330, 0.5f)), DataError);
}

TEST(DifferenceQuotient, IsLinear) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(kSpectralBands), y(kSpectralBands), z(kSpectralBands);
    const double a = standard_normal(rng), b = standard_normal(rng);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = standard_normal(rng);
      y[i] = standard_normal(rng);
      z[i] = a * x[i] + b * y[i];
    }
    const auto dx = difference_quotient<double>(x), dy = difference_quotient<double>(y),
               dz = difference_quotient<double>(z);
    for (std::size_t i = 0; i < x.size(); ++i) ASSERT_NEAR(dz[i], a * dx[i] + b * dy[i], 1e-9);
  }
}

TEST(DifferenceQuotient, NonFiniteInputIsDataError) {
  const double raw[] = {0, std::nan(""), 1};
  EXPECT_THROW(difference_quotient<double>(raw), DataError);
  const double inf[] = {0, 1, INFINITY};
  EXPECT_THROW(difference_quotient<double>(inf), DataError);
}

// ---- pairing ----------------------------------------------------------------

TEST(Pairing, ByIndexPreservesOrder) {
  const auto o = record("a", Material::foam, 100);
  const auto p = pair_samples(o);
  ASSERT_EQ(p.embedding_index.size(), 100u);
  for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(p.embedding_index[i], i);
}

TEST(Pairing, ShuffledIsReproduciblePermutation) {
  const auto o = record("a", Material::foam, 100);
  const auto p1 = pair_samples(o, PairingMode::shuffled, 3);
  const auto p2 = pair_samples(o, PairingMode::shuffled, 3);
  const auto p3 = pair_samples(o, PairingMode::shuffled, 4);
  EXPECT_EQ(p1.embedding_index, p2.embedding_index);
  EXPECT_NE(p1.embedding_index, p3.embedding_index);
  auto sorted = p1.embedding_index;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(sorted[i], i);
}

TEST(Pairing, CountMismatchIsDataError) {
  auto o = record("a", Material::foam, 100);
  o.embeddings = nn::Matrix<float>(99, 4, 1.0f);
  EXPECT_THROW(pair_samples(o), DataError);
}

// ---- dataset invariants -----------------------------------------------------

TEST(Dataset, ValidatesInvariants) {
  const std::vector<Material> cls = {Material::foam, Material::wood};
  EXPECT_NO_THROW(Dataset("d", "x", cls, {record("a", Material::foam, 2), record("b", Material::wood, 2)}));
  EXPECT_THROW(Dataset("d", "x", cls, {}), DataError);
  EXPECT_THROW(Dataset("d", "x", cls, {record("a", Material::foam, 2), record("a", Material::wood, 2)}), DataError);
  EXPECT_THROW(Dataset("d", "x", cls, {record("a", Material::metal, 2)}), DataError);
  EXPECT_THROW(Dataset("d", "x", cls, {record("a b", Material::foam, 2)}), DataError);
  EXPECT_THROW(Dataset("d", "x", cls, {record("a", Material::foam, 2), record("b", Material::wood, 2, 5)}),
               DataError);
  auto nan = record("a", Material::foam, 2);
  nan.spectra(1, 7) = std::nanf("");
  EXPECT_THROW(Dataset("d", "x", cls, {nan}), DataError);
  auto short_emb = record("a", Material::foam, 2);
  short_emb.embeddings = nn::Matrix<float>(1, 4, 1.0f);
  EXPECT_THROW(Dataset("d", "x", cls, {short_emb}), DataError);
}

TEST(Dataset, ErrorNamesTheObject) {
  auto bad = record("metal_cup", Material::foam, 2);
  bad.embeddings = nn::Matrix<float>(1, 4, 1.0f);
  try {
    Dataset("d", "x", {Material::foam}, {bad});
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("metal_cup"), std::string::npos);
  }
}

TEST(Dataset, LabelsFollowClassOrder) {
  const auto ds = small_corpus();
  for (std::size_t i = 0; i < ds.classes().size(); ++i) EXPECT_EQ(ds.label_of(ds.classes()[i]), static_cast<int>(i));
  EXPECT_EQ(ds.total_samples(), 16u * 3u);
}

TEST(Dataset, FeaturesConcatenateRawAndDerivative) {
  const auto ds = small_corpus();
  const std::size_t pick[] = {3};
  const auto f = build_features<double>(ds, pick);
  ASSERT_EQ(f.spectral.cols(), 662u);
  const auto& o = ds.objects()[3];
  const std::vector<double> raw(o.spectra.row(1).begin(), o.spectra.row(1).end());
  const auto dq = difference_quotient<double>(raw);
  for (std::size_t i = 0; i < kSpectralBands; ++i) {
    EXPECT_EQ(f.spectral(1, i), raw[i]);
    EXPECT_EQ(f.spectral(1, kSpectralBands + i), dq[i]);
  }
  EXPECT_EQ(f.labels[0], ds.label_of(o.material));
}

TEST(Dataset, StandardizerCentersAndScales) {
  nn::Matrix<double> x{{1, 10}, {3, 10}, {5, 10}};
  const auto s = Standardizer<double>::fit(x);
  s.apply(x);
  EXPECT_NEAR(x(0, 0) + x(1, 0) + x(2, 0), 0.0, 1e-12);
  for (std::size_t r = 0; r < 3; ++r) EXPECT_TRUE(std::isfinite(x(r, 1)));
}

// ---- splits -----------------------------------------------------------------

TEST(Splits, TwoObjects) {
  const std::size_t objs[] = {4, 9};
  const auto s = make_looo_splits(objs);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].train_objects, (std::vector<std::size_t>{9}));
  EXPECT_EQ(s[1].train_objects, (std::vector<std::size_t>{4}));
}

TEST(Splits, SingleObjectIsConfigError) {
  const std::size_t objs[] = {0};
  EXPECT_THROW(make_looo_splits(objs), ConfigError);
}

TEST(Splits, PartitionPropertyForManySizes) {
  for (std::size_t n : {2u, 3u, 7u, 16u, 104u}) {
    std::vector<std::size_t> objs(n);
    std::iota(objs.begin(), objs.end(), 0);
    const auto splits = make_looo_splits(objs);
    ASSERT_EQ(splits.size(), n);
    std::multiset<std::size_t> tested;
    for (const auto& s : splits) {
      tested.insert(s.test_object);
      EXPECT_EQ(s.train_objects.size(), n - 1);
      std::set<std::size_t> all(s.train_objects.begin(), s.train_objects.end());
      EXPECT_FALSE(all.contains(s.test_object));
      all.insert(s.test_object);
      EXPECT_EQ(all.size(), n);
    }
    EXPECT_EQ(tested, std::multiset<std::size_t>(objs.begin(), objs.end()));
  }
}

TEST(Splits, FullScaleTrainSetSize) {
  // 104 train objects of 100 measurements each -> 103 objects / 10,300 rows.
  std::vector<std::size_t> objs(104);
  std::iota(objs.begin(), objs.end(), 0);
  for (const auto& s : make_looo_splits(objs)) ASSERT_EQ(s.train_objects.size() * 100, 10300u);
}

TEST(Splits, UseOnlyTrainTaggedObjects) {
  const auto ds = small_corpus(3, 2, 1);
  const auto splits = make_looo_splits(ds);
  EXPECT_EQ(splits.size(), 16u);
  for (const auto& s : splits) EXPECT_EQ(ds.objects()[s.test_object].split, SplitTag::train);
}

TEST(Filter, SubsetAndIdempotence) {
  const auto ds = small_corpus();
  const std::set<Material> five = {Material::fabric, Material::metal, Material::paper, Material::plastic,
                                    Material::wood};
  const auto f1 = filter_materials(ds, five);
  EXPECT_EQ(f1.objects().size(), 10u);
  EXPECT_EQ(f1.class_count(), 5u);
  EXPECT_EQ(f1.label_of(Material::fabric), 0);
  const auto f2 = filter_materials(f1, five);
  EXPECT_EQ(f2.content_hash(), f1.content_hash());
  const auto all = filter_materials(ds, parse_material_set("all"));
  EXPECT_EQ(all.content_hash(), ds.content_hash());
}

TEST(Filter, InvalidSubsets) {
  const auto ds = small_corpus();
  EXPECT_THROW(filter_materials(ds, {}), ConfigError);
  const auto f = filter_materials(ds, {Material::foam});
  EXPECT_THROW(filter_materials(f, {Material::metal}), ConfigError);
  EXPECT_THROW(parse_material_set("foam,rubber"), DataError);
}

// ---- canonical files --------------------------------------------------------

TEST(DatasetIo, SaveLoadIsBitExact) {
  support::TempDir dir;
  const auto ds = small_corpus(2, 3, 1);
  save_dataset(ds, dir / "ds");
  const auto back = load_dataset(dir / "ds");
  ASSERT_EQ(back.objects().size(), ds.objects().size());
  for (std::size_t i = 0; i < ds.objects().size(); ++i) {
    const auto &a = ds.objects()[i], &b = back.objects()[i];
    EXPECT_EQ(a.object_id, b.object_id);
    EXPECT_EQ(a.split, b.split);
    EXPECT_EQ(std::memcmp(a.spectra.data().data(), b.spectra.data().data(), a.spectra.size() * 4), 0);
    EXPECT_EQ(std::memcmp(a.embeddings.data().data(), b.embeddings.data().data(), a.embeddings.size() * 4), 0);
  }
  EXPECT_EQ(back.content_hash(), ds.content_hash());
  // Loading by manifest path works too.
  EXPECT_EQ(load_dataset(dir / "ds" / "dataset.manifest").content_hash(), ds.content_hash());
}

TEST(DatasetIo, EmptyManifestIsDataError) {
  support::TempDir dir;
  std::filesystem::create_directories(dir / "ds");
  write_text(dir / "ds" / "dataset.manifest", "");
  EXPECT_THROW(load_dataset(dir / "ds"), DataError);
}

TEST(DatasetIo, TruncatedMatrixFileIsDataError) {
  support::TempDir dir;
  save_dataset(small_corpus(), dir / "ds");
  auto bytes = read_bytes(dir / "ds" / "embeddings.f32");
  bytes.resize(bytes.size() - 4);
  write_bytes(dir / "ds" / "embeddings.f32", bytes);
  EXPECT_THROW(load_dataset(dir / "ds"), DataError);
}

TEST(DatasetIo, CsvRoundTripIsBitExact) {
  support::TempDir dir;
  const auto ds = small_corpus(2, 3, 1);
  save_dataset(ds, dir / "a");
  export_csv(ds, dir / "csv");
  const auto back = import_csv(dir / "csv" / "spectra.csv", dir / "csv" / "metadata.csv",
                               dir / "csv" / "embeddings.manifest", ds.name());
  save_dataset(back, dir / "b");
  for (const char* f : {"dataset.manifest", "spectra.f32", "embeddings.f32"})
    EXPECT_EQ(read_text(dir / "a" / f), read_text(dir / "b" / f)) << f;
}

TEST(DatasetIo, ImportRejectsShortSpectrumNamingObject) {
  support::TempDir dir;
  const auto ds = small_corpus();
  export_csv(ds, dir / "csv");
  // Drop the final value from the first data row of object foam_02.
  auto text = read_text(dir / "csv" / "spectra.csv");
  const auto at = text.find("\nfoam_02,");
  ASSERT_NE(at, std::string::npos);
  const auto eol = text.find('\n', at + 1);
  const auto last_comma = text.rfind(',', eol);
  text.erase(last_comma, eol - last_comma);
  write_text(dir / "csv" / "spectra.csv", text);
  try {
    import_csv(dir / "csv" / "spectra.csv", dir / "csv" / "metadata.csv", dir / "csv" / "embeddings.manifest", "x");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("foam_02"), std::string::npos) << e.what();
  }
}

TEST(DatasetIo, ImportRejectsUnknownMaterialAndDuplicates) {
  support::TempDir dir;
  export_csv(small_corpus(), dir / "csv");
  const auto meta = read_text(dir / "csv" / "metadata.csv");
  auto bad = meta;
  bad.replace(bad.find("foam_01,foam"), 12, "foam_01,rubber");
  write_text(dir / "csv" / "metadata.csv", bad);
  EXPECT_THROW(
      import_csv(dir / "csv" / "spectra.csv", dir / "csv" / "metadata.csv", dir / "csv" / "embeddings.manifest", "x"),
      DataError);
  write_text(dir / "csv" / "metadata.csv", meta + "foam_01,foam,train\n");
  EXPECT_THROW(
      import_csv(dir / "csv" / "spectra.csv", dir / "csv" / "metadata.csv", dir / "csv" / "embeddings.manifest", "x"),
      DataError);
}

TEST(DatasetIo, ImportRejectsMissingEmbeddingRow) {
  support::TempDir dir;
  const auto ds = small_corpus();
  export_csv(ds, dir / "csv");
  auto set = load_embedding_set(dir / "csv" / "embeddings.manifest");
  auto& m = set.rows.at("glass_02");
  m = nn::Matrix<float>(m.rows() - 1, m.cols(), std::vector<float>(m.data().begin(), m.data().end() - m.cols()));
  save_embedding_set(set, dir / "csv" / "embeddings.manifest");
  try {
    import_csv(dir / "csv" / "spectra.csv", dir / "csv" / "metadata.csv", dir / "csv" / "embeddings.manifest", "x");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("glass_02"), std::string::npos) << e.what();
  }
}
