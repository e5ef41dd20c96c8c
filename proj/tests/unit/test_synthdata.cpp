#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

#include "gml/error.hpp"
#include "gml/synthdata.hpp"

using namespace gml;
namespace fs = std::filesystem;

namespace {

SiteGenSpec spec(const std::string& id, int n) { return {id, n, 2.0, 4.0, 1.5, 0.8, 1.0, 0.0}; }

Dataset gen(const SiteGenSpec& s, std::uint64_t seed = 1, std::int64_t extent = 16) {
  Rng rng = rng_derive(seed, "data/site/" + s.site_id);
  return generate_site(s, extent, rng);
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::Io;
}

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "gml_unit";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(GenerateSite, Deterministic) {
  EXPECT_EQ(gen(spec("s", 6)), gen(spec("s", 6)));
  EXPECT_NE(gen(spec("s", 6), 1), gen(spec("s", 6), 2));
}

TEST(GenerateSite, ShapesIdsAndStandardization) {
  const Dataset d = gen(spec("site_x", 5));
  ASSERT_EQ(d.size(), 5u);
  EXPECT_EQ(d.site_id, "site_x");
  EXPECT_EQ(d.cases[3].case_id, "site_x-003");
  for (const Case& c : d.cases) {
    EXPECT_EQ(c.image.shape(), (Shape{16, 16}));
    EXPECT_TRUE(c.mask.is_mask());
    EXPECT_GT(c.mask.sum(), 0.0);
    const double mean = c.image.sum() / static_cast<double>(c.image.size());
    double var = 0.0;
    for (double v : c.image) var += (v - mean) * (v - mean);
    EXPECT_NEAR(mean, 0.0, 1e-12);
    EXPECT_NEAR(var / static_cast<double>(c.image.size()), 1.0, 1e-12);
  }
}

TEST(GenerateSite, TumorFreeFractionOne) {
  SiteGenSpec s = spec("free", 8);
  s.tumor_free_fraction = 1.0;
  for (const Case& c : gen(s).cases) EXPECT_EQ(c.mask.sum(), 0.0);
}

TEST(GenerateSite, FixedRadiusCellCounts) {
  SiteGenSpec s{"r3", 100, 3.0, 3.0, 1.0, 0.5, 1.0, 0.0};
  const double lo = std::numbers::pi * 2.5 * 2.5, hi = std::numbers::pi * 3.5 * 3.5;
  for (const Case& c : gen(s, 5, 32).cases) {
    EXPECT_GE(c.mask.sum(), lo);
    EXPECT_LE(c.mask.sum(), hi);
  }
}

TEST(GenerateSite, DistinctProfilesAreDistinguishable) {
  auto masked_means = [](const Dataset& d) {
    std::vector<double> out;
    for (const Case& c : d.cases) {
      double s = 0.0;
      for (std::size_t i = 0; i < c.mask.size(); ++i) s += c.image[i] * c.mask[i];
      out.push_back(s / c.mask.sum());
    }
    return out;
  };
  auto stats = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - m) * (x - m);
    return std::pair{m, var / static_cast<double>(v.size() - 1)};
  };
  const auto [ma, va] = stats(masked_means(gen({"a", 50, 2.0, 4.0, 1.0, 1.2, 1.0, 0.0}, 3, 32)));
  const auto [mb, vb] = stats(masked_means(gen({"b", 50, 2.0, 4.0, 2.5, 0.6, 1.0, 0.0}, 3, 32)));
  const double pooled_se = std::sqrt(va / 50 + vb / 50);
  EXPECT_GT(std::abs(ma - mb), 3 * pooled_se);
}

TEST(GenerateSite, InvalidSpecs) {
  EXPECT_EQ(code_of([] { gen({"big", 2, 2.0, 8.0, 1, 1, 1, 0}, 1, 16); }), ErrorCode::InvalidSpec);
  EXPECT_EQ(code_of([] { gen({"x", 2, 3.0, 2.0, 1, 1, 1, 0}); }), ErrorCode::InvalidSpec);
  EXPECT_EQ(code_of([] { gen(spec("x", 2), 1, 4); }), ErrorCode::InvalidSpec);
}

TEST(Split, SizesFollowRoundHalfUp) {
  EXPECT_EQ(split_sizes(10, {}), (SplitSizes{7, 1, 2}));
  EXPECT_EQ(split_sizes(55, {}), (SplitSizes{39, 6, 10}));
  EXPECT_EQ(split_sizes(16, {}), (SplitSizes{11, 2, 3}));
  EXPECT_EQ(split_sizes(28, {}), (SplitSizes{20, 3, 5}));
  EXPECT_EQ(split_sizes(36, {}), (SplitSizes{25, 4, 7}));
}

TEST(Split, Errors) {
  EXPECT_EQ(code_of([] { split_sizes(10, {1.0, 0.0, 0.0}); }), ErrorCode::SplitTooSmall);
  EXPECT_EQ(code_of([] { split_sizes(2, {}); }), ErrorCode::SplitTooSmall);
  EXPECT_EQ(code_of([] { split_sizes(3, {0.4, 0.4, 0.1}); }), ErrorCode::InvalidSpec);
}

TEST(Split, DisjointAndExhaustive) {
  const Dataset d = gen(spec("s", 20));
  Rng rng = rng_derive(1, "split/site/s");
  const DatasetSplit sp = split_dataset(d, {}, rng);
  EXPECT_EQ(sp.train.size(), 14u);
  EXPECT_EQ(sp.val.size(), 2u);
  EXPECT_EQ(sp.test.size(), 4u);
  std::set<std::string> ids;
  for (const Dataset* part : {&sp.train, &sp.val, &sp.test})
    for (const Case& c : part->cases) EXPECT_TRUE(ids.insert(c.case_id).second);
  EXPECT_EQ(ids.size(), 20u);
}

TEST(Concat, JoinsIdsAndCases) {
  const std::vector<Dataset> parts{gen(spec("a", 2)), gen(spec("b", 3))};
  const Dataset all = concat(parts);
  EXPECT_EQ(all.site_id, "a+b");
  EXPECT_EQ(all.size(), 5u);
  EXPECT_EQ(all.cases[2], parts[1].cases[0]);
}

TEST(DatasetFile, RoundTripAndSize) {
  const Dataset d = gen(spec("site_rt", 4));
  const auto bytes = dataset_encode(d);
  std::size_t expected = 4 + 2 + (2 + 7) + 4 + 1 + 2 * 4;
  for (const Case& c : d.cases) expected += 2 + c.case_id.size() + 9 * c.image.size();
  EXPECT_EQ(bytes.size(), expected);
  EXPECT_EQ(dataset_file_size(d), expected);
  EXPECT_EQ(dataset_decode(bytes), d);

  const fs::path p = temp_path("rt.gmld");
  dataset_write(d, p);
  EXPECT_EQ(fs::file_size(p), expected);
  EXPECT_EQ(dataset_read(p), d);
}

TEST(DatasetFile, EmptyDatasetRoundTrips) {
  const Dataset d{"empty", {}};
  EXPECT_EQ(dataset_decode(dataset_encode(d)), d);
}

TEST(DatasetFile, CorruptInputs) {
  const auto bytes = dataset_encode(gen(spec("c", 2)));
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  EXPECT_EQ(code_of([&] { dataset_decode(truncated); }), ErrorCode::CorruptDataset);
  auto magic = bytes;
  magic[1] = 'X';
  EXPECT_EQ(code_of([&] { dataset_decode(magic); }), ErrorCode::CorruptDataset);
  auto version = bytes;
  version[4] = 2;
  EXPECT_EQ(code_of([&] { dataset_decode(version); }), ErrorCode::CorruptDataset);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_EQ(code_of([&] { dataset_decode(trailing); }), ErrorCode::CorruptDataset);

  const fs::path p = temp_path("trunc.gmld");
  std::ofstream(p, std::ios::binary).write(reinterpret_cast<const char*>(truncated.data()),
                                           static_cast<std::streamsize>(truncated.size()));
  EXPECT_EQ(code_of([&] { dataset_read(p); }), ErrorCode::CorruptDataset);
}

TEST(DatasetFile, NonBinaryMaskRejected) {
  auto bytes = dataset_encode(gen(spec("m", 1)));
  bytes.back() = 7;  // last mask cell
  EXPECT_EQ(code_of([&] { dataset_decode(bytes); }), ErrorCode::CorruptDataset);
}
