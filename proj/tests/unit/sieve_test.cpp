#include <cmath>

#include <gtest/gtest.h>

#include "spal/sieve.hpp"
#include "test_support.hpp"

namespace spal {
namespace {

using testing::TempDir;

// Two-class map whose class-0 plane holds `conf`.
ProbMap confidence_map(const std::vector<float>& conf) {
  std::vector<float> planes(conf);
  for (float c : conf) planes.push_back(1.0f - c);
  return ProbMap({static_cast<std::uint32_t>(conf.size()), 1}, 2, std::move(planes));
}

std::vector<PixelIndex> all_pixels(std::size_t n) {
  std::vector<PixelIndex> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<PixelIndex>(i);
  return p;
}

TEST(KneedleTest, SqrtCurveKneeAtQuarter) {
  std::vector<double> y(101);
  for (int i = 0; i <= 100; ++i) y[i] = std::sqrt(i / 100.0);
  const auto knee = kneedle(y);
  ASSERT_TRUE(knee);
  EXPECT_NEAR(static_cast<double>(*knee), 25.0, 1.0);
}

TEST(KneedleTest, DegenerateCurvesHaveNoKnee) {
  EXPECT_FALSE(kneedle(std::vector<double>(10, 0.4)));
  std::vector<double> ramp(50);
  for (int i = 0; i < 50; ++i) ramp[i] = i / 49.0;
  EXPECT_FALSE(kneedle(ramp));
  // Convex curve stays under the diagonal.
  EXPECT_FALSE(kneedle(std::vector<double>{0, 0.01, 0.04, 0.09, 0.16, 1.0}));
}

TEST(KneedleTest, InvalidInputThrows) {
  EXPECT_THROW(kneedle(std::vector<double>{0.3, 0.2, 0.5}), InvariantError);
  EXPECT_THROW(kneedle(std::vector<double>{0.1, 0.2}), InvariantError);
}

TEST(SieveSuperpixelTest, StepCurveKeepsHighConfidencePixels) {
  const ProbMap probs = confidence_map({0.9f, 0.01f, 0.95f, 0.02f, 0.92f, 0.03f});
  const SieveResult r = sieve_superpixel(all_pixels(6), 0, probs, {6, 5});
  ASSERT_FALSE(r.keep_all());
  EXPECT_FLOAT_EQ(*r.threshold, 0.9f);
  EXPECT_EQ(r.kept_pixels, (std::vector<PixelIndex>{0, 2, 4}));
}

TEST(SieveSuperpixelTest, FlatAndSmallRegionsKeepAll) {
  const ProbMap flat = confidence_map(std::vector<float>(8, 0.8f));
  EXPECT_TRUE(sieve_superpixel(all_pixels(8), 0, flat, {5, 5}).keep_all());
  EXPECT_EQ(sieve_superpixel(all_pixels(8), 0, flat, {5, 5}).kept_pixels.size(), 8u);

  const ProbMap one = confidence_map({0.3f});
  const auto r = sieve_superpixel(all_pixels(1), 0, one, {20, 5});
  EXPECT_TRUE(r.keep_all());
  EXPECT_EQ(r.kept_pixels.size(), 1u);

  EXPECT_THROW(sieve_superpixel({}, 0, one, {}), InvariantError);
  EXPECT_THROW(sieve_superpixel(all_pixels(1), 2, one, {}), InvariantError);
}

TEST(SieveSuperpixelTest, KeptSetNonEmptyAndShiftInvariant) {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 5 + rng.below(60);
    std::vector<float> conf(n);
    for (auto& c : conf) c = static_cast<float>(0.1 + 0.6 * rng.uniform());
    std::vector<float> shifted(conf);
    for (auto& c : shifted) c += 0.25f;
    const auto a = sieve_superpixel(all_pixels(n), 0, confidence_map(conf), {20, 5});
    const auto b = sieve_superpixel(all_pixels(n), 0, confidence_map(shifted), {20, 5});
    EXPECT_FALSE(a.kept_pixels.empty());
    // float rounding of the shift can nudge a tie; compare with slack of one pixel
    EXPECT_LE(std::max(a.kept_pixels.size(), b.kept_pixels.size()) -
                  std::min(a.kept_pixels.size(), b.kept_pixels.size()),
              1u);
  }
}

TEST(SieveSuperpixelTest, SubsampleUsesFloorIndices) {
  // 10 sorted confidences, m = 4 samples at indices 0, 3, 6, 9.
  const std::vector<float> conf{0.10f, 0.11f, 0.12f, 0.13f, 0.80f, 0.81f, 0.82f, 0.83f, 0.84f, 0.85f};
  const auto r = sieve_superpixel(all_pixels(10), 0, confidence_map(conf), {4, 5});
  ASSERT_FALSE(r.keep_all());
  // Samples {0.10, 0.13, 0.82, 0.85}: knee at 0.82.
  EXPECT_FLOAT_EQ(*r.threshold, 0.82f);
  EXPECT_EQ(r.kept_pixels, (std::vector<PixelIndex>{6, 7, 8, 9}));
}

QueryRecord answered(std::uint32_t id, ImageId image, std::vector<PixelIndex> pixels, ClassId label) {
  QueryRecord q;
  q.query_id = id;
  q.image_id = image;
  q.pixels = std::move(pixels);
  q.status = QueryStatus::kAnswered;
  q.answer = label;
  return q;
}

TEST(SievedDatasetTest, UnionOfKeptPixelsOrdered) {
  const ProbMap probs = confidence_map({0.9f, 0.01f, 0.95f, 0.02f, 0.92f, 0.03f, 0.5f, 0.5f});
  std::vector<QueryRecord> queries{answered(0, 1, {6, 7}, 1), answered(1, 0, {0, 1, 2, 3, 4, 5}, 0)};
  QueryRecord skipped;
  skipped.image_id = 0;
  skipped.pixels = {7};
  skipped.status = QueryStatus::kSkipped;
  queries.push_back(skipped);
  const ProbLookup lookup = [&](ImageId) -> const ProbMap& { return probs; };

  const SievedDataset sieved = build_sieved_dataset(queries, lookup, {6, 5});
  EXPECT_EQ(sieved.records, (std::vector<SievedRecord>{{0, 0, 0}, {0, 2, 0}, {0, 4, 0}, {1, 6, 1}, {1, 7, 1}}));

  const SievedDataset full = build_sieved_dataset(queries, lookup, {6, 5}, false);
  EXPECT_EQ(full.size(), 8u);
  EXPECT_TRUE(std::is_sorted(full.records.begin(), full.records.end()));
}

TEST(SievedDatasetTest, ConflictingLabelsThrow) {
  const ProbMap probs = confidence_map({0.5f, 0.5f});
  const ProbLookup lookup = [&](ImageId) -> const ProbMap& { return probs; };
  std::vector<QueryRecord> queries{answered(0, 0, {0, 1}, 0), answered(1, 0, {1}, 1)};
  EXPECT_THROW(build_sieved_dataset(queries, lookup, {}, false), InvariantError);
}

TEST(SievedDatasetTest, FileRoundTripAndSize) {
  TempDir dir;
  SievedDataset data;
  data.records = {{0, 3, 1}, {2, 9, 0}, {70000, 123456, 300}};
  save_sieved_dataset(data, dir / "d.svd1");
  EXPECT_EQ(std::filesystem::file_size(dir / "d.svd1"), 8u + 3u * 10u);
  EXPECT_EQ(load_sieved_dataset(dir / "d.svd1"), data);
  std::filesystem::resize_file(dir / "d.svd1", 20);
  EXPECT_THROW(load_sieved_dataset(dir / "d.svd1"), FormatError);
}

}  // namespace
}  // namespace spal
