#include <set>

#include <gtest/gtest.h>

#include "spal/distribution.hpp"
#include "spal/merge.hpp"
#include "spal/superpixel.hpp"
#include "test_support.hpp"

namespace spal {
namespace {

RegionStats make_stats(RegionId id, std::vector<double> mean, double uncertainty) {
  RegionStats s;
  s.region_id = id;
  s.pixel_count = 1;
  s.mean_prob = std::move(mean);
  s.uncertainty = uncertainty;
  return s;
}

TEST(AdaptiveMergeTest, ThreeRegionChainFromMostUncertainRoot) {
  const Segmentation seg({3, 1}, {0, 1, 2});
  const auto graph = build_region_graph(seg);
  const std::vector<RegionStats> stats{make_stats(0, {1, 0}, 0.9), make_stats(1, {0.9, 0.1}, 0.5),
                                       make_stats(2, {0, 1}, 0.1)};
  ASSERT_LT(js_distance(stats[0].mean_prob, stats[1].mean_prob), 0.3);
  ASSERT_GE(js_distance(stats[0].mean_prob, stats[2].mean_prob), 0.3);
  MergeConfig cfg;
  cfg.epsilon = 0.3;
  const MergeResult r = adaptive_merge_detailed(seg, graph, stats, cfg);
  EXPECT_EQ(r.merged, Segmentation({3, 1}, {0, 0, 1}));
  EXPECT_EQ(r.events, (std::vector<MergeEvent>{{0, 1}}));
  EXPECT_EQ(r.membership, (std::vector<RegionId>{0, 0, 1}));
}

TEST(AdaptiveMergeTest, RootDistributionStaysFixed) {
  // B is within epsilon of A and C of B, but C is not within epsilon of A.
  const Segmentation seg({3, 1}, {0, 1, 2});
  const std::vector<RegionStats> stats{make_stats(0, {1, 0}, 0.9), make_stats(1, {0.9, 0.1}, 0.5),
                                       make_stats(2, {0.75, 0.25}, 0.1)};
  MergeConfig cfg;
  cfg.epsilon = 0.25;
  ASSERT_LT(js_distance(stats[1].mean_prob, stats[2].mean_prob), cfg.epsilon);
  ASSERT_GE(js_distance(stats[0].mean_prob, stats[2].mean_prob), cfg.epsilon);
  const MergeResult r = adaptive_merge_detailed(seg, build_region_graph(seg), stats, cfg);
  EXPECT_EQ(r.merged.num_regions(), 2u);
  EXPECT_EQ(r.membership[2], 1u);
}

TEST(AdaptiveMergeTest, ZeroEpsilonIsIdentity) {
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const Segmentation seg = testing::random_blocky_segmentation(rng, 16, 16, 4, 12);
    const ProbMap probs = testing::random_prob_map(rng, seg.extent(), 4);
    MergeConfig cfg;
    cfg.epsilon = 0.0;
    const MergeResult r = adaptive_merge_detailed(seg, probs, cfg);
    EXPECT_EQ(r.merged, seg);
    EXPECT_TRUE(r.events.empty());
  }
}

TEST(AdaptiveMergeTest, EpsilonAboveBoundGivesOneRegion) {
  Rng rng(2);
  const Segmentation seg = enforce_connectivity(testing::random_blocky_segmentation(rng, 16, 16, 4, 6));
  const ProbMap probs = testing::random_prob_map(rng, seg.extent(), 3);
  MergeConfig cfg;
  cfg.epsilon = 0.9;
  EXPECT_EQ(adaptive_merge(seg, probs, cfg).num_regions(), 1u);
}

TEST(AdaptiveMergeTest, MergeFractionLimitsRoots) {
  // Uniform predictions: every neighbor qualifies, so only root eligibility matters.
  const Segmentation seg({4, 1}, {0, 1, 2, 3});
  std::vector<RegionStats> stats;
  for (RegionId r = 0; r < 4; ++r) stats.push_back(make_stats(r, {0.5, 0.5}, r == 3 ? 0.9 : 0.1));
  MergeConfig cfg;
  cfg.epsilon = 0.1;
  cfg.merge_fraction = 0.25;
  const MergeResult r = adaptive_merge_detailed(seg, build_region_graph(seg), stats, cfg);
  // Root 3 still grows through its whole connected neighborhood.
  EXPECT_EQ(r.merged.num_regions(), 1u);
  EXPECT_EQ(r.events.front().root, 3u);

  // With root 3 isolated by a dissimilar region, the rest stay unmerged.
  stats[2].mean_prob = {1, 0};
  const MergeResult blocked = adaptive_merge_detailed(seg, build_region_graph(seg), stats, cfg);
  EXPECT_EQ(blocked.merged.num_regions(), 4u);
}

TEST(AdaptiveMergeTest, BreadthAndDepthFirstAgree) {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const Segmentation seg = testing::random_blocky_segmentation(rng, 16, 16, 2, 30);
    const ProbMap probs = testing::random_prob_map(rng, seg.extent(), 3, 0.5);
    MergeConfig bfs;
    bfs.epsilon = 0.05 + 0.3 * rng.uniform();
    MergeConfig dfs = bfs;
    dfs.exploration = Exploration::kDepthFirst;
    EXPECT_EQ(adaptive_merge(seg, probs, bfs), adaptive_merge(seg, probs, dfs));
  }
}

TEST(AdaptiveMergeTest, RegionCountMonotoneInEpsilon) {
  Rng rng(4);
  for (int i = 0; i < 30; ++i) {
    const Segmentation seg = testing::random_blocky_segmentation(rng, 16, 16, 2, 40);
    const ProbMap probs = testing::random_prob_map(rng, seg.extent(), 3, 0.5);
    std::uint32_t previous = seg.num_regions();
    for (double eps : {0.0, 0.05, 0.1, 0.2, 0.4}) {
      MergeConfig cfg;
      cfg.epsilon = eps;
      const auto count = adaptive_merge(seg, probs, cfg).num_regions();
      EXPECT_LE(count, previous);
      previous = count;
    }
  }
}

TEST(AdaptiveMergeTest, OutputIsUnionOfInputRegionsAndTiles) {
  Rng rng(5);
  const Segmentation seg = testing::random_blocky_segmentation(rng, 16, 16, 2, 40);
  const ProbMap probs = testing::random_prob_map(rng, seg.extent(), 3, 0.5);
  MergeConfig cfg;
  cfg.epsilon = 0.2;
  const MergeResult r = adaptive_merge_detailed(seg, probs, cfg);
  ASSERT_EQ(r.merged.size(), seg.size());
  for (std::size_t i = 0; i < seg.size(); ++i) EXPECT_EQ(r.merged[i], r.membership[seg[i]]);
  EXPECT_EQ(r.events.size(), seg.num_regions() - r.merged.num_regions());
}

TEST(AdaptiveMergeTest, EuclideanCriterionUsesL2) {
  const Segmentation seg({2, 1}, {0, 1});
  const std::vector<RegionStats> stats{make_stats(0, {1, 0}, 0.5), make_stats(1, {0.9, 0.1}, 0.1)};
  MergeConfig cfg;
  cfg.criterion = MergeCriterion::kEuclidean;
  cfg.epsilon = 0.15;  // L2 = 0.1414 < 0.15 but JS = 0.19 >= 0.15
  EXPECT_EQ(adaptive_merge_detailed(seg, build_region_graph(seg), stats, cfg).merged.num_regions(), 1u);
  cfg.criterion = MergeCriterion::kJensenShannon;
  EXPECT_EQ(adaptive_merge_detailed(seg, build_region_graph(seg), stats, cfg).merged.num_regions(), 2u);
}

TEST(AdaptiveMergeTest, RejectsBadConfig) {
  const Segmentation seg({2, 1}, {0, 1});
  const ProbMap probs({2, 1}, 2, {0.5f, 0.5f, 0.5f, 0.5f});
  MergeConfig cfg;
  cfg.merge_fraction = 0.0;
  EXPECT_THROW(adaptive_merge(seg, probs, cfg), InvariantError);
  cfg.merge_fraction = 1.0;
  cfg.epsilon = -1;
  EXPECT_THROW(adaptive_merge(seg, probs, cfg), InvariantError);
  EXPECT_THROW(adaptive_merge(seg, ProbMap({1, 1}, 2, {0.5f, 0.5f}), MergeConfig{}), InvariantError);
}

}  // namespace
}  // namespace spal
