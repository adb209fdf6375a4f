#pragma once

#include <vector>

#include "spal/raster.hpp"
#include "spal/region.hpp"

namespace spal {

enum class MergeCriterion { kJensenShannon, kEuclidean };
enum class Exploration { kBreadthFirst, kDepthFirst };

struct MergeConfig {
  /// A neighbor joins a root only when distance(root, neighbor) < epsilon.
  double epsilon = 0.1;
  /// Fraction of regions, taken in descending uncertainty, eligible as roots.
  double merge_fraction = 1.0;
  MergeCriterion criterion = MergeCriterion::kJensenShannon;
  Exploration exploration = Exploration::kBreadthFirst;
};

/// One absorption: `absorbed` joined the group grown from `root`. Both ids
/// refer to the input segmentation.
struct MergeEvent {
  RegionId root = 0;
  RegionId absorbed = 0;
  friend bool operator==(const MergeEvent&, const MergeEvent&) = default;
};

struct MergeResult {
  Segmentation merged;
  /// Input region id -> output region id.
  std::vector<RegionId> membership;
  std::vector<MergeEvent> events;
};

/// Grows merged regions from roots visited in descending uncertainty (ties to
/// the lower id). Each root's own mean distribution is the fixed reference
/// for every candidate reached from it. Output ids are ordered by the smallest
/// input id in each group, so a merge that absorbs nothing is the identity.
MergeResult adaptive_merge_detailed(const Segmentation& base, const ProbMap& probs, const MergeConfig& cfg);

/// As above, reusing precomputed graph and statistics of `base`.
MergeResult adaptive_merge_detailed(const Segmentation& base, const RegionGraph& graph,
                                    const std::vector<RegionStats>& stats, const MergeConfig& cfg);

Segmentation adaptive_merge(const Segmentation& base, const ProbMap& probs, const MergeConfig& cfg);

/// Distance under the configured criterion.
double merge_distance(MergeCriterion criterion, std::span<const double> p, std::span<const double> q);

}  // namespace spal
