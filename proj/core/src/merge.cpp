#include "spal/merge.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include "spal/distribution.hpp"

namespace spal {

double merge_distance(MergeCriterion criterion, std::span<const double> p, std::span<const double> q) {
  return criterion == MergeCriterion::kJensenShannon ? js_distance(p, q) : euclidean_distance(p, q);
}

MergeResult adaptive_merge_detailed(const Segmentation& base, const ProbMap& probs, const MergeConfig& cfg) {
  if (!(base.extent() == probs.extent())) throw InvariantError("adaptive_merge: dimension mismatch");
  return adaptive_merge_detailed(base, build_region_graph(base), region_stats(base, probs), cfg);
}

MergeResult adaptive_merge_detailed(const Segmentation& base, const RegionGraph& graph,
                                    const std::vector<RegionStats>& stats, const MergeConfig& cfg) {
  if (!(cfg.epsilon >= 0.0)) throw InvariantError("adaptive_merge: epsilon must be >= 0");
  if (!(cfg.merge_fraction > 0.0 && cfg.merge_fraction <= 1.0)) {
    throw InvariantError("adaptive_merge: merge_fraction must be in (0, 1]");
  }
  const std::uint32_t num_regions = base.num_regions();
  if (graph.num_regions() != num_regions || stats.size() != num_regions) {
    throw InvariantError("adaptive_merge: graph/stats do not match segmentation");
  }

  std::vector<RegionId> order(num_regions);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](RegionId a, RegionId b) {
    if (stats[a].uncertainty != stats[b].uncertainty) return stats[a].uncertainty > stats[b].uncertainty;
    return a < b;
  });
  const auto eligible = static_cast<std::size_t>(std::ceil(cfg.merge_fraction * num_regions - 1e-9));
  order.resize(std::min<std::size_t>(std::max<std::size_t>(eligible, 1), num_regions));

  constexpr RegionId kUnexplored = std::numeric_limits<RegionId>::max();
  std::vector<RegionId> group(num_regions, kUnexplored);
  std::vector<MergeEvent> events;
  std::deque<RegionId> frontier;

  for (RegionId root : order) {
    if (group[root] != kUnexplored) continue;
    group[root] = root;
    const auto& reference = stats[root].mean_prob;
    frontier.assign(1, root);
    while (!frontier.empty()) {
      RegionId current;
      if (cfg.exploration == Exploration::kBreadthFirst) {
        current = frontier.front();
        frontier.pop_front();
      } else {
        current = frontier.back();
        frontier.pop_back();
      }
      const auto neighbors = graph.neighbors(current);
      // Depth-first pushes in reverse so neighbors are expanded in ascending order.
      auto visit = [&](RegionId n) {
        if (group[n] != kUnexplored) return;
        if (!(merge_distance(cfg.criterion, reference, stats[n].mean_prob) < cfg.epsilon)) return;
        group[n] = root;
        events.push_back({root, n});
        frontier.push_back(n);
      };
      if (cfg.exploration == Exploration::kBreadthFirst) {
        for (RegionId n : neighbors) visit(n);
      } else {
        for (auto it = neighbors.rbegin(); it != neighbors.rend(); ++it) visit(*it);
      }
    }
  }
  for (RegionId r = 0; r < num_regions; ++r) {
    if (group[r] == kUnexplored) group[r] = r;
  }

  // Name each group by its smallest member, then compact in that order.
  std::vector<RegionId> smallest(num_regions, kUnexplored);
  for (RegionId r = 0; r < num_regions; ++r) smallest[group[r]] = std::min(smallest[group[r]], r);
  std::vector<RegionId> compact(num_regions, kUnexplored);
  RegionId next = 0;
  for (RegionId r = 0; r < num_regions; ++r) {
    if (smallest[group[r]] == r) compact[group[r]] = next++;
  }
  MergeResult result;
  result.membership.resize(num_regions);
  for (RegionId r = 0; r < num_regions; ++r) result.membership[r] = compact[group[r]];
  std::vector<RegionId> ids(base.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = result.membership[base[i]];
  result.merged = Segmentation(base.extent(), std::move(ids));
  result.events = std::move(events);
  return result;
}

Segmentation adaptive_merge(const Segmentation& base, const ProbMap& probs, const MergeConfig& cfg) {
  return adaptive_merge_detailed(base, probs, cfg).merged;
}

}  // namespace spal
