#include "spal/region.hpp"

#include <algorithm>

#include "spal/distribution.hpp"

namespace spal {

RegionGraph::RegionGraph(std::vector<std::vector<RegionId>> adjacency) : adjacency_(std::move(adjacency)) {
  for (RegionId r = 0; r < adjacency_.size(); ++r) {
    auto& list = adjacency_[r];
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    if (std::binary_search(list.begin(), list.end(), r)) throw InvariantError("RegionGraph: self-loop");
    for (RegionId n : list) {
      if (n >= adjacency_.size()) throw InvariantError("RegionGraph: neighbor out of range");
    }
  }
  for (RegionId r = 0; r < adjacency_.size(); ++r) {
    for (RegionId n : adjacency_[r]) {
      if (!std::binary_search(adjacency_[n].begin(), adjacency_[n].end(), r)) {
        throw InvariantError("RegionGraph: adjacency is not symmetric");
      }
    }
  }
}

std::size_t RegionGraph::num_edges() const {
  std::size_t degree_sum = 0;
  for (const auto& list : adjacency_) degree_sum += list.size();
  return degree_sum / 2;
}

bool RegionGraph::adjacent(RegionId a, RegionId b) const {
  return std::binary_search(adjacency_[a].begin(), adjacency_[a].end(), b);
}

RegionGraph build_region_graph(const Segmentation& seg) {
  std::vector<std::vector<RegionId>> adjacency(seg.num_regions());
  const Extent extent = seg.extent();
  for (std::size_t i = 0; i < seg.size(); ++i) {
    const RegionId a = seg[i];
    // Forward neighbors only; each edge is recorded from both ends below.
    for_each_neighbor(extent, i, [&](std::size_t j) {
      if (j <= i) return;
      const RegionId b = seg[j];
      if (a == b) return;
      adjacency[a].push_back(b);
      adjacency[b].push_back(a);
    });
  }
  return RegionGraph(std::move(adjacency));
}

std::vector<RegionStats> region_stats(const Segmentation& seg, const ProbMap& probs) {
  if (!(seg.extent() == probs.extent())) throw InvariantError("region_stats: dimension mismatch");
  const std::uint32_t num_classes = probs.num_classes();
  const std::uint32_t num_regions = seg.num_regions();
  std::vector<RegionStats> stats(num_regions);
  std::vector<std::vector<std::size_t>> votes(num_regions, std::vector<std::size_t>(num_classes, 0));
  for (RegionId r = 0; r < num_regions; ++r) {
    stats[r].region_id = r;
    stats[r].mean_prob.assign(num_classes, 0.0);
  }
  std::vector<double> dist(num_classes);
  for (std::size_t i = 0; i < seg.size(); ++i) {
    auto& s = stats[seg[i]];
    probs.distribution(i, dist);
    for (std::uint32_t c = 0; c < num_classes; ++c) s.mean_prob[c] += dist[c];
    s.uncertainty += pixel_uncertainty(dist);
    ++s.pixel_count;
    ++votes[seg[i]][probs.argmax(i)];
  }
  for (RegionId r = 0; r < num_regions; ++r) {
    auto& s = stats[r];
    if (s.pixel_count == 0) throw InvariantError("region_stats: empty region " + std::to_string(r));
    const double inv = 1.0 / static_cast<double>(s.pixel_count);
    double total = 0.0;
    for (double& v : s.mean_prob) {
      v *= inv;
      total += v;
    }
    // Renormalize away float32 storage error so the mean sums to 1 in double.
    for (double& v : s.mean_prob) v /= total;
    s.uncertainty = std::clamp(s.uncertainty * inv, 0.0, 1.0);
    const auto& v = votes[r];
    s.predicted_dominant = static_cast<ClassId>(std::max_element(v.begin(), v.end()) - v.begin());
  }
  return stats;
}

}  // namespace spal
