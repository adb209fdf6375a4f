#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "spal/raster.hpp"

namespace spal {

/// Region adjacency graph: an edge joins two regions when some pixel of one
/// is adjacent (kConnectivity) to some pixel of the other.
class RegionGraph {
 public:
  RegionGraph() = default;
  explicit RegionGraph(std::vector<std::vector<RegionId>> adjacency);

  std::uint32_t num_regions() const { return static_cast<std::uint32_t>(adjacency_.size()); }
  std::span<const RegionId> neighbors(RegionId r) const { return adjacency_[r]; }
  std::size_t num_edges() const;
  bool adjacent(RegionId a, RegionId b) const;

 private:
  std::vector<std::vector<RegionId>> adjacency_;
};

RegionGraph build_region_graph(const Segmentation& seg);

struct RegionStats {
  RegionId region_id = 0;
  std::size_t pixel_count = 0;
  /// Arithmetic mean of the pixel distributions.
  std::vector<double> mean_prob;
  /// Mean best-versus-second-best uncertainty of the pixels, in [0,1].
  double uncertainty = 0.0;
  /// Mode of per-pixel argmax labels, ties to the lowest class id.
  ClassId predicted_dominant = 0;
};

std::vector<RegionStats> region_stats(const Segmentation& seg, const ProbMap& probs);

}  // namespace spal
