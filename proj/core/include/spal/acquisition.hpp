#pragma once

#include <span>
#include <unordered_map>
#include <vector>

#include "spal/distribution.hpp"
#include "spal/raster.hpp"
#include "spal/region.hpp"

namespace spal {

/// Pixel-mass fraction of regions whose predicted dominant class is c.
struct ClassPopularity {
  std::vector<double> values;
};

/// Popularity over every region of every image of the round. Each inner
/// vector holds the stats of one image's merged segmentation.
ClassPopularity class_popularity(std::span<const std::vector<RegionStats>> per_image, std::uint32_t num_classes);

/// u(s) * exp(-p(D(s))).
double acquisition_score(const RegionStats& stats, const ClassPopularity& popularity);

struct Candidate {
  ImageId image_id = 0;
  RegionId region_id = 0;
  RegionStats stats;
  double score = 0.0;
  /// Ascending pixel indices of the region.
  std::vector<PixelIndex> pixels;
};

/// Pixels already covered by earlier queries, per image.
class PixelExclusion {
 public:
  void add(ImageId image, std::size_t image_area, std::span<const PixelIndex> pixels);
  bool contains(ImageId image, PixelIndex pixel) const;
  bool overlaps(ImageId image, std::span<const PixelIndex> pixels) const;
  std::size_t count() const { return count_; }

 private:
  std::unordered_map<ImageId, std::vector<bool>> masks_;
  std::size_t count_ = 0;
};

/// Indices of eligible candidates in selection order: higher score, then
/// lower image id, then lower region id. Candidates touching an excluded
/// pixel are dropped.
std::vector<std::size_t> rank_candidates(std::span<const Candidate> candidates, const PixelExclusion& excluded);

/// The first min(budget, eligible) entries of rank_candidates. Throws when
/// nothing is eligible.
std::vector<Candidate> select_batch(std::span<const Candidate> candidates, std::size_t budget,
                                    const PixelExclusion& excluded);

}  // namespace spal
