#include "spal/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace spal {

ClassPopularity class_popularity(std::span<const std::vector<RegionStats>> per_image, std::uint32_t num_classes) {
  std::vector<std::size_t> mass(num_classes, 0);
  std::size_t total = 0;
  for (const auto& image : per_image) {
    for (const auto& s : image) {
      if (s.predicted_dominant >= num_classes) throw InvariantError("class_popularity: dominant class out of range");
      mass[s.predicted_dominant] += s.pixel_count;
      total += s.pixel_count;
    }
  }
  if (total == 0) throw InvariantError("class_popularity: empty dataset");
  ClassPopularity popularity;
  popularity.values.resize(num_classes);
  for (std::uint32_t c = 0; c < num_classes; ++c) {
    popularity.values[c] = static_cast<double>(mass[c]) / static_cast<double>(total);
  }
  return popularity;
}

double acquisition_score(const RegionStats& stats, const ClassPopularity& popularity) {
  return stats.uncertainty * std::exp(-popularity.values.at(stats.predicted_dominant));
}

void PixelExclusion::add(ImageId image, std::size_t image_area, std::span<const PixelIndex> pixels) {
  auto& mask = masks_[image];
  if (mask.empty()) mask.assign(image_area, false);
  if (mask.size() != image_area) throw InvariantError("PixelExclusion: inconsistent image area");
  for (PixelIndex p : pixels) {
    if (!mask.at(p)) {
      mask[p] = true;
      ++count_;
    }
  }
}

bool PixelExclusion::contains(ImageId image, PixelIndex pixel) const {
  auto it = masks_.find(image);
  return it != masks_.end() && pixel < it->second.size() && it->second[pixel];
}

bool PixelExclusion::overlaps(ImageId image, std::span<const PixelIndex> pixels) const {
  auto it = masks_.find(image);
  if (it == masks_.end()) return false;
  const auto& mask = it->second;
  return std::any_of(pixels.begin(), pixels.end(), [&](PixelIndex p) { return p < mask.size() && mask[p]; });
}

std::vector<std::size_t> rank_candidates(std::span<const Candidate> candidates, const PixelExclusion& excluded) {
  std::vector<std::size_t> order;
  order.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!excluded.overlaps(candidates[i].image_id, candidates[i].pixels)) order.push_back(i);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Candidate& x = candidates[a];
    const Candidate& y = candidates[b];
    if (x.score != y.score) return x.score > y.score;
    if (x.image_id != y.image_id) return x.image_id < y.image_id;
    return x.region_id < y.region_id;
  });
  return order;
}

std::vector<Candidate> select_batch(std::span<const Candidate> candidates, std::size_t budget,
                                    const PixelExclusion& excluded) {
  if (budget < 1) throw InvariantError("select_batch: budget must be >= 1");
  const auto order = rank_candidates(candidates, excluded);
  if (order.empty()) throw Error("select_batch: no eligible candidates");
  std::vector<Candidate> batch;
  const std::size_t n = std::min(budget, order.size());
  batch.reserve(n);
  for (std::size_t i = 0; i < n; ++i) batch.push_back(candidates[order[i]]);
  return batch;
}

}  // namespace spal
