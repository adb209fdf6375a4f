#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spal/merge.hpp"
#include "spal/raster.hpp"

namespace spal {

/// Best-overlap correspondences between two segmentations of one image,
/// counted over valid pixels only. Ties resolve to the lowest region id.
struct OverlapTable {
  std::vector<std::size_t> a_sizes;
  std::vector<std::size_t> b_sizes;
  /// For each region of `a`: argmax_b |a ∩ b| and that overlap.
  std::vector<RegionId> a_best;
  std::vector<std::size_t> a_best_overlap;
  /// For each region of `b`: argmax_a |a ∩ b| and that overlap.
  std::vector<RegionId> b_best;
  std::vector<std::size_t> b_best_overlap;
};

/// `valid` is a per-pixel mask (non-zero = counted); empty means all pixels.
OverlapTable overlap_table(const Segmentation& a, const Segmentation& b, std::span<const std::uint8_t> valid = {});

/// Non-ignore pixels of a label map as a validity mask.
std::vector<std::uint8_t> valid_mask(const LabelMap& labels);

struct AchievableScores {
  double asa = 0.0;
  double ap = 0.0;
  double ar = 0.0;
  double af = 0.0;
};

/// Running sums for ASA/AP/AR/AF of `first` against `second`. Adding several
/// images and reading pooled() gives dataset-level pooled values.
class AchievableAccumulator {
 public:
  /// Adds the (first; second) direction of `table`, or (second; first) when
  /// `reversed` is set.
  void add(const OverlapTable& table, bool reversed = false);
  AchievableScores pooled() const;
  std::size_t regions() const { return regions_; }

 private:
  double overlap_sum_ = 0.0;
  double size_sum_ = 0.0;
  double precision_sum_ = 0.0;
  double recall_sum_ = 0.0;
  double f1_sum_ = 0.0;
  std::size_t regions_ = 0;
};

AchievableScores achievable(const Segmentation& s, const Segmentation& g, std::span<const std::uint8_t> valid = {});

double asa(const Segmentation& s, const Segmentation& g, std::span<const std::uint8_t> valid = {});
double ap(const Segmentation& s, const Segmentation& g, std::span<const std::uint8_t> valid = {});
double ar(const Segmentation& s, const Segmentation& g, std::span<const std::uint8_t> valid = {});
double af(const Segmentation& s, const Segmentation& g, std::span<const std::uint8_t> valid = {});

/// All eight values: (S;G) and (G;S).
struct MetricReport {
  AchievableScores sg;
  AchievableScores gs;
};

MetricReport evaluate_superpixels(const Segmentation& s, const Segmentation& g,
                                  std::span<const std::uint8_t> valid = {});

/// Pixel confusion counts over non-ignore ground-truth pixels.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::uint32_t num_classes);
  void add(const LabelMap& pred, const LabelMap& gt);
  /// Mean IoU over classes present in the ground truth. Throws when no
  /// ground-truth pixel was counted.
  double miou() const;
  std::uint64_t count(ClassId pred, ClassId gt) const { return counts_[std::size_t{gt} * classes_ + pred]; }

 private:
  std::uint32_t classes_;
  std::vector<std::uint64_t> counts_;
};

double miou(const LabelMap& pred, const LabelMap& gt);

/// Fraction of merge events whose two regions share the ground-truth dominant
/// label. Events touching a region with no labeled pixel are skipped.
double merge_correctness(std::span<const MergeEvent> events, const Segmentation& base, const LabelMap& gt);

double pearson_correlation(std::span<const double> xs, std::span<const double> ys);

}  // namespace spal
