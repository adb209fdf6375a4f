#include "spal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <unordered_map>

#include "spal/oracle.hpp"

namespace spal {

OverlapTable overlap_table(const Segmentation& a, const Segmentation& b, std::span<const std::uint8_t> valid) {
  if (!(a.extent() == b.extent())) throw InvariantError("overlap_table: dimension mismatch");
  if (!valid.empty() && valid.size() != a.size()) throw InvariantError("overlap_table: mask size mismatch");
  const std::uint64_t nb = b.num_regions();
  std::unordered_map<std::uint64_t, std::size_t> overlaps;
  OverlapTable t;
  t.a_sizes.assign(a.num_regions(), 0);
  t.b_sizes.assign(b.num_regions(), 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!valid.empty() && !valid[i]) continue;
    ++t.a_sizes[a[i]];
    ++t.b_sizes[b[i]];
    ++overlaps[std::uint64_t{a[i]} * nb + b[i]];
  }
  t.a_best.assign(a.num_regions(), 0);
  t.a_best_overlap.assign(a.num_regions(), 0);
  t.b_best.assign(b.num_regions(), 0);
  t.b_best_overlap.assign(b.num_regions(), 0);
  for (const auto& [key, count] : overlaps) {
    const auto ra = static_cast<RegionId>(key / nb);
    const auto rb = static_cast<RegionId>(key % nb);
    if (count > t.a_best_overlap[ra] || (count == t.a_best_overlap[ra] && rb < t.a_best[ra])) {
      t.a_best_overlap[ra] = count;
      t.a_best[ra] = rb;
    }
    if (count > t.b_best_overlap[rb] || (count == t.b_best_overlap[rb] && ra < t.b_best[rb])) {
      t.b_best_overlap[rb] = count;
      t.b_best[rb] = ra;
    }
  }
  return t;
}

std::vector<std::uint8_t> valid_mask(const LabelMap& labels) {
  std::vector<std::uint8_t> mask(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) mask[i] = labels.ignored(i) ? 0 : 1;
  return mask;
}

void AchievableAccumulator::add(const OverlapTable& table, bool reversed) {
  const auto& sizes = reversed ? table.b_sizes : table.a_sizes;
  const auto& other_sizes = reversed ? table.a_sizes : table.b_sizes;
  const auto& best = reversed ? table.b_best : table.a_best;
  const auto& best_overlap = reversed ? table.b_best_overlap : table.a_best_overlap;
  for (std::size_t r = 0; r < sizes.size(); ++r) {
    if (sizes[r] == 0) continue;
    const auto overlap = static_cast<double>(best_overlap[r]);
    const auto size = static_cast<double>(sizes[r]);
    const auto match_size = static_cast<double>(other_sizes[best[r]]);
    overlap_sum_ += overlap;
    size_sum_ += size;
    precision_sum_ += overlap / size;
    recall_sum_ += overlap / match_size;
    f1_sum_ += 2.0 * overlap / (size + match_size);
    ++regions_;
  }
}

AchievableScores AchievableAccumulator::pooled() const {
  if (regions_ == 0) throw Error("achievable metrics: no valid regions");
  const auto n = static_cast<double>(regions_);
  return {overlap_sum_ / size_sum_, precision_sum_ / n, recall_sum_ / n, f1_sum_ / n};
}

AchievableScores achievable(const Segmentation& s, const Segmentation& g, std::span<const std::uint8_t> valid) {
  AchievableAccumulator acc;
  acc.add(overlap_table(s, g, valid));
  return acc.pooled();
}

double asa(const Segmentation& s, const Segmentation& g, std::span<const std::uint8_t> valid) {
  return achievable(s, g, valid).asa;
}
double ap(const Segmentation& s, const Segmentation& g, std::span<const std::uint8_t> valid) {
  return achievable(s, g, valid).ap;
}
double ar(const Segmentation& s, const Segmentation& g, std::span<const std::uint8_t> valid) {
  return achievable(s, g, valid).ar;
}
double af(const Segmentation& s, const Segmentation& g, std::span<const std::uint8_t> valid) {
  return achievable(s, g, valid).af;
}

MetricReport evaluate_superpixels(const Segmentation& s, const Segmentation& g, std::span<const std::uint8_t> valid) {
  const OverlapTable table = overlap_table(s, g, valid);
  AchievableAccumulator sg, gs;
  sg.add(table);
  gs.add(table, true);
  return {sg.pooled(), gs.pooled()};
}

ConfusionMatrix::ConfusionMatrix(std::uint32_t num_classes)
    : classes_(num_classes), counts_(std::size_t{num_classes} * num_classes, 0) {}

void ConfusionMatrix::add(const LabelMap& pred, const LabelMap& gt) {
  if (!(pred.extent() == gt.extent())) throw InvariantError("miou: dimension mismatch");
  if (pred.num_classes() != classes_ || gt.num_classes() != classes_) throw InvariantError("miou: class count mismatch");
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt.ignored(i)) continue;
    if (pred.ignored(i)) throw InvariantError("miou: prediction carries ignore label on a labeled pixel");
    ++counts_[std::size_t{gt[i]} * classes_ + pred[i]];
  }
}

double ConfusionMatrix::miou() const {
  double sum = 0.0;
  std::size_t present = 0;
  for (std::uint32_t c = 0; c < classes_; ++c) {
    std::uint64_t gt_total = 0, pred_total = 0;
    for (std::uint32_t k = 0; k < classes_; ++k) {
      gt_total += counts_[std::size_t{c} * classes_ + k];
      pred_total += counts_[std::size_t{k} * classes_ + c];
    }
    if (gt_total == 0) continue;
    const std::uint64_t inter = counts_[std::size_t{c} * classes_ + c];
    sum += static_cast<double>(inter) / static_cast<double>(gt_total + pred_total - inter);
    ++present;
  }
  if (present == 0) throw Error("miou: undefined, ground truth has no labeled pixels");
  return sum / static_cast<double>(present);
}

double miou(const LabelMap& pred, const LabelMap& gt) {
  ConfusionMatrix cm(gt.num_classes());
  cm.add(pred, gt);
  return cm.miou();
}

double merge_correctness(std::span<const MergeEvent> events, const Segmentation& base, const LabelMap& gt) {
  if (!(base.extent() == gt.extent())) throw InvariantError("merge_correctness: dimension mismatch");
  const auto pixels = base.region_pixels();
  std::vector<std::optional<ClassId>> dominant(base.num_regions());
  for (RegionId r = 0; r < base.num_regions(); ++r) {
    if (auto a = answer_query(pixels[r], gt)) dominant[r] = a->dominant;
  }
  std::size_t counted = 0, correct = 0;
  for (const auto& e : events) {
    if (e.root >= base.num_regions() || e.absorbed >= base.num_regions()) {
      throw InvariantError("merge_correctness: event references unknown region");
    }
    if (!dominant[e.root] || !dominant[e.absorbed]) continue;
    ++counted;
    if (*dominant[e.root] == *dominant[e.absorbed]) ++correct;
  }
  if (counted == 0) throw Error("merge_correctness: no scorable merge events");
  return static_cast<double>(correct) / static_cast<double>(counted);
}

double pearson_correlation(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw InvariantError("pearson_correlation: length mismatch");
  if (xs.size() < 2) throw InvariantError("pearson_correlation: need at least two points");
  const auto n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) throw InvariantError("pearson_correlation: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace spal
