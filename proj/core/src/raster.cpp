#include "spal/raster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <unordered_map>

#include "binary_io.hpp"

namespace spal {

RgbImage::RgbImage(Extent extent, std::vector<std::uint8_t> rgb)
    : extent_(extent), rgb_(std::move(rgb)) {
  if (extent_.area() == 0) throw InvariantError("RgbImage: empty image");
  if (rgb_.size() != 3 * extent_.area()) throw InvariantError("RgbImage: data length != 3*width*height");
}

LabelMap::LabelMap(Extent extent, std::vector<ClassId> data, ClassId num_classes, ClassId ignore_id)
    : extent_(extent), data_(std::move(data)), num_classes_(num_classes), ignore_id_(ignore_id) {
  if (data_.size() != extent_.area()) throw InvariantError("LabelMap: data length != width*height");
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (data_[i] != ignore_id_ && data_[i] >= num_classes_) {
      throw InvariantError("LabelMap: class id " + std::to_string(data_[i]) + " at pixel " +
                           std::to_string(i) + " >= num_classes " + std::to_string(num_classes_));
    }
  }
}

ProbMap::ProbMap(Extent extent, std::uint32_t num_classes, std::vector<float> planes)
    : extent_(extent), num_classes_(num_classes), planes_(std::move(planes)) {
  if (num_classes_ == 0) throw InvariantError("ProbMap: num_classes must be positive");
  const std::size_t n = extent_.area();
  if (planes_.size() != n * num_classes_) throw InvariantError("ProbMap: plane payload size mismatch");
  for (float v : planes_) {
    if (!(v >= 0.0f && v <= 1.0f)) throw InvariantError("ProbMap: entry outside [0,1]");
  }
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::uint32_t c = 0; c < num_classes_; ++c) sum += planes_[c * n + i];
    if (std::abs(sum - 1.0) > kNormalizationTolerance) {
      throw InvariantError("ProbMap: pixel " + std::to_string(i) + " sums to " + std::to_string(sum));
    }
  }
}

void ProbMap::distribution(std::size_t index, std::span<double> out) const {
  const std::size_t n = pixel_count();
  for (std::uint32_t c = 0; c < num_classes_; ++c) out[c] = planes_[c * n + index];
}

ClassId ProbMap::argmax(std::size_t index) const {
  const std::size_t n = pixel_count();
  ClassId best = 0;
  float best_value = planes_[index];
  for (std::uint32_t c = 1; c < num_classes_; ++c) {
    if (planes_[c * n + index] > best_value) {
      best_value = planes_[c * n + index];
      best = static_cast<ClassId>(c);
    }
  }
  return best;
}

Segmentation::Segmentation(Extent extent, std::vector<RegionId> region_ids)
    : extent_(extent), ids_(std::move(region_ids)) {
  if (extent_.area() == 0) throw InvariantError("Segmentation: empty raster");
  if (ids_.size() != extent_.area()) throw InvariantError("Segmentation: id count != width*height");
  const RegionId max_id = *std::max_element(ids_.begin(), ids_.end());
  std::vector<bool> used(std::size_t{max_id} + 1, false);
  for (RegionId id : ids_) used[id] = true;
  if (std::find(used.begin(), used.end(), false) != used.end()) {
    throw InvariantError("Segmentation: region ids are not dense");
  }
  num_regions_ = max_id + 1;
}

Segmentation Segmentation::densify(Extent extent, std::span<const RegionId> ids) {
  std::unordered_map<RegionId, RegionId> remap;
  std::vector<RegionId> dense;
  dense.reserve(ids.size());
  for (RegionId id : ids) {
    auto [it, inserted] = remap.try_emplace(id, static_cast<RegionId>(remap.size()));
    dense.push_back(it->second);
  }
  return Segmentation(extent, std::move(dense));
}

std::vector<std::vector<PixelIndex>> Segmentation::region_pixels() const {
  std::vector<std::vector<PixelIndex>> pixels(num_regions_);
  const auto sizes = region_sizes();
  for (std::uint32_t r = 0; r < num_regions_; ++r) pixels[r].reserve(sizes[r]);
  for (std::size_t i = 0; i < ids_.size(); ++i) pixels[ids_[i]].push_back(static_cast<PixelIndex>(i));
  return pixels;
}

std::vector<std::size_t> Segmentation::region_sizes() const {
  std::vector<std::size_t> sizes(num_regions_, 0);
  for (RegionId id : ids_) ++sizes[id];
  return sizes;
}

namespace {

constexpr char kProbMagic[4] = {'P', 'P', 'F', '1'};
constexpr char kSegMagic[4] = {'S', 'E', 'G', '1'};

}  // namespace

ProbMap load_prob_map(const std::filesystem::path& path) {
  detail::ByteReader in(detail::read_file(path), path);
  in.expect_magic(kProbMagic);
  const std::uint32_t width = in.u32();
  const std::uint32_t height = in.u32();
  const std::uint32_t num_classes = in.u32();
  const std::size_t count = std::size_t{width} * height * num_classes;
  std::vector<float> planes(count);
  for (auto& v : planes) v = in.f32();
  in.expect_end();
  try {
    return ProbMap({width, height}, num_classes, std::move(planes));
  } catch (const InvariantError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_prob_map(const ProbMap& probs, const std::filesystem::path& path) {
  detail::ByteWriter out;
  out.magic(kProbMagic);
  out.u32(probs.width());
  out.u32(probs.height());
  out.u32(probs.num_classes());
  for (float v : probs.planes()) out.f32(v);
  detail::write_file(path, out.bytes());
}

Segmentation load_segmentation(const std::filesystem::path& path, Extent expected) {
  detail::ByteReader in(detail::read_file(path), path);
  in.expect_magic(kSegMagic);
  const std::uint32_t width = in.u32();
  const std::uint32_t height = in.u32();
  const std::uint32_t num_regions = in.u32();
  if (expected.area() != 0 && !(expected == Extent{width, height})) {
    throw FormatError(path.string() + ": dimensions " + std::to_string(width) + "x" + std::to_string(height) +
                      " do not match expected " + std::to_string(expected.width) + "x" +
                      std::to_string(expected.height));
  }
  if (std::size_t{width} * height == 0) throw FormatError(path.string() + ": empty segmentation");
  std::vector<RegionId> ids(std::size_t{width} * height);
  for (auto& id : ids) {
    id = in.u32();
    if (id >= num_regions) {
      throw FormatError(path.string() + ": region id " + std::to_string(id) + " >= declared num_regions " +
                        std::to_string(num_regions));
    }
  }
  in.expect_end();
  // Ids with gaps are compacted in ascending order; dense ids load unchanged.
  std::vector<RegionId> used(ids);
  std::sort(used.begin(), used.end());
  used.erase(std::unique(used.begin(), used.end()), used.end());
  for (auto& id : ids) id = static_cast<RegionId>(std::lower_bound(used.begin(), used.end(), id) - used.begin());
  return Segmentation({width, height}, std::move(ids));
}

void save_segmentation(const Segmentation& seg, const std::filesystem::path& path) {
  detail::ByteWriter out;
  out.magic(kSegMagic);
  out.u32(seg.width());
  out.u32(seg.height());
  out.u32(seg.num_regions());
  for (RegionId id : seg.ids()) out.u32(id);
  detail::write_file(path, out.bytes());
}

}  // namespace spal
