#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace spal {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a file cannot be parsed or violates its format contract.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Raised when a value violates a type invariant.
class InvariantError : public Error {
 public:
  using Error::Error;
};

using ClassId = std::uint16_t;
using RegionId = std::uint32_t;
using PixelIndex = std::uint32_t;
using ImageId = std::uint32_t;

/// Pixel adjacency used for region graphs, connected components and
/// connectivity enforcement.
enum class Connectivity { kFour, kEight };
inline constexpr Connectivity kConnectivity = Connectivity::kFour;

struct Extent {
  std::uint32_t width = 0;
  std::uint32_t height = 0;

  std::size_t area() const { return std::size_t{width} * height; }
  friend bool operator==(const Extent&, const Extent&) = default;
};

/// Calls fn(neighbor_index) for every in-bounds neighbor of `index` under
/// kConnectivity.
template <typename Fn>
void for_each_neighbor(Extent extent, std::size_t index, Fn&& fn) {
  const std::size_t x = index % extent.width;
  const std::size_t y = index / extent.width;
  const std::size_t w = extent.width;
  if (x > 0) fn(index - 1);
  if (x + 1 < extent.width) fn(index + 1);
  if (y > 0) fn(index - w);
  if (y + 1 < extent.height) fn(index + w);
  if constexpr (kConnectivity == Connectivity::kEight) {
    if (x > 0 && y > 0) fn(index - w - 1);
    if (x + 1 < extent.width && y > 0) fn(index - w + 1);
    if (x > 0 && y + 1 < extent.height) fn(index + w - 1);
    if (x + 1 < extent.width && y + 1 < extent.height) fn(index + w + 1);
  }
}

/// 8-bit interleaved RGB image.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(Extent extent, std::vector<std::uint8_t> rgb);

  Extent extent() const { return extent_; }
  std::uint32_t width() const { return extent_.width; }
  std::uint32_t height() const { return extent_.height; }
  std::span<const std::uint8_t> data() const { return rgb_; }
  const std::uint8_t* pixel(std::size_t index) const { return rgb_.data() + 3 * index; }

 private:
  Extent extent_;
  std::vector<std::uint8_t> rgb_;
};

/// Per-pixel class ids with an ignore sentinel.
class LabelMap {
 public:
  LabelMap() = default;
  LabelMap(Extent extent, std::vector<ClassId> data, ClassId num_classes, ClassId ignore_id);

  Extent extent() const { return extent_; }
  std::uint32_t width() const { return extent_.width; }
  std::uint32_t height() const { return extent_.height; }
  std::size_t size() const { return data_.size(); }
  ClassId num_classes() const { return num_classes_; }
  ClassId ignore_id() const { return ignore_id_; }
  std::span<const ClassId> data() const { return data_; }
  ClassId operator[](std::size_t index) const { return data_[index]; }
  bool ignored(std::size_t index) const { return data_[index] == ignore_id_; }

 private:
  Extent extent_;
  std::vector<ClassId> data_;
  ClassId num_classes_ = 0;
  ClassId ignore_id_ = 255;
};

/// Per-pixel class probability distributions stored as C row-major planes.
class ProbMap {
 public:
  static constexpr double kNormalizationTolerance = 1e-5;

  ProbMap() = default;
  /// Validates that entries lie in [0,1] and every pixel sums to one.
  ProbMap(Extent extent, std::uint32_t num_classes, std::vector<float> planes);

  Extent extent() const { return extent_; }
  std::uint32_t width() const { return extent_.width; }
  std::uint32_t height() const { return extent_.height; }
  std::size_t pixel_count() const { return extent_.area(); }
  std::uint32_t num_classes() const { return num_classes_; }
  std::span<const float> planes() const { return planes_; }
  std::span<const float> plane(std::uint32_t c) const {
    return std::span<const float>(planes_).subspan(c * pixel_count(), pixel_count());
  }
  float at(std::uint32_t c, std::size_t index) const { return planes_[c * pixel_count() + index]; }
  /// Copies the distribution at `index` into `out` (size num_classes).
  void distribution(std::size_t index, std::span<double> out) const;
  ClassId argmax(std::size_t index) const;

 private:
  Extent extent_;
  std::uint32_t num_classes_ = 0;
  std::vector<float> planes_;
};

/// Per-pixel region ids, dense in [0, num_regions).
class Segmentation {
 public:
  Segmentation() = default;
  /// Requires ids already dense with every id used.
  Segmentation(Extent extent, std::vector<RegionId> region_ids);

  /// Relabels arbitrary ids by order of first appearance in a row-major scan.
  static Segmentation densify(Extent extent, std::span<const RegionId> ids);

  Extent extent() const { return extent_; }
  std::uint32_t width() const { return extent_.width; }
  std::uint32_t height() const { return extent_.height; }
  std::size_t size() const { return ids_.size(); }
  std::uint32_t num_regions() const { return num_regions_; }
  std::span<const RegionId> ids() const { return ids_; }
  RegionId operator[](std::size_t index) const { return ids_[index]; }

  /// Pixel indices of every region, each list ascending.
  std::vector<std::vector<PixelIndex>> region_pixels() const;
  std::vector<std::size_t> region_sizes() const;

  friend bool operator==(const Segmentation&, const Segmentation&) = default;

 private:
  Extent extent_;
  std::vector<RegionId> ids_;
  std::uint32_t num_regions_ = 0;
};

// PNG I/O. Label maps are single-channel 8- or 16-bit.
RgbImage load_rgb_png(const std::filesystem::path& path);
void save_rgb_png(const RgbImage& image, const std::filesystem::path& path);
void save_rgba_png(Extent extent, std::span<const std::uint8_t> rgba, const std::filesystem::path& path);
LabelMap load_label_map(const std::filesystem::path& path, ClassId num_classes, ClassId ignore_id);
void save_label_map(const LabelMap& labels, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_rgba_png(Extent extent, std::span<const std::uint8_t> rgba);

// Little-endian binary formats.
ProbMap load_prob_map(const std::filesystem::path& path);
void save_prob_map(const ProbMap& probs, const std::filesystem::path& path);
/// Loads a SEG1 file. Ids with gaps are compacted in ascending order. When `expected` is non-zero its
/// dimensions must match.
Segmentation load_segmentation(const std::filesystem::path& path, Extent expected = {});
void save_segmentation(const Segmentation& seg, const std::filesystem::path& path);

}  // namespace spal
