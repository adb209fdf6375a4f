#pragma once

#include <cstdint>
#include <span>

#include "spal/raster.hpp"

namespace spal {

struct SlicConfig {
  /// Desired pixels per superpixel; the seed grid step is its square root.
  std::uint32_t target_region_size = 256;
  double compactness = 10.0;
  std::uint32_t iterations = 10;
  /// Radius of a median filter applied to the Lab image first; 0 disables.
  /// Without it pixel noise shatters clusters into fragments and regions
  /// come out far larger than the target. A median keeps step edges where a
  /// Gaussian would smear them into a strip of mixed color.
  std::uint32_t smoothing = 1;
};

/// SLIC superpixels: k-means in CIELAB + position space, seeded on a regular
/// grid, followed by connectivity enforcement that folds fragments smaller
/// than a quarter of the target size into an adjacent region.
Segmentation slic(const RgbImage& image, const SlicConfig& cfg);

/// Axis-aligned tiles of `cell` x `cell` pixels; border tiles are partial.
Segmentation grid_segmentation(std::uint32_t width, std::uint32_t height, std::uint32_t cell);

/// Splits every region into its 4-connected components. The first component
/// of each region (in row-major scan order) keeps the region's id; further
/// components get fresh ids appended after the existing ones.
Segmentation enforce_connectivity(const Segmentation& seg);

/// Labels maximal connected components of equal values, ids by first
/// appearance in row-major order.
Segmentation connected_components(Extent extent, std::span<const std::uint32_t> values);

}  // namespace spal
