#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "spal/query.hpp"
#include "spal/raster.hpp"

namespace spal {

struct SieveConfig {
  /// Confidences kept for knee detection (uniform subsample of the sorted
  /// values). 20 suits large images, 5 small ones.
  std::uint32_t sample_count = 20;
  /// Regions with fewer pixels keep every pixel.
  std::uint32_t min_pixels_for_knee = 5;
};

/// Kneedle on an ascending curve: the index maximizing y_hat - x_hat after
/// min-max normalization of both axes. nullopt when the curve is flat or no
/// point lies above the diagonal. Throws on unsorted input or fewer than 3
/// values.
std::optional<std::size_t> kneedle(std::span<const double> ascending);

struct SieveResult {
  /// Confidence threshold; nullopt means every pixel was kept.
  std::optional<float> threshold;
  /// Ascending pixel indices with confidence >= threshold.
  std::vector<PixelIndex> kept_pixels;
  bool keep_all() const { return !threshold.has_value(); }
};

SieveResult sieve_superpixel(std::span<const PixelIndex> pixels, ClassId dominant, const ProbMap& probs,
                             const SieveConfig& cfg);

struct SievedRecord {
  ImageId image_id = 0;
  PixelIndex pixel = 0;
  ClassId label = 0;
  friend bool operator==(const SievedRecord&, const SievedRecord&) = default;
  friend auto operator<=>(const SievedRecord&, const SievedRecord&) = default;
};

/// Pixel-level training labels, ordered by (image_id, pixel).
struct SievedDataset {
  std::vector<SievedRecord> records;
  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  friend bool operator==(const SievedDataset&, const SievedDataset&) = default;
};

using ProbLookup = std::function<const ProbMap&(ImageId)>;

/// Union of the kept pixels of every answered query, each labeled with its
/// query's dominant label. With `sieve` false every query pixel is kept.
/// Throws if one pixel would receive two different labels.
SievedDataset build_sieved_dataset(std::span<const QueryRecord> queries, const ProbLookup& probs,
                                   const SieveConfig& cfg, bool sieve = true);

// SVD1: "SVD1", u32 count, then count x (u32 image_id, u32 pixel, u16 class).
void save_sieved_dataset(const SievedDataset& dataset, const std::filesystem::path& path);
SievedDataset load_sieved_dataset(const std::filesystem::path& path);

}  // namespace spal
