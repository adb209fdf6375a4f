#pragma once

#include <optional>
#include <span>
#include <vector>

#include "spal/raster.hpp"

namespace spal {

/// Maximal connected components of identical ground-truth labels. Ignore
/// pixels form their own components, flagged in `ignored`.
struct OracleRegions {
  Segmentation segmentation;
  std::vector<bool> ignored;
};

OracleRegions oracle_superpixels(const LabelMap& gt);

struct OracleAnswer {
  ClassId dominant = 0;
  /// Fraction of non-ignore pixels whose true label differs from dominant.
  double noise_rate = 0.0;
};

/// Modal ground-truth label over the non-ignore pixels, ties to the lowest
/// class id. nullopt when every pixel is ignored (the query is unanswerable).
std::optional<OracleAnswer> answer_query(std::span<const PixelIndex> pixels, const LabelMap& gt);

}  // namespace spal
