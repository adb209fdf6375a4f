#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "spal/dataset.hpp"
#include "spal/raster.hpp"

namespace spal {

/// Portable sampling helpers on top of mt19937_64 (the standard
/// distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Shapes on textured background: class 0 background, 1 rectangles,
/// 2 discs, 3 thin bars (rare). Optional void patches carry the ignore id.
struct SyntheticConfig {
  std::uint32_t width = 64;
  std::uint32_t height = 64;
  /// Per-pixel color noise (standard deviation, 0..255 scale).
  double pixel_noise = 22.0;
  /// Per-image per-class color shift (uniform half-width).
  double color_jitter = 18.0;
  /// Probability that an image contains a void (ignore) patch.
  double void_probability = 0.25;
  ClassId ignore_id = 255;
};

inline constexpr ClassId kSyntheticClasses = 4;

struct SyntheticImage {
  RgbImage image;
  LabelMap labels;
};

SyntheticImage generate_synthetic_image(std::uint64_t seed, const SyntheticConfig& cfg = {});

/// Writes img/<id>.png, gt/<id>.png and manifest.json under `root` and
/// returns the loaded dataset. Train ids come first, then val ids.
Dataset write_synthetic_dataset(const std::filesystem::path& root, std::uint32_t num_train, std::uint32_t num_val,
                                std::uint64_t seed, const SyntheticConfig& cfg = {});

}  // namespace spal
