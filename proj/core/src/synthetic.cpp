#include "spal/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace spal {

double Rng::normal() {
  // Box-Muller; 1 - uniform() keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

namespace {

using Color = std::array<double, 3>;

constexpr std::array<Color, kSyntheticClasses> kClassColors = {{
    {95.0, 135.0, 75.0},   // background
    {80.0, 95.0, 150.0},   // rectangle
    {165.0, 75.0, 60.0},   // disc
    {190.0, 170.0, 70.0},  // bar
}};
constexpr Color kVoidColor = {30.0, 30.0, 30.0};

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

}  // namespace

SyntheticImage generate_synthetic_image(std::uint64_t seed, const SyntheticConfig& cfg) {
  Rng rng(seed);
  const std::uint32_t w = cfg.width, h = cfg.height;
  const std::size_t n = std::size_t{w} * h;
  std::vector<ClassId> labels(n, 0);

  const auto paint_rect = [&](long x0, long y0, long x1, long y1, ClassId c) {
    for (long y = std::max(0L, y0); y < std::min<long>(h, y1); ++y) {
      for (long x = std::max(0L, x0); x < std::min<long>(w, x1); ++x) labels[std::size_t(y) * w + std::size_t(x)] = c;
    }
  };
  const auto rand_between = [&](long lo, long hi) { return lo + static_cast<long>(rng.below(std::uint64_t(hi - lo + 1))); };
  const double scale = std::min(w, h) / 64.0;

  const long rects = rand_between(1, 2);
  for (long k = 0; k < rects; ++k) {
    const long rw = std::lround(rand_between(10, 24) * scale), rh = std::lround(rand_between(10, 24) * scale);
    const long x0 = rand_between(0, std::max<long>(0, long(w) - rw)), y0 = rand_between(0, std::max<long>(0, long(h) - rh));
    paint_rect(x0, y0, x0 + rw, y0 + rh, 1);
  }
  const long discs = rand_between(1, 2);
  for (long k = 0; k < discs; ++k) {
    const double r = rand_between(5, 11) * scale;
    const double cx = rng.uniform(0.0, w), cy = rng.uniform(0.0, h);
    for (std::uint32_t y = 0; y < h; ++y) {
      for (std::uint32_t x = 0; x < w; ++x) {
        const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
        if (dx * dx + dy * dy <= r * r) labels[std::size_t{y} * w + x] = 2;
      }
    }
  }
  if (rng.uniform() < 0.7) {
    const bool vertical = rng.uniform() < 0.5;
    const long thickness = std::max(1L, std::lround(rand_between(2, 4) * scale));
    const long length = std::lround(rand_between(16, 40) * scale);
    if (vertical) {
      const long x0 = rand_between(0, long(w) - thickness), y0 = rand_between(0, std::max<long>(0, long(h) - length));
      paint_rect(x0, y0, x0 + thickness, y0 + length, 3);
    } else {
      const long x0 = rand_between(0, std::max<long>(0, long(w) - length)), y0 = rand_between(0, long(h) - thickness);
      paint_rect(x0, y0, x0 + length, y0 + thickness, 3);
    }
  }
  if (rng.uniform() < cfg.void_probability) {
    const long vw = std::max(2L, std::lround(rand_between(4, 7) * scale));
    const long vh = std::max(2L, std::lround(rand_between(4, 7) * scale));
    const long x0 = rand_between(0, std::max<long>(0, long(w) - vw)), y0 = rand_between(0, std::max<long>(0, long(h) - vh));
    paint_rect(x0, y0, x0 + vw, y0 + vh, cfg.ignore_id);
  }

  std::array<Color, kSyntheticClasses> colors = kClassColors;
  for (auto& color : colors) {
    for (auto& channel : color) channel += rng.uniform(-cfg.color_jitter, cfg.color_jitter);
  }
  // Smooth left-to-right illumination change.
  const double gain_left = rng.uniform(0.85, 1.15), gain_right = rng.uniform(0.85, 1.15);

  std::vector<std::uint8_t> rgb(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const ClassId c = labels[i];
    const Color& base = c == cfg.ignore_id ? kVoidColor : colors[c];
    const double t = w > 1 ? static_cast<double>(i % w) / (w - 1) : 0.0;
    const double gain = gain_left + (gain_right - gain_left) * t;
    for (int k = 0; k < 3; ++k) rgb[3 * i + k] = to_byte(base[k] * gain + cfg.pixel_noise * rng.normal());
  }
  return {RgbImage({w, h}, std::move(rgb)), LabelMap({w, h}, std::move(labels), kSyntheticClasses, cfg.ignore_id)};
}

Dataset write_synthetic_dataset(const std::filesystem::path& root, std::uint32_t num_train, std::uint32_t num_val,
                                std::uint64_t seed, const SyntheticConfig& cfg) {
  std::vector<DatasetImage> images;
  for (std::uint32_t i = 0; i < num_train + num_val; ++i) {
    // Spread per-image seeds so neighboring dataset seeds share no images.
    const SyntheticImage sample = generate_synthetic_image(seed * 1'000'003ULL + i, cfg);
    DatasetImage entry;
    entry.id = i;
    entry.image = root / "img" / (std::to_string(i) + ".png");
    entry.labels = root / "gt" / (std::to_string(i) + ".png");
    entry.split = i < num_train ? Split::kTrain : Split::kVal;
    save_rgb_png(sample.image, entry.image);
    save_label_map(sample.labels, entry.labels);
    images.push_back(std::move(entry));
  }
  Dataset dataset(std::move(images), kSyntheticClasses, cfg.ignore_id, {"background", "rectangle", "disc", "bar"});
  dataset.save(root / "manifest.json");
  return Dataset::load(root / "manifest.json");
}

}  // namespace spal
