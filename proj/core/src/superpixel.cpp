#include "spal/superpixel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <vector>

namespace spal {
namespace {

using Lab = std::array<double, 3>;

double srgb_to_linear(double c) { return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4); }

double lab_f(double t) {
  constexpr double kDelta = 6.0 / 29.0;
  return t > kDelta * kDelta * kDelta ? std::cbrt(t) : t / (3.0 * kDelta * kDelta) + 4.0 / 29.0;
}

Lab rgb_to_lab(const std::uint8_t* rgb) {
  const double r = srgb_to_linear(rgb[0] / 255.0);
  const double g = srgb_to_linear(rgb[1] / 255.0);
  const double b = srgb_to_linear(rgb[2] / 255.0);
  // D65 white point.
  const double x = (0.4124564 * r + 0.3575761 * g + 0.1804375 * b) / 0.95047;
  const double y = (0.2126729 * r + 0.7151522 * g + 0.0721750 * b);
  const double z = (0.0193339 * r + 0.1191920 * g + 0.9503041 * b) / 1.08883;
  const double fx = lab_f(x), fy = lab_f(y), fz = lab_f(z);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

// Per-channel median over a (2r+1)^2 window with clamped borders.
void median_filter(std::vector<Lab>& image, std::size_t w, std::size_t h, int radius) {
  const auto clamp = [](std::ptrdiff_t v, std::size_t size) {
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(v, 0, static_cast<std::ptrdiff_t>(size) - 1));
  };
  std::vector<Lab> out(image.size());
  std::vector<double> window;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        window.clear();
        for (int dy = -radius; dy <= radius; ++dy) {
          for (int dx = -radius; dx <= radius; ++dx) {
            const std::size_t yy = clamp(static_cast<std::ptrdiff_t>(y) + dy, h);
            const std::size_t xx = clamp(static_cast<std::ptrdiff_t>(x) + dx, w);
            window.push_back(image[yy * w + xx][c]);
          }
        }
        const auto mid = window.begin() + window.size() / 2;
        std::nth_element(window.begin(), mid, window.end());
        out[y * w + x][c] = *mid;
      }
    }
  }
  image = std::move(out);
}

struct Center {
  Lab color;
  double x = 0.0;
  double y = 0.0;
};

// Union-find over connected components, used to fold small fragments.
class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t a) {
    while (parent_[a] != a) {
      parent_[a] = parent_[parent_[a]];
      a = parent_[a];
    }
    return a;
  }
  void unite(std::size_t child, std::size_t into) { parent_[find(child)] = find(into); }

 private:
  std::vector<std::size_t> parent_;
};

Segmentation fold_small_components(const Segmentation& components, std::size_t min_size) {
  const std::uint32_t n = components.num_regions();
  auto sizes = components.region_sizes();
  std::vector<std::vector<RegionId>> neighbors(n);
  const Extent extent = components.extent();
  for (std::size_t i = 0; i < components.size(); ++i) {
    const RegionId a = components[i];
    for_each_neighbor(extent, i, [&](std::size_t j) {
      const RegionId b = components[j];
      if (a != b) neighbors[a].push_back(b);
    });
  }
  DisjointSets sets(n);
  std::vector<std::size_t> merged_size(sizes.begin(), sizes.end());
  for (RegionId c = 0; c < n; ++c) {
    const std::size_t root = sets.find(c);
    if (merged_size[root] >= min_size) continue;
    std::size_t best = root;
    std::size_t best_size = 0;
    for (RegionId nb : neighbors[c]) {
      const std::size_t other = sets.find(nb);
      if (other == root) continue;
      if (merged_size[other] > best_size || (merged_size[other] == best_size && other < best)) {
        best = other;
        best_size = merged_size[other];
      }
    }
    if (best == root) continue;
    sets.unite(root, best);
    merged_size[best] += merged_size[root];
  }
  std::vector<RegionId> ids(components.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<RegionId>(sets.find(components[i]));
  return Segmentation::densify(extent, ids);
}

}  // namespace

Segmentation slic(const RgbImage& image, const SlicConfig& cfg) {
  if (cfg.target_region_size < 1) throw InvariantError("slic: target_region_size must be >= 1");
  if (cfg.iterations < 1) throw InvariantError("slic: iterations must be >= 1");
  const Extent extent = image.extent();
  if (extent.area() == 0) throw InvariantError("slic: empty image");
  if (cfg.target_region_size > extent.area()) throw InvariantError("slic: target_region_size exceeds image area");

  const std::size_t w = extent.width, h = extent.height, n = extent.area();
  std::vector<Lab> lab(n);
  for (std::size_t i = 0; i < n; ++i) lab[i] = rgb_to_lab(image.pixel(i));
  if (cfg.smoothing > 0) median_filter(lab, w, h, static_cast<int>(cfg.smoothing));

  const double step = std::sqrt(static_cast<double>(cfg.target_region_size));
  const std::size_t nx = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(w / step)));
  const std::size_t ny = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(h / step)));

  std::vector<Center> centers;
  centers.reserve(nx * ny);
  for (std::size_t j = 0; j < ny; ++j) {
    const std::size_t y0 = j * h / ny, y1 = (j + 1) * h / ny;
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t x0 = i * w / nx, x1 = (i + 1) * w / nx;
      Center c;
      c.x = (static_cast<double>(x0 + x1) - 1.0) / 2.0;
      c.y = (static_cast<double>(y0 + y1) - 1.0) / 2.0;
      const auto px = static_cast<std::size_t>(std::floor(c.x + 0.5));
      const auto py = static_cast<std::size_t>(std::floor(c.y + 0.5));
      c.color = lab[std::min(py, h - 1) * w + std::min(px, w - 1)];
      centers.push_back(c);
    }
  }

  const double spatial_weight = (cfg.compactness / step) * (cfg.compactness / step);
  const auto distance = [&](const Center& c, std::size_t idx) {
    const double x = static_cast<double>(idx % w), y = static_cast<double>(idx / w);
    double dc = 0.0;
    for (int k = 0; k < 3; ++k) dc += (lab[idx][k] - c.color[k]) * (lab[idx][k] - c.color[k]);
    const double ds = (x - c.x) * (x - c.x) + (y - c.y) * (y - c.y);
    return dc + ds * spatial_weight;
  };

  constexpr std::uint32_t kUnassigned = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> labels(n, kUnassigned);
  std::vector<double> best(n);
  const double radius = std::ceil(step);

  for (std::uint32_t iter = 0; iter < cfg.iterations; ++iter) {
    std::fill(best.begin(), best.end(), std::numeric_limits<double>::infinity());
    std::fill(labels.begin(), labels.end(), kUnassigned);
    for (std::uint32_t k = 0; k < centers.size(); ++k) {
      const Center& c = centers[k];
      const auto xlo = static_cast<std::ptrdiff_t>(std::max(0.0, std::floor(c.x - radius)));
      const auto xhi = static_cast<std::ptrdiff_t>(std::min<double>(w - 1, std::ceil(c.x + radius)));
      const auto ylo = static_cast<std::ptrdiff_t>(std::max(0.0, std::floor(c.y - radius)));
      const auto yhi = static_cast<std::ptrdiff_t>(std::min<double>(h - 1, std::ceil(c.y + radius)));
      for (std::ptrdiff_t y = ylo; y <= yhi; ++y) {
        for (std::ptrdiff_t x = xlo; x <= xhi; ++x) {
          const std::size_t idx = static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x);
          const double d = distance(c, idx);
          if (d < best[idx]) {
            best[idx] = d;
            labels[idx] = k;
          }
        }
      }
    }
    // Pixels outside every window fall back to the globally nearest center.
    for (std::size_t idx = 0; idx < n; ++idx) {
      if (labels[idx] != kUnassigned) continue;
      for (std::uint32_t k = 0; k < centers.size(); ++k) {
        const double d = distance(centers[k], idx);
        if (d < best[idx]) {
          best[idx] = d;
          labels[idx] = k;
        }
      }
    }

    std::vector<std::array<double, 5>> sums(centers.size(), {0, 0, 0, 0, 0});
    std::vector<std::size_t> counts(centers.size(), 0);
    for (std::size_t idx = 0; idx < n; ++idx) {
      auto& s = sums[labels[idx]];
      for (int k = 0; k < 3; ++k) s[k] += lab[idx][k];
      s[3] += static_cast<double>(idx % w);
      s[4] += static_cast<double>(idx / w);
      ++counts[labels[idx]];
    }
    for (std::size_t k = 0; k < centers.size(); ++k) {
      if (counts[k] == 0) continue;
      const double inv = 1.0 / static_cast<double>(counts[k]);
      centers[k].color = {sums[k][0] * inv, sums[k][1] * inv, sums[k][2] * inv};
      centers[k].x = sums[k][3] * inv;
      centers[k].y = sums[k][4] * inv;
    }
  }

  const Segmentation components = connected_components(extent, labels);
  const std::size_t min_size = std::max<std::size_t>(1, cfg.target_region_size / 4);
  return fold_small_components(components, min_size);
}

Segmentation grid_segmentation(std::uint32_t width, std::uint32_t height, std::uint32_t cell) {
  if (cell < 1) throw InvariantError("grid_segmentation: cell must be >= 1");
  const std::uint32_t cols = (width + cell - 1) / cell;
  std::vector<RegionId> ids(std::size_t{width} * height);
  for (std::uint32_t y = 0; y < height; ++y) {
    for (std::uint32_t x = 0; x < width; ++x) ids[std::size_t{y} * width + x] = (y / cell) * cols + x / cell;
  }
  return Segmentation({width, height}, std::move(ids));
}

Segmentation connected_components(Extent extent, std::span<const std::uint32_t> values) {
  const std::size_t n = extent.area();
  if (values.size() != n) throw InvariantError("connected_components: value count != width*height");
  constexpr RegionId kUnlabeled = std::numeric_limits<RegionId>::max();
  std::vector<RegionId> ids(n, kUnlabeled);
  std::vector<std::size_t> stack;
  RegionId next = 0;
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (ids[seed] != kUnlabeled) continue;
    const std::uint32_t value = values[seed];
    ids[seed] = next;
    stack.push_back(seed);
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      for_each_neighbor(extent, cur, [&](std::size_t nb) {
        if (ids[nb] == kUnlabeled && values[nb] == value) {
          ids[nb] = next;
          stack.push_back(nb);
        }
      });
    }
    ++next;
  }
  return Segmentation(extent, std::move(ids));
}

Segmentation enforce_connectivity(const Segmentation& seg) {
  const Segmentation components = connected_components(seg.extent(), seg.ids());
  std::vector<RegionId> component_to_region(components.num_regions());
  std::vector<bool> claimed(seg.num_regions(), false);
  std::vector<bool> seen(components.num_regions(), false);
  RegionId next_new = seg.num_regions();
  for (std::size_t i = 0; i < seg.size(); ++i) {
    const RegionId comp = components[i];
    if (seen[comp]) continue;
    seen[comp] = true;
    const RegionId original = seg[i];
    if (!claimed[original]) {
      claimed[original] = true;
      component_to_region[comp] = original;
    } else {
      component_to_region[comp] = next_new++;
    }
  }
  std::vector<RegionId> ids(seg.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = component_to_region[components[i]];
  return Segmentation(seg.extent(), std::move(ids));
}

}  // namespace spal
