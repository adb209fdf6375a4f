#include "spal/sieve.hpp"

#include <algorithm>
#include <map>

#include "binary_io.hpp"

namespace spal {

std::optional<std::size_t> kneedle(std::span<const double> ascending) {
  const std::size_t n = ascending.size();
  if (n < 3) throw InvariantError("kneedle: need at least 3 values");
  if (!std::is_sorted(ascending.begin(), ascending.end())) throw InvariantError("kneedle: values must be ascending");
  const double lo = ascending.front();
  const double range = ascending.back() - lo;
  if (range < 1e-12) return std::nullopt;
  std::size_t best = 0;
  double best_diff = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x_hat = static_cast<double>(i) / static_cast<double>(n - 1);
    const double y_hat = (ascending[i] - lo) / range;
    const double diff = y_hat - x_hat;
    if (diff > best_diff) {
      best_diff = diff;
      best = i;
    }
  }
  // A straight line has zero difference up to rounding.
  if (best_diff <= 1e-12) return std::nullopt;
  return best;
}

SieveResult sieve_superpixel(std::span<const PixelIndex> pixels, ClassId dominant, const ProbMap& probs,
                             const SieveConfig& cfg) {
  if (pixels.empty()) throw InvariantError("sieve_superpixel: empty region");
  if (dominant >= probs.num_classes()) throw InvariantError("sieve_superpixel: dominant class out of range");
  if (cfg.sample_count < 3) throw InvariantError("sieve_superpixel: sample_count must be >= 3");

  SieveResult result;
  const std::size_t n = pixels.size();
  const std::size_t m = std::min<std::size_t>(cfg.sample_count, n);
  if (n < cfg.min_pixels_for_knee || m < 3) {
    result.kept_pixels.assign(pixels.begin(), pixels.end());
    return result;
  }

  std::vector<float> confidence(n);
  for (std::size_t i = 0; i < n; ++i) confidence[i] = probs.at(dominant, pixels[i]);
  std::vector<float> sorted = confidence;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> sample(m);
  for (std::size_t k = 0; k < m; ++k) sample[k] = sorted[k * (n - 1) / (m - 1)];

  const auto knee = kneedle(sample);
  if (!knee) {
    result.kept_pixels.assign(pixels.begin(), pixels.end());
    return result;
  }
  const float threshold = static_cast<float>(sample[*knee]);
  result.threshold = threshold;
  for (std::size_t i = 0; i < n; ++i) {
    if (confidence[i] >= threshold) result.kept_pixels.push_back(pixels[i]);
  }
  std::sort(result.kept_pixels.begin(), result.kept_pixels.end());
  return result;
}

SievedDataset build_sieved_dataset(std::span<const QueryRecord> queries, const ProbLookup& probs,
                                   const SieveConfig& cfg, bool sieve) {
  std::map<std::pair<ImageId, PixelIndex>, ClassId> labels;
  for (const auto& q : queries) {
    if (q.status != QueryStatus::kAnswered) continue;
    const ClassId label = *q.answer;
    std::vector<PixelIndex> kept;
    if (sieve) {
      kept = sieve_superpixel(q.pixels, label, probs(q.image_id), cfg).kept_pixels;
    } else {
      kept = q.pixels;
    }
    for (PixelIndex p : kept) {
      auto [it, inserted] = labels.try_emplace({q.image_id, p}, label);
      if (!inserted && it->second != label) {
        throw InvariantError("build_sieved_dataset: pixel " + std::to_string(p) + " of image " +
                             std::to_string(q.image_id) + " carries two labels");
      }
    }
  }
  SievedDataset dataset;
  dataset.records.reserve(labels.size());
  for (const auto& [key, label] : labels) dataset.records.push_back({key.first, key.second, label});
  return dataset;
}

namespace {
constexpr char kSievedMagic[4] = {'S', 'V', 'D', '1'};
}

void save_sieved_dataset(const SievedDataset& dataset, const std::filesystem::path& path) {
  detail::ByteWriter out;
  out.magic(kSievedMagic);
  out.u32(static_cast<std::uint32_t>(dataset.records.size()));
  for (const auto& r : dataset.records) {
    out.u32(r.image_id);
    out.u32(r.pixel);
    out.u16(r.label);
  }
  detail::write_file(path, out.bytes());
}

SievedDataset load_sieved_dataset(const std::filesystem::path& path) {
  detail::ByteReader in(detail::read_file(path), path);
  in.expect_magic(kSievedMagic);
  const std::uint32_t count = in.u32();
  if (in.remaining() != std::size_t{count} * 10) throw FormatError(path.string() + ": record payload size mismatch");
  SievedDataset dataset;
  dataset.records.resize(count);
  for (auto& r : dataset.records) {
    r.image_id = in.u32();
    r.pixel = in.u32();
    r.label = in.u16();
  }
  return dataset;
}

}  // namespace spal
