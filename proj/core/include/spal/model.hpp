#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "spal/raster.hpp"
#include "spal/sieve.hpp"

namespace spal {

enum class Feature : std::uint8_t { kR, kG, kB, kX, kY, kLocalMeanR, kLocalMeanG, kLocalMeanB };

/// Ordered per-pixel feature channels, each scaled to [0,1]. A constant bias
/// input is appended after the listed channels.
struct FeatureSpec {
  std::vector<Feature> channels{Feature::kR,          Feature::kG,          Feature::kB,
                                Feature::kX,          Feature::kY,          Feature::kLocalMeanR,
                                Feature::kLocalMeanG, Feature::kLocalMeanB};
  std::uint32_t dim() const { return static_cast<std::uint32_t>(channels.size()); }
};

/// Row-major (pixel x channel) feature matrix of one image, without bias.
struct FeatureImage {
  Extent extent;
  std::uint32_t dim = 0;
  std::vector<double> values;
  std::span<const double> pixel(std::size_t index) const {
    return std::span<const double>(values).subspan(index * dim, dim);
  }
};

FeatureImage compute_features(const RgbImage& image, const FeatureSpec& spec);

/// Multinomial logistic regression weights, (feature_dim + 1) x C row-major;
/// the last row holds the biases.
struct ModelParams {
  std::uint32_t feature_dim = 0;
  std::uint32_t num_classes = 0;
  std::vector<float> weights;

  static ModelParams zeros(std::uint32_t feature_dim, std::uint32_t num_classes);
  float& at(std::uint32_t row, std::uint32_t c) { return weights[std::size_t{row} * num_classes + c]; }
  float at(std::uint32_t row, std::uint32_t c) const { return weights[std::size_t{row} * num_classes + c]; }
  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

struct TrainConfig {
  double learning_rate = 0.5;
  std::uint32_t epochs = 20;
  std::uint32_t batch_size = 64;
  std::uint64_t seed = 0;
};

enum class TrainStatus { kOk, kSingleClass };

struct TrainResult {
  ModelParams params;
  TrainStatus status = TrainStatus::kOk;
  /// Mean training cross-entropy after each epoch (epochs + 1 entries; the
  /// first is at initialization).
  std::vector<double> loss_history;
};

using FeatureLookup = std::function<const FeatureImage&(ImageId)>;

/// Mini-batch SGD on softmax cross-entropy from zero weights. Deterministic
/// for a fixed seed.
TrainResult train(const SievedDataset& dataset, const FeatureLookup& features, std::uint32_t num_classes,
                  const TrainConfig& cfg);

ProbMap predict(const ModelParams& model, const FeatureImage& features);

/// Per-pixel argmax as a label map.
LabelMap argmax_labels(const ProbMap& probs, ClassId ignore_id);

/// Mean softmax cross-entropy of `weights` (layout as ModelParams, in double)
/// over samples; fills `gradient` when non-null. Exposed for gradient checks.
double cross_entropy(std::span<const double> weights, std::uint32_t feature_dim, std::uint32_t num_classes,
                     std::span<const double> features, std::span<const ClassId> labels,
                     std::vector<double>* gradient = nullptr);

// MLP1: "MLP1", u32 feature_dim, u32 C, (feature_dim + 1) * C float32.
void save_model(const ModelParams& model, const std::filesystem::path& path);
ModelParams load_model(const std::filesystem::path& path);

}  // namespace spal
