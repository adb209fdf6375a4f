#include "spal/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "binary_io.hpp"

namespace spal {

FeatureImage compute_features(const RgbImage& image, const FeatureSpec& spec) {
  const Extent extent = image.extent();
  const std::size_t w = extent.width, h = extent.height, n = extent.area();
  FeatureImage out;
  out.extent = extent;
  out.dim = spec.dim();
  out.values.resize(n * out.dim);

  const bool needs_local =
      std::any_of(spec.channels.begin(), spec.channels.end(), [](Feature f) { return f >= Feature::kLocalMeanR; });
  std::vector<double> local;
  if (needs_local) {
    local.resize(3 * n);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        double sum[3] = {0, 0, 0};
        int count = 0;
        for (std::size_t yy = (y > 0 ? y - 1 : 0); yy <= std::min(h - 1, y + 1); ++yy) {
          for (std::size_t xx = (x > 0 ? x - 1 : 0); xx <= std::min(w - 1, x + 1); ++xx) {
            const std::uint8_t* p = image.pixel(yy * w + xx);
            for (int k = 0; k < 3; ++k) sum[k] += p[k];
            ++count;
          }
        }
        for (int k = 0; k < 3; ++k) local[3 * (y * w + x) + k] = sum[k] / (255.0 * count);
      }
    }
  }

  const double x_scale = w > 1 ? 1.0 / static_cast<double>(w - 1) : 0.0;
  const double y_scale = h > 1 ? 1.0 / static_cast<double>(h - 1) : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* p = image.pixel(i);
    double* row = out.values.data() + i * out.dim;
    for (std::uint32_t d = 0; d < out.dim; ++d) {
      switch (spec.channels[d]) {
        case Feature::kR: row[d] = p[0] / 255.0; break;
        case Feature::kG: row[d] = p[1] / 255.0; break;
        case Feature::kB: row[d] = p[2] / 255.0; break;
        case Feature::kX: row[d] = static_cast<double>(i % w) * x_scale; break;
        case Feature::kY: row[d] = static_cast<double>(i / w) * y_scale; break;
        case Feature::kLocalMeanR: row[d] = local[3 * i]; break;
        case Feature::kLocalMeanG: row[d] = local[3 * i + 1]; break;
        case Feature::kLocalMeanB: row[d] = local[3 * i + 2]; break;
      }
    }
  }
  return out;
}

ModelParams ModelParams::zeros(std::uint32_t feature_dim, std::uint32_t num_classes) {
  ModelParams m;
  m.feature_dim = feature_dim;
  m.num_classes = num_classes;
  m.weights.assign(std::size_t{feature_dim + 1} * num_classes, 0.0f);
  return m;
}

namespace {

// Logits of one sample into `out`, then softmax in place.
template <typename W>
void softmax_row(std::span<const W> weights, std::uint32_t dim, std::uint32_t classes, std::span<const double> x,
                 std::span<double> out) {
  for (std::uint32_t c = 0; c < classes; ++c) out[c] = static_cast<double>(weights[std::size_t{dim} * classes + c]);
  for (std::uint32_t d = 0; d < dim; ++d) {
    const double xd = x[d];
    const std::size_t base = std::size_t{d} * classes;
    for (std::uint32_t c = 0; c < classes; ++c) out[c] += xd * static_cast<double>(weights[base + c]);
  }
  const double peak = *std::max_element(out.begin(), out.end());
  double total = 0.0;
  for (auto& v : out) {
    v = std::exp(v - peak);
    total += v;
  }
  for (auto& v : out) v /= total;
}

// Accumulates d(CE)/dW for one sample given its softmax output.
void accumulate_gradient(std::span<double> grad, std::uint32_t dim, std::uint32_t classes, std::span<const double> x,
                         std::span<const double> prob, ClassId label, double scale) {
  for (std::uint32_t c = 0; c < classes; ++c) {
    const double delta = (prob[c] - (c == label ? 1.0 : 0.0)) * scale;
    for (std::uint32_t d = 0; d < dim; ++d) grad[std::size_t{d} * classes + c] += x[d] * delta;
    grad[std::size_t{dim} * classes + c] += delta;
  }
}

}  // namespace

double cross_entropy(std::span<const double> weights, std::uint32_t feature_dim, std::uint32_t num_classes,
                     std::span<const double> features, std::span<const ClassId> labels,
                     std::vector<double>* gradient) {
  const std::size_t n = labels.size();
  if (n == 0) throw InvariantError("cross_entropy: no samples");
  if (features.size() != n * feature_dim) throw InvariantError("cross_entropy: feature matrix size mismatch");
  if (weights.size() != std::size_t{feature_dim + 1} * num_classes) throw InvariantError("cross_entropy: weight size");
  if (gradient) gradient->assign(weights.size(), 0.0);
  std::vector<double> prob(num_classes);
  double loss = 0.0;
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = features.subspan(i * feature_dim, feature_dim);
    softmax_row<double>(weights, feature_dim, num_classes, x, prob);
    loss -= std::log(std::max(prob[labels[i]], 1e-300));
    if (gradient) accumulate_gradient(*gradient, feature_dim, num_classes, x, prob, labels[i], scale);
  }
  return loss * scale;
}

TrainResult train(const SievedDataset& dataset, const FeatureLookup& features, std::uint32_t num_classes,
                  const TrainConfig& cfg) {
  if (dataset.empty()) throw InvariantError("train: empty dataset");
  if (num_classes < 2) throw InvariantError("train: need at least two classes");
  if (cfg.batch_size < 1) throw InvariantError("train: batch_size must be >= 1");

  const std::size_t n = dataset.size();
  const std::uint32_t dim = features(dataset.records.front().image_id).dim;
  std::vector<double> x(n * dim);
  std::vector<ClassId> y(n);
  std::set<ClassId> distinct;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = dataset.records[i];
    const FeatureImage& image = features(r.image_id);
    if (image.dim != dim) throw InvariantError("train: inconsistent feature dimension");
    if (r.pixel >= image.extent.area()) throw InvariantError("train: pixel index out of range");
    if (r.label >= num_classes) throw InvariantError("train: label out of range");
    std::copy_n(image.pixel(r.pixel).begin(), dim, x.begin() + static_cast<std::ptrdiff_t>(i * dim));
    y[i] = r.label;
    distinct.insert(r.label);
  }

  TrainResult result;
  result.status = distinct.size() < 2 ? TrainStatus::kSingleClass : TrainStatus::kOk;
  std::vector<double> w(std::size_t{dim + 1} * num_classes, 0.0);
  result.loss_history.push_back(cross_entropy(w, dim, num_classes, x, y));

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::vector<double> grad(w.size());
  std::vector<double> prob(num_classes);
  for (std::uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with raw engine output keeps the order identical across
    // standard library implementations.
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      const double scale = 1.0 / static_cast<double>(stop - start);
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t i = order[k];
        const auto xi = std::span<const double>(x).subspan(i * dim, dim);
        softmax_row<double>(w, dim, num_classes, xi, prob);
        accumulate_gradient(grad, dim, num_classes, xi, prob, y[i], scale);
      }
      for (std::size_t k = 0; k < w.size(); ++k) w[k] -= cfg.learning_rate * grad[k];
    }
    result.loss_history.push_back(cross_entropy(w, dim, num_classes, x, y));
  }

  result.params = ModelParams::zeros(dim, num_classes);
  for (std::size_t k = 0; k < w.size(); ++k) result.params.weights[k] = static_cast<float>(w[k]);
  return result;
}

ProbMap predict(const ModelParams& model, const FeatureImage& features) {
  if (features.dim != model.feature_dim) throw InvariantError("predict: feature dimension mismatch");
  const std::size_t n = features.extent.area();
  const std::uint32_t classes = model.num_classes;
  std::vector<float> planes(n * classes);
  std::vector<double> prob(classes);
  for (std::size_t i = 0; i < n; ++i) {
    softmax_row<float>(model.weights, model.feature_dim, classes, features.pixel(i), prob);
    for (std::uint32_t c = 0; c < classes; ++c) planes[c * n + i] = static_cast<float>(prob[c]);
  }
  return ProbMap(features.extent, classes, std::move(planes));
}

LabelMap argmax_labels(const ProbMap& probs, ClassId ignore_id) {
  std::vector<ClassId> labels(probs.pixel_count());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = probs.argmax(i);
  return LabelMap(probs.extent(), std::move(labels), static_cast<ClassId>(probs.num_classes()), ignore_id);
}

namespace {
constexpr char kModelMagic[4] = {'M', 'L', 'P', '1'};
}

void save_model(const ModelParams& model, const std::filesystem::path& path) {
  detail::ByteWriter out;
  out.magic(kModelMagic);
  out.u32(model.feature_dim);
  out.u32(model.num_classes);
  for (float v : model.weights) out.f32(v);
  detail::write_file(path, out.bytes());
}

ModelParams load_model(const std::filesystem::path& path) {
  detail::ByteReader in(detail::read_file(path), path);
  in.expect_magic(kModelMagic);
  ModelParams model;
  model.feature_dim = in.u32();
  model.num_classes = in.u32();
  model.weights.resize(std::size_t{model.feature_dim + 1} * model.num_classes);
  for (auto& v : model.weights) {
    v = in.f32();
    if (!std::isfinite(v)) throw FormatError(path.string() + ": non-finite weight");
  }
  in.expect_end();
  return model;
}

}  // namespace spal
