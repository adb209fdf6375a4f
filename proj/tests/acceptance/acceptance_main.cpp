// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Runs entirely on synthetic data in a scratch directory.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "cli.hpp"
#include "spal/distribution.hpp"
#include "spal/loop.hpp"
#include "spal/merge.hpp"
#include "spal/metrics.hpp"
#include "spal/oracle.hpp"
#include "spal/region.hpp"
#include "spal/sieve.hpp"
#include "spal/superpixel.hpp"
#include "spal/synthetic.hpp"
#include "test_support.hpp"

namespace spal {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects failed checks; the first few messages are kept for the report.
class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (failures_ <= 3) messages_ += (messages_.empty() ? "" : "; ") + what;
  }
  Outcome outcome(const std::string& summary) const {
    if (failures_ == 0) return {true, summary};
    return {false, summary + " | " + std::to_string(failures_) + " failed: " + messages_};
  }

 private:
  int failures_ = 0;
  std::string messages_;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream out;
  out.precision(precision);
  out << v;
  return out.str();
}

// Dataset of the end-to-end criteria: 20 pool images plus 10 held out.
LoopConfig loop_config(const fs::path& root, const std::string& name, std::uint64_t seed) {
  LoopConfig cfg;
  cfg.name = name;
  cfg.manifest = root / ("data_" + std::to_string(seed)) / "manifest.json";
  cfg.runs_dir = root / "runs";
  cfg.budget = 40;
  cfg.rounds = 3;
  cfg.seed = seed;
  return cfg;
}

void ensure_dataset(const fs::path& root, std::uint64_t seed) {
  const auto dir = root / ("data_" + std::to_string(seed));
  if (!fs::exists(dir / "manifest.json")) write_synthetic_dataset(dir, 20, 10, seed);
}

Outcome metric_identity() {
  Checker check;
  Rng rng(101);
  for (int trial = 0; trial < 50; ++trial) {
    const std::uint32_t w = 8 + rng.below(25), h = 8 + rng.below(25);
    const Segmentation s = trial % 2 ? testing::random_segmentation(rng, w, h, 1 + rng.below(30))
                                     : testing::random_blocky_segmentation(rng, w, h, 1 + rng.below(5), 12);
    const MetricReport r = evaluate_superpixels(s, s);
    for (double v : {r.sg.asa, r.sg.ap, r.sg.ar, r.sg.af, r.gs.asa, r.gs.ap, r.gs.ar, r.gs.af}) {
      check.expect(std::abs(v - 1.0) <= 1e-12, "trial " + std::to_string(trial) + " metric " + fmt(v, 17));
    }
  }
  return check.outcome("50 segmentations, 8 metrics each equal 1");
}

Outcome metric_oracle() {
  Checker check;
  Rng rng(202);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Segmentation s = testing::random_segmentation(rng, 8, 8, 1 + rng.below(12));
    const Segmentation g = testing::random_segmentation(rng, 8, 8, 1 + rng.below(12));
    const MetricReport r = evaluate_superpixels(s, g);
    const auto sg = testing::naive_achievable(s, g), gs = testing::naive_achievable(g, s);
    const double diffs[] = {r.sg.asa - sg.asa, r.sg.ap - sg.ap, r.sg.ar - sg.ar, r.sg.af - sg.af,
                            r.gs.asa - gs.asa, r.gs.ap - gs.ap, r.gs.ar - gs.ar, r.gs.af - gs.af};
    for (double d : diffs) {
      worst = std::max(worst, std::abs(d));
      check.expect(std::abs(d) <= 1e-12, "trial " + std::to_string(trial) + " diff " + fmt(d));
    }
  }
  return check.outcome("200 random 8x8 pairs, max |diff| " + fmt(worst));
}

Outcome js_contract() {
  Checker check;
  Rng rng(303);
  for (int i = 0; i < 1000; ++i) {
    const std::uint32_t c = 2 + rng.below(6);
    const auto p = testing::random_distribution(rng, c), q = testing::random_distribution(rng, c);
    check.expect(std::abs(js_distance(p, q) - js_distance(q, p)) <= 1e-12, "asymmetric");
    check.expect(std::abs(js_distance(p, p)) <= 1e-12, "nonzero on equal inputs");
  }
  const double bound = std::sqrt(std::log(2.0));
  for (std::uint32_t c = 2; c <= 8; ++c) {
    // Split the support into two disjoint halves with random masses.
    std::vector<double> p(c, 0.0), q(c, 0.0);
    double sp = 0, sq = 0;
    for (std::uint32_t k = 0; k < c; ++k) {
      auto& target = k < c / 2 ? p : q;
      target[k] = 0.1 + rng.uniform();
      (k < c / 2 ? sp : sq) += target[k];
    }
    for (auto& v : p) v /= sp;
    for (auto& v : q) v /= sq;
    const double d = js_distance(p, q);
    check.expect(std::abs(d - bound) <= 1e-9, "disjoint support gave " + fmt(d, 12));
  }
  int violations = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::uint32_t c = 2 + rng.below(5);
    const auto a = testing::random_distribution(rng, c), b = testing::random_distribution(rng, c),
               m = testing::random_distribution(rng, c);
    if (js_distance(a, b) > js_distance(a, m) + js_distance(m, b) + 1e-12) ++violations;
  }
  check.expect(violations == 0, std::to_string(violations) + " triangle violations");
  return check.outcome("max sqrt(ln 2)=" + fmt(bound, 10) + ", 10000 triples, " + std::to_string(violations) +
                       " triangle violations");
}

// Root of every input region: the region that absorbed it, or itself.
std::vector<RegionId> roots_of(const MergeResult& r, std::size_t regions) {
  std::vector<RegionId> root(regions);
  for (RegionId i = 0; i < regions; ++i) root[i] = i;
  for (const auto& e : r.events) root[e.absorbed] = e.root;
  return root;
}

Outcome merge_contracts() {
  Checker check;
  Rng rng(404);
  // (a) and (b)
  for (int i = 0; i < 20; ++i) {
    const Segmentation seg = enforce_connectivity(testing::random_blocky_segmentation(rng, 16, 16, 2, 25));
    const ProbMap probs = testing::random_prob_map(rng, seg.extent(), 2 + rng.below(4));
    MergeConfig zero;
    zero.epsilon = 0.0;
    check.expect(adaptive_merge(seg, probs, zero) == seg, "epsilon 0 changed the partition");
    MergeConfig wide;
    wide.epsilon = 0.9;
    wide.merge_fraction = 1.0;
    check.expect(adaptive_merge(seg, probs, wide).num_regions() == 1, "epsilon 0.9 left several regions");
  }
  // (c) exhaustive pair checks on 16x16 instances
  std::size_t pairs = 0;
  for (int i = 0; i < 40; ++i) {
    const Segmentation seg = testing::random_blocky_segmentation(rng, 16, 16, 2, 30);
    const ProbMap probs = testing::random_prob_map(rng, seg.extent(), 3, 0.4);
    MergeConfig cfg;
    cfg.epsilon = 0.05 + 0.25 * rng.uniform();
    cfg.merge_fraction = 0.2 + 0.8 * rng.uniform();
    const auto stats = region_stats(seg, probs);
    const MergeResult r = adaptive_merge_detailed(seg, build_region_graph(seg), stats, cfg);
    const auto root = roots_of(r, seg.num_regions());
    for (RegionId a = 0; a < seg.num_regions(); ++a) {
      const double to_root = js_distance(stats[a].mean_prob, stats[root[a]].mean_prob);
      check.expect(a == root[a] || to_root < cfg.epsilon, "member farther than epsilon from its root");
      for (RegionId b = a + 1; b < seg.num_regions(); ++b) {
        if (r.membership[a] != r.membership[b]) continue;
        ++pairs;
        check.expect(js_distance(stats[a].mean_prob, stats[b].mean_prob) < 2 * cfg.epsilon,
                     "intra-region pair farther than 2 epsilon");
      }
    }
  }
  // (d)
  for (int i = 0; i < 100; ++i) {
    const Segmentation seg = testing::random_blocky_segmentation(rng, 16, 16, 2, 30);
    const ProbMap probs = testing::random_prob_map(rng, seg.extent(), 3, 0.5);
    MergeConfig bfs;
    bfs.epsilon = 0.05 + 0.3 * rng.uniform();
    bfs.merge_fraction = 0.1 + 0.9 * rng.uniform();
    MergeConfig dfs = bfs;
    dfs.exploration = Exploration::kDepthFirst;
    check.expect(adaptive_merge(seg, probs, bfs) == adaptive_merge(seg, probs, dfs), "BFS and DFS differ");
  }
  return check.outcome("identity, single region, " + std::to_string(pairs) + " intra pairs, 100 BFS/DFS instances");
}

Outcome merge_trends(const fs::path& root) {
  Checker check;
  const double epsilons[] = {0.05, 0.10, 0.15};
  // [criterion][epsilon] -> correct / total counts pooled over seeds
  double correct[2][3] = {}, total[2][3] = {};
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ensure_dataset(root, seed);
    auto loop = ActiveLearningLoop::create(loop_config(root, "trend_" + std::to_string(seed), seed));
    loop.run_to_completion();
    // The models that drive merging in rounds 1..3.
    for (std::uint32_t t = 0; t < 3; ++t) {
      const ModelParams model = load_model(loop.model_path(t));
      for (ImageId id : loop.train_ids()) {
        const ProbMap probs = predict(model, loop.features(id));
        const Segmentation& base = loop.base_segmentation(id);
        for (int c = 0; c < 2; ++c) {
          for (int e = 0; e < 3; ++e) {
            MergeConfig cfg;
            cfg.criterion = c == 0 ? MergeCriterion::kJensenShannon : MergeCriterion::kEuclidean;
            cfg.epsilon = epsilons[e];
            const MergeResult r = adaptive_merge_detailed(base, probs, cfg);
            if (r.events.empty()) continue;
            try {
              const double rate = merge_correctness(r.events, base, loop.ground_truth(id));
              correct[c][e] += rate * static_cast<double>(r.events.size());
              total[c][e] += static_cast<double>(r.events.size());
            } catch (const Error&) {
              // every event touched an all-ignore region
            }
          }
        }
      }
    }
  }
  double rate[2][3];
  for (int c = 0; c < 2; ++c) {
    for (int e = 0; e < 3; ++e) rate[c][e] = total[c][e] > 0 ? correct[c][e] / total[c][e] : 1.0;
  }
  const double js_mean = (rate[0][0] + rate[0][1] + rate[0][2]) / 3.0;
  const double ed_mean = (rate[1][0] + rate[1][1] + rate[1][2]) / 3.0;
  check.expect(js_mean >= ed_mean, "JS correctness below ED");
  for (int c = 0; c < 2; ++c) {
    for (int e = 1; e < 3; ++e) {
      check.expect(rate[c][e] <= rate[c][e - 1] + 0.01,
                   std::string(c == 0 ? "JS" : "ED") + " correctness rose at eps " + fmt(epsilons[e]));
    }
  }
  std::string detail = "JS " + fmt(js_mean) + " vs ED " + fmt(ed_mean) + "; JS by eps";
  for (int e = 0; e < 3; ++e) detail += " " + fmt(rate[0][e]);
  detail += "; ED by eps";
  for (int e = 0; e < 3; ++e) detail += " " + fmt(rate[1][e]);
  return check.outcome(detail);
}

Outcome kneedle_contract() {
  Checker check;
  std::vector<double> y(101);
  for (int i = 0; i <= 100; ++i) y[i] = std::sqrt(i / 100.0);
  const auto knee = kneedle(y);
  check.expect(knee && *knee >= 24 && *knee <= 26, "sqrt knee at " + (knee ? std::to_string(*knee) : "none"));
  check.expect(!kneedle(std::vector<double>(20, 0.7)), "flat curve has a knee");

  Rng rng(606);
  for (int trial = 0; trial < 500; ++trial) {
    const std::uint32_t n = 1 + static_cast<std::uint32_t>(rng.below(80));
    std::vector<float> planes(2 * n);
    for (std::uint32_t i = 0; i < n; ++i) {
      const float conf = trial % 10 == 0 ? 0.6f : static_cast<float>(rng.uniform());
      planes[i] = conf;
      planes[n + i] = 1.0f - conf;
    }
    const ProbMap probs({n, 1}, 2, std::move(planes));
    std::vector<PixelIndex> pixels(n);
    for (PixelIndex i = 0; i < n; ++i) pixels[i] = i;
    QueryRecord q;
    q.pixels = pixels;
    q.status = QueryStatus::kAnswered;
    q.answer = 0;
    const auto result = sieve_superpixel(pixels, 0, probs, {20, 5});
    check.expect(!result.kept_pixels.empty(), "empty kept set");
    if (trial % 10 == 0) check.expect(result.keep_all(), "flat superpixel was sieved");
    const ProbLookup lookup = [&](ImageId) -> const ProbMap& { return probs; };
    for (const auto& rec : build_sieved_dataset(std::vector<QueryRecord>{q}, lookup, {20, 5}).records) {
      check.expect(rec.label == 0, "kept pixel not labeled with the dominant class");
    }
  }
  return check.outcome("sqrt knee at index " + (knee ? std::to_string(*knee) : "none") + ", 500 sieved regions");
}

// Fraction of sieved-dataset pixels whose label disagrees with ground truth.
double noise_fraction(const SievedDataset& data, const std::function<const LabelMap&(ImageId)>& gt) {
  std::size_t wrong = 0;
  for (const auto& r : data.records) wrong += gt(r.image_id)[r.pixel] != r.label;
  return static_cast<double>(wrong) / static_cast<double>(data.size());
}

Outcome sieving_effect(const fs::path& root) {
  Checker check;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ensure_dataset(root, seed);
    const Dataset ds = Dataset::load(root / ("data_" + std::to_string(seed)) / "manifest.json");
    const auto train_images = ds.split(Split::kTrain);
    std::map<ImageId, LabelMap> gt;
    std::map<ImageId, FeatureImage> features;
    SievedDataset full;
    for (const auto& image : train_images) {
      gt.emplace(image.id, ds.load_labels(image.id));
      features.emplace(image.id, compute_features(ds.load_image(image.id), {}));
      const LabelMap& labels = gt.at(image.id);
      for (PixelIndex p = 0; p < labels.size(); ++p) {
        if (labels[p] != labels.ignore_id()) full.records.push_back({image.id, p, labels[p]});
      }
    }
    // A confident model: trained on every ground-truth pixel.
    TrainConfig tc;
    tc.seed = seed;
    const FeatureLookup feature_of = [&](ImageId id) -> const FeatureImage& { return features.at(id); };
    const ModelParams model = train(full, feature_of, ds.num_classes(), tc).params;
    std::map<ImageId, ProbMap> probs;
    for (const auto& image : train_images) probs.emplace(image.id, predict(model, features.at(image.id)));

    // Large grid cells that straddle a class boundary, answered by the oracle.
    std::vector<QueryRecord> queries;
    for (const auto& image : train_images) {
      const LabelMap& labels = gt.at(image.id);
      const Segmentation cells = grid_segmentation(labels.extent().width, labels.extent().height, 16);
      const auto region_pixels = cells.region_pixels();
      for (const auto& pixels : region_pixels) {
        const auto answer = answer_query(pixels, labels);
        if (!answer || answer->noise_rate == 0.0) continue;
        QueryRecord q;
        q.query_id = static_cast<std::uint32_t>(queries.size());
        q.image_id = image.id;
        q.pixels = pixels;
        q.status = QueryStatus::kAnswered;
        q.answer = answer->dominant;
        queries.push_back(std::move(q));
      }
    }
    const ProbLookup prob_of = [&](ImageId id) -> const ProbMap& { return probs.at(id); };
    const auto gt_of = [&](ImageId id) -> const LabelMap& { return gt.at(id); };
    const double sieved = noise_fraction(build_sieved_dataset(queries, prob_of, {5, 5}, true), gt_of);
    const double unsieved = noise_fraction(build_sieved_dataset(queries, prob_of, {5, 5}, false), gt_of);
    check.expect(sieved < unsieved, "seed " + std::to_string(seed) + " sieving did not reduce noise");
    detail += (detail.empty() ? "" : ", ") + fmt(unsieved, 3) + "->" + fmt(sieved, 3);
  }
  return check.outcome("noise without->with sieving per seed: " + detail);
}

std::string file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome end_to_end(const fs::path& root) {
  Checker check;
  double full_sum = 0, random_sum = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ensure_dataset(root, seed);
    auto full = ActiveLearningLoop::create(loop_config(root, "full_" + std::to_string(seed), seed));
    full.run_to_completion();
    LoopConfig baseline = loop_config(root, "random_" + std::to_string(seed), seed);
    baseline.merge = false;
    baseline.sieve = false;
    baseline.selection = SelectionPolicy::kRandom;
    auto random = ActiveLearningLoop::create(baseline);
    random.run_to_completion();
    full_sum += full.state().history.back().val_miou;
    random_sum += random.state().history.back().val_miou;
    check.expect(full.state().clicks_spent() == 4 * 40, "clicks spent " + std::to_string(full.state().clicks_spent()));

    if (seed == 1) {
      auto again = ActiveLearningLoop::create(loop_config(root, "repeat_1", seed));
      again.run_to_completion();
      check.expect(file_bytes(again.model_path(3)) == file_bytes(full.model_path(3)), "final models differ");
    }
  }
  const double full_mean = full_sum / 5, random_mean = random_sum / 5;
  check.expect(full_mean >= random_mean - 0.02, "full pipeline below random baseline");
  return check.outcome("mean val mIoU full " + fmt(full_mean) + " vs random " + fmt(random_mean) +
                       ", same-seed final models identical");
}

Outcome trainer_numerics() {
  Checker check;
  Rng rng(909);
  const std::uint32_t dim = 8, classes = 4;
  const std::size_t n = 64;
  std::vector<double> x(n * dim);
  for (auto& v : x) v = rng.uniform();
  std::vector<ClassId> y(n);
  for (auto& v : y) v = static_cast<ClassId>(rng.below(classes));
  std::vector<double> w((dim + 1) * classes);
  for (auto& v : w) v = rng.uniform(-2, 2);
  std::vector<double> grad;
  cross_entropy(w, dim, classes, x, y, &grad);
  double worst = 0.0;
  for (int probe = 0; probe < 100; ++probe) {
    const std::size_t k = rng.below(w.size());
    const double h = 1e-5;
    auto plus = w, minus = w;
    plus[k] += h;
    minus[k] -= h;
    const double numeric =
        (cross_entropy(plus, dim, classes, x, y) - cross_entropy(minus, dim, classes, x, y)) / (2 * h);
    const double rel = std::abs(grad[k] - numeric) / std::max({std::abs(grad[k]), std::abs(numeric), 1e-8});
    worst = std::max(worst, rel);
  }
  check.expect(worst <= 1e-4, "gradient relative error " + fmt(worst));

  ModelParams model = ModelParams::zeros(dim, classes);
  double worst_sum = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    for (auto& v : model.weights) v = static_cast<float>(rng.uniform(-20, 20));
    FeatureImage f;
    f.extent = {16, 16};
    f.dim = dim;
    f.values.resize(256 * dim);
    for (auto& v : f.values) v = rng.uniform();
    const ProbMap p = predict(model, f);
    for (std::size_t i = 0; i < p.pixel_count(); ++i) {
      double sum = 0;
      for (std::uint32_t c = 0; c < classes; ++c) sum += p.at(c, i);
      worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
    }
  }
  check.expect(worst_sum <= 1e-6, "softmax sum off by " + fmt(worst_sum));
  return check.outcome("max gradient rel error " + fmt(worst, 3) + ", max |sum-1| " + fmt(worst_sum, 3));
}

// Plain 4-connected flood fill over equal label values.
std::uint32_t flood_fill_count(const LabelMap& gt) {
  const auto [w, h] = gt.extent();
  std::vector<bool> seen(gt.size(), false);
  std::uint32_t count = 0;
  for (std::size_t start = 0; start < gt.size(); ++start) {
    if (seen[start]) continue;
    ++count;
    std::vector<std::size_t> stack{start};
    seen[start] = true;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      const std::size_t x = i % w, y = i / w;
      const std::size_t next[4] = {x > 0 ? i - 1 : i, x + 1 < w ? i + 1 : i, y > 0 ? i - w : i,
                                   y + 1 < h ? i + w : i};
      for (std::size_t j : next) {
        if (!seen[j] && gt[j] == gt[i]) {
          seen[j] = true;
          stack.push_back(j);
        }
      }
    }
  }
  return count;
}

Outcome oracle_cases() {
  Checker check;
  auto run_case = [&](const std::string& name, const LabelMap& gt, std::uint32_t expected) {
    const auto regions = oracle_superpixels(gt);
    const auto got = regions.segmentation.num_regions();
    check.expect(got == expected && got == flood_fill_count(gt),
                 name + ": got " + std::to_string(got) + ", flood fill " + std::to_string(flood_fill_count(gt)));
  };
  // Class 1 building cut by a one-pixel class 2 pole on class 0 sky.
  {
    std::vector<ClassId> data(12 * 10, 0);
    for (std::uint32_t y = 3; y < 10; ++y) {
      for (std::uint32_t x = 2; x < 10; ++x) data[y * 12 + x] = 1;
    }
    for (std::uint32_t y = 0; y < 10; ++y) data[y * 12 + 6] = 2;
    const LabelMap gt({12, 10}, data, 3, 255);
    run_case("building split by pole", gt, 5);
    const auto seg = oracle_superpixels(gt).segmentation;
    check.expect(seg[5 * 12 + 3] != seg[5 * 12 + 8], "building halves share a superpixel");
  }
  // Two trees of the same class separated by road.
  {
    std::vector<ClassId> data(10 * 4, 0);
    for (std::uint32_t y = 1; y < 3; ++y) {
      data[y * 10 + 1] = data[y * 10 + 2] = 3;
      data[y * 10 + 7] = data[y * 10 + 8] = 3;
    }
    run_case("disconnected trees", LabelMap({10, 4}, data, 4, 255), 3);
  }
  // Diagonal touch is not a connection.
  run_case("diagonal", LabelMap({2, 2}, {1, 0, 0, 1}, 2, 255), 4);
  run_case("uniform", LabelMap({5, 3}, std::vector<ClassId>(15, 1), 2, 255), 1);
  // Ignore pixels form their own components.
  run_case("void stripe", LabelMap({5, 1}, {0, 255, 0, 255, 0}, 2, 255), 5);
  Rng rng(1010);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ClassId> data(12 * 12);
    for (auto& c : data) c = static_cast<ClassId>(rng.below(3));
    const LabelMap gt({12, 12}, data, 3, 255);
    check.expect(oracle_superpixels(gt).segmentation.num_regions() == flood_fill_count(gt), "random map mismatch");
  }
  return check.outcome("5 crafted masks and 50 random maps match flood fill");
}

Outcome correlation_utility(const fs::path& root) {
  Checker check;
  const std::vector<double> xs{1, 2, 3, 4};
  check.expect(std::abs(pearson_correlation(xs, std::vector<double>{2, 1, 4, 3}) - 0.6) <= 1e-12, "pearson 0.6");
  check.expect(std::abs(pearson_correlation(xs, std::vector<double>{10, 20, 30, 40}) - 1.0) <= 1e-12, "pearson 1");
  check.expect(std::abs(pearson_correlation(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2}) - 0.5) <= 1e-12,
               "pearson 0.5");

  // Sweep the base superpixel size; score each base partition against the
  // oracle superpixels and record the loop's final mIoU.
  const std::uint32_t sizes[] = {16, 36, 64, 100, 144, 256};
  double af_sum = 0, asa_sum = 0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ensure_dataset(root, seed);
    const fs::path manifest = root / ("data_" + std::to_string(seed)) / "manifest.json";
    const Dataset ds = Dataset::load(manifest);
    std::ostringstream csv;
    csv.precision(17);
    csv << "base_size,asa_sg,ap_sg,ar_sg,af_sg,asa_gs,ap_gs,ar_gs,af_gs,mIoU\n";
    for (std::uint32_t size : sizes) {
      LoopConfig cfg = loop_config(root, "sweep_" + std::to_string(seed) + "_" + std::to_string(size), seed);
      cfg.slic.target_region_size = size;
      auto loop = ActiveLearningLoop::create(cfg);
      loop.run_to_completion();
      AchievableAccumulator sg, gs;
      for (ImageId id : loop.train_ids()) {
        const LabelMap& gt = loop.ground_truth(id);
        const auto valid = valid_mask(gt);
        const OverlapTable table = overlap_table(loop.base_segmentation(id), oracle_superpixels(gt).segmentation, valid);
        sg.add(table);
        gs.add(table, true);
      }
      const auto a = sg.pooled(), b = gs.pooled();
      csv << size << ',' << a.asa << ',' << a.ap << ',' << a.ar << ',' << a.af << ',' << b.asa << ',' << b.ap << ','
          << b.ar << ',' << b.af << ',' << loop.state().history.back().val_miou << '\n';
    }
    const fs::path csv_path = root / ("sweep_" + std::to_string(seed) + ".csv");
    std::ofstream(csv_path) << csv.str();

    std::ostringstream out, err;
    const int code = cli::run({"correlate", "--csv", csv_path.string(), "--score", "mIoU"}, out, err);
    check.expect(code == 0, "correlate failed: " + err.str());
    std::map<std::string, double> corr;
    std::istringstream lines(out.str());
    std::string line;
    std::getline(lines, line);  // header
    while (std::getline(lines, line)) {
      const auto comma = line.find(',');
      corr[line.substr(0, comma)] = std::stod(line.substr(comma + 1));
    }
    check.expect(corr.count("af_gs") && corr.count("asa_sg"), "correlate output lacks af_gs or asa_sg");
    af_sum += corr["af_gs"];
    asa_sum += corr["asa_sg"];
    per_seed += (per_seed.empty() ? "" : ", ") + fmt(corr["af_gs"], 3) + "/" + fmt(corr["asa_sg"], 3);
  }
  check.expect(af_sum / 5 > asa_sum / 5, "AF(G;S) does not outrank ASA(S;G)");
  return check.outcome("mean corr AF(G;S) " + fmt(af_sum / 5) + " vs ASA(S;G) " + fmt(asa_sum / 5) +
                       " (per seed " + per_seed + ")");
}

}  // namespace
}  // namespace spal

int main() {
  using namespace spal;
  const fs::path root = fs::temp_directory_path() / ("spal_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);

  struct Criterion {
    int id;
    const char* name;
    double limit_seconds;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "metric identity", 5, metric_identity},
      {2, "metric oracle equivalence", 10, metric_oracle},
      {3, "JS distance contract", 5, js_contract},
      {4, "merge contracts", 30, merge_contracts},
      {5, "merge correctness trends", 120, [&] { return merge_trends(root); }},
      {6, "kneedle", 1, kneedle_contract},
      {7, "sieving effect", 60, [&] { return sieving_effect(root); }},
      {8, "end-to-end loop", 120, [&] { return end_to_end(root); }},
      {9, "trainer numerics", 5, trainer_numerics},
      {10, "oracle superpixels", 1, oracle_cases},
      {11, "correlation utility", 0, [&] { return correlation_utility(root); }},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_seconds > 0 && seconds > c.limit_seconds) {
      outcome.pass = false;
      outcome.detail += " | over time limit " + fmt(c.limit_seconds) + " s";
    }
    failed += !outcome.pass;
    std::printf("criterion %2d %s  %-26s %7.2fs  %s\n", c.id, outcome.pass ? "PASS" : "FAIL", c.name, seconds,
                outcome.detail.c_str());
    std::fflush(stdout);
  }
  fs::remove_all(root);
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
