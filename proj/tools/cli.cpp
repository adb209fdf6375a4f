#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "spal/annotation_service.hpp"
#include "spal/config.hpp"
#include "spal/dataset.hpp"
#include "spal/loop.hpp"
#include "spal/merge.hpp"
#include "spal/metrics.hpp"
#include "spal/model.hpp"
#include "spal/oracle.hpp"
#include "spal/query.hpp"
#include "spal/sieve.hpp"
#include "spal/superpixel.hpp"
#include "spal/synthetic.hpp"

namespace spal::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// A file, or every file with `ext` in a directory, keyed by stem.
std::map<std::string, fs::path> collect(const fs::path& path, const std::string& ext) {
  std::map<std::string, fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ext) files[entry.path().stem().string()] = entry.path();
    }
  } else {
    if (!fs::exists(path)) throw Error("no such file: " + path.string());
    files[path.stem().string()] = path;
  }
  return files;
}

std::vector<DatasetImage> select_split(const Dataset& dataset, const std::string& split) {
  if (split == "all") return dataset.images();
  return dataset.split(split == "val" ? Split::kVal : Split::kTrain);
}

std::string fmt(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

const char* kMetricColumns[] = {"asa_sg", "ap_sg", "ar_sg", "af_sg", "asa_gs", "ap_gs", "ar_gs", "af_gs"};

void write_metric_row(std::ostream& out, const std::string& name, const AchievableScores& sg,
                      const AchievableScores& gs) {
  out << name << ',' << fmt(sg.asa) << ',' << fmt(sg.ap) << ',' << fmt(sg.ar) << ',' << fmt(sg.af) << ','
      << fmt(gs.asa) << ',' << fmt(gs.ap) << ',' << fmt(gs.ar) << ',' << fmt(gs.af) << '\n';
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return std::nullopt;
  return v;
}

void add_segment(CLI::App& app, std::function<void()>& action, std::ostream& out) {
  auto* cmd = app.add_subcommand("segment", "Compute base superpixels for dataset images");
  struct Opts {
    fs::path manifest, output;
    std::string algo = "slic", split = "all";
    SlicConfig slic;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--manifest", o->manifest, "Dataset manifest")->required();
  cmd->add_option("--algo", o->algo, "slic or grid")->check(CLI::IsMember({"slic", "grid"}));
  cmd->add_option("--size", o->slic.target_region_size, "Target pixels per superpixel")->check(CLI::PositiveNumber);
  cmd->add_option("--compactness", o->slic.compactness, "SLIC compactness");
  cmd->add_option("--iters", o->slic.iterations, "SLIC iterations");
  cmd->add_option("--smoothing", o->slic.smoothing, "Median filter radius before clustering (0 disables)")->check(CLI::Range(0, 8));
  cmd->add_option("--split", o->split, "train, val or all")->check(CLI::IsMember({"train", "val", "all"}));
  cmd->add_option("-o,--output", o->output, "Output directory for <id>.seg")->required();
  cmd->callback([&action, &out, o] {
    action = [&out, o] {
      const Dataset dataset = Dataset::load(o->manifest);
      const auto cell =
          std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::lround(std::sqrt(double(o->slic.target_region_size)))));
      for (const auto& entry : select_split(dataset, o->split)) {
        const RgbImage image = load_rgb_png(entry.image);
        const Segmentation seg =
            o->algo == "slic" ? slic(image, o->slic) : grid_segmentation(image.width(), image.height(), cell);
        save_segmentation(seg, o->output / (std::to_string(entry.id) + ".seg"));
        out << entry.id << ": " << seg.num_regions() << " regions\n";
      }
    };
  });
}

void add_merge(CLI::App& app, std::function<void()>& action, std::ostream& out) {
  auto* cmd = app.add_subcommand("merge", "Adaptively merge a base segmentation");
  struct Opts {
    fs::path seg, probs, output, events;
    MergeConfig cfg;
    std::string criterion = "js";
    bool dfs = false;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--seg", o->seg, "Base segmentation (SEG1)")->required();
  cmd->add_option("--probs", o->probs, "Class probabilities (PPF1)")->required();
  cmd->add_option("--epsilon", o->cfg.epsilon, "Merge threshold")->check(CLI::NonNegativeNumber);
  cmd->add_option("--fraction", o->cfg.merge_fraction, "Fraction of regions eligible as roots")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--criterion", o->criterion, "js or euclidean")->check(CLI::IsMember({"js", "euclidean"}));
  cmd->add_flag("--dfs", o->dfs, "Depth-first growth (partition is identical)");
  cmd->add_option("--events", o->events, "Write merge events as JSON");
  cmd->add_option("-o,--output", o->output, "Merged segmentation")->required();
  cmd->callback([&action, &out, o] {
    action = [&out, o] {
      o->cfg.criterion = o->criterion == "js" ? MergeCriterion::kJensenShannon : MergeCriterion::kEuclidean;
      o->cfg.exploration = o->dfs ? Exploration::kDepthFirst : Exploration::kBreadthFirst;
      const Segmentation base = load_segmentation(o->seg);
      const ProbMap probs = load_prob_map(o->probs);
      const MergeResult result = adaptive_merge_detailed(base, probs, o->cfg);
      save_segmentation(result.merged, o->output);
      if (!o->events.empty()) {
        json arr = json::array();
        for (const auto& e : result.events) arr.push_back({{"root", e.root}, {"absorbed", e.absorbed}});
        std::ofstream(o->events) << arr.dump(2) << '\n';
      }
      out << base.num_regions() << " -> " << result.merged.num_regions() << " regions\n";
    };
  });
}

void add_select(CLI::App& app, std::function<void()>& action, std::ostream& out) {
  auto* cmd = app.add_subcommand("select", "Rank and select a batch from a loop run");
  struct Opts {
    fs::path run, output;
    std::uint32_t round = 1;
    std::size_t budget = 40;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--run", o->run, "Run directory (holds state.json)")->required();
  cmd->add_option("--round", o->round, "Round t >= 1; uses the model of round t-1")->check(CLI::PositiveNumber);
  cmd->add_option("--budget", o->budget, "Batch size B")->check(CLI::PositiveNumber);
  cmd->add_option("-o,--output", o->output, "Batch manifest JSON (stdout when omitted)");
  cmd->callback([&action, &out, o] {
    action = [&out, o] {
      const auto loop = ActiveLearningLoop::resume(o->run / "state.json");
      json arr = json::array();
      for (const auto& c : loop.preview_batch(o->round, o->budget)) {
        arr.push_back({{"image_id", c.image_id},
                       {"region_id", c.region_id},
                       {"pixel_count", c.pixels.size()},
                       {"score", c.score}});
      }
      if (o->output.empty()) {
        out << arr.dump(2) << '\n';
      } else {
        std::ofstream(o->output) << arr.dump(2) << '\n';
      }
    };
  });
}

void add_sieve(CLI::App& app, std::function<void()>& action, std::ostream& out) {
  auto* cmd = app.add_subcommand("sieve", "Build the sieved training set from answered queries");
  struct Opts {
    fs::path queries, probs_dir, output;
    SieveConfig cfg;
    bool no_sieve = false;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--queries", o->queries, "Query records JSON")->required();
  cmd->add_option("--probs-dir", o->probs_dir, "Directory of <image_id>.ppf")->required();
  cmd->add_option("--sample-count", o->cfg.sample_count, "Confidence samples per superpixel")
      ->check(CLI::Range(3u, 1000000u));
  cmd->add_option("--min-pixels", o->cfg.min_pixels_for_knee, "Keep small superpixels whole");
  cmd->add_flag("--no-sieve", o->no_sieve, "Keep every pixel of each answered query");
  cmd->add_option("-o,--output", o->output, "Sieved dataset (SVD1)")->required();
  cmd->callback([&action, &out, o] {
    action = [&out, o] {
      const auto queries = load_queries(o->queries);
      std::map<ImageId, ProbMap> cache;
      const ProbLookup lookup = [&](ImageId id) -> const ProbMap& {
        auto it = cache.find(id);
        if (it == cache.end()) {
          const auto path = o->probs_dir / (std::to_string(id) + ".ppf");
          it = cache.emplace(id, load_prob_map(path)).first;
        }
        return it->second;
      };
      const SievedDataset data = build_sieved_dataset(queries, lookup, o->cfg, !o->no_sieve);
      save_sieved_dataset(data, o->output);
      out << data.size() << " labeled pixels\n";
    };
  });
}

void add_oracle(CLI::App& app, std::function<void()>& action, std::ostream& out) {
  auto* cmd = app.add_subcommand("oracle", "Oracle superpixels from ground-truth label maps");
  struct Opts {
    fs::path gt_dir, manifest, output;
    std::uint32_t num_classes = 0;
    std::uint32_t ignore_id = 255;
  };
  auto o = std::make_shared<Opts>();
  auto* gt = cmd->add_option("--gt-dir", o->gt_dir, "Directory of label PNGs");
  auto* manifest = cmd->add_option("--manifest", o->manifest, "Dataset manifest");
  gt->excludes(manifest);
  cmd->add_option("--num-classes", o->num_classes, "Class count (with --gt-dir)");
  cmd->add_option("--ignore-id", o->ignore_id, "Ignore label (with --gt-dir)");
  cmd->add_option("-o,--output", o->output, "Output directory for <stem>.seg")->required();
  cmd->callback([&action, &out, o, gt, manifest] {
    if (!*gt && !*manifest) throw CLI::RequiredError("--gt-dir or --manifest");
    if (*gt && o->num_classes < 2) throw CLI::ValidationError("--num-classes", "required with --gt-dir (>= 2)");
    action = [&out, o] {
      std::vector<std::pair<std::string, LabelMap>> maps;
      if (!o->manifest.empty()) {
        const Dataset dataset = Dataset::load(o->manifest);
        for (const auto& e : dataset.images()) maps.emplace_back(std::to_string(e.id), dataset.load_labels(e.id));
      } else {
        for (const auto& [stem, path] : collect(o->gt_dir, ".png")) {
          maps.emplace_back(stem, load_label_map(path, static_cast<ClassId>(o->num_classes),
                                                 static_cast<ClassId>(o->ignore_id)));
        }
      }
      json ignored = json::object();
      for (const auto& [stem, labels] : maps) {
        const OracleRegions regions = oracle_superpixels(labels);
        save_segmentation(regions.segmentation, o->output / (stem + ".seg"));
        json flagged = json::array();
        for (std::size_t r = 0; r < regions.ignored.size(); ++r) {
          if (regions.ignored[r]) flagged.push_back(r);
        }
        ignored[stem] = flagged;
        out << stem << ": " << regions.segmentation.num_regions() << " oracle superpixels\n";
      }
      std::ofstream(o->output / "ignored.json") << ignored.dump(2) << '\n';
    };
  });
}

void add_evaluate(CLI::App& app, std::function<void()>& action, std::ostream& out) {
  auto* cmd = app.add_subcommand("evaluate", "Achievable-segmentation metrics of superpixels against oracle");
  struct Opts {
    fs::path seg, oracle, gt, report;
    std::uint32_t num_classes = 0;
    std::uint32_t ignore_id = 255;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--seg", o->seg, "Superpixels: SEG1 file or directory")->required();
  auto* oracle = cmd->add_option("--oracle", o->oracle, "Oracle superpixels: SEG1 file or directory");
  auto* gt = cmd->add_option("--gt", o->gt, "Label PNG file or directory; masks ignore pixels");
  cmd->add_option("--num-classes", o->num_classes, "Class count (with --gt)");
  cmd->add_option("--ignore-id", o->ignore_id, "Ignore label (with --gt)");
  cmd->add_option("--report", o->report, "CSV report path (stdout when omitted)");
  cmd->callback([&action, &out, o, oracle, gt] {
    if (!*oracle && !*gt) throw CLI::RequiredError("--oracle or --gt");
    if (*gt && o->num_classes < 2) throw CLI::ValidationError("--num-classes", "required with --gt (>= 2)");
    action = [&out, o] {
      const auto segs = collect(o->seg, ".seg");
      std::map<std::string, fs::path> oracles, gts;
      if (!o->oracle.empty()) oracles = collect(o->oracle, ".seg");
      if (!o->gt.empty()) gts = collect(o->gt, ".png");
      const bool single = segs.size() == 1 && !fs::is_directory(o->seg);

      std::ostringstream csv;
      csv << "image";
      for (const char* c : kMetricColumns) csv << ',' << c;
      csv << '\n';
      AchievableAccumulator pooled_sg, pooled_gs;
      AchievableScores mean_sg, mean_gs;
      std::size_t images = 0;
      for (const auto& [stem, seg_path] : segs) {
        const Segmentation s = load_segmentation(seg_path);
        std::optional<LabelMap> labels;
        auto find = [&](const std::map<std::string, fs::path>& m) -> std::optional<fs::path> {
          if (single && m.size() == 1) return m.begin()->second;
          auto it = m.find(stem);
          if (it == m.end()) return std::nullopt;
          return it->second;
        };
        if (!gts.empty()) {
          auto p = find(gts);
          if (!p) throw Error("no ground truth for " + stem);
          labels = load_label_map(*p, static_cast<ClassId>(o->num_classes), static_cast<ClassId>(o->ignore_id));
        }
        Segmentation g;
        if (!oracles.empty()) {
          auto p = find(oracles);
          if (!p) throw Error("no oracle segmentation for " + stem);
          g = load_segmentation(*p, s.extent());
        } else {
          g = oracle_superpixels(*labels).segmentation;
        }
        const std::vector<std::uint8_t> valid = labels ? valid_mask(*labels) : std::vector<std::uint8_t>{};
        const OverlapTable table = overlap_table(s, g, valid);
        AchievableAccumulator sg, gs;
        sg.add(table);
        gs.add(table, true);
        pooled_sg.add(table);
        pooled_gs.add(table, true);
        const auto a = sg.pooled(), b = gs.pooled();
        write_metric_row(csv, stem, a, b);
        for (auto [acc, v] : {std::pair{&mean_sg, a}, std::pair{&mean_gs, b}}) {
          acc->asa += v.asa;
          acc->ap += v.ap;
          acc->ar += v.ar;
          acc->af += v.af;
        }
        ++images;
      }
      for (auto* acc : {&mean_sg, &mean_gs}) {
        acc->asa /= double(images);
        acc->ap /= double(images);
        acc->ar /= double(images);
        acc->af /= double(images);
      }
      write_metric_row(csv, "pooled", pooled_sg.pooled(), pooled_gs.pooled());
      write_metric_row(csv, "mean", mean_sg, mean_gs);
      if (o->report.empty()) {
        out << csv.str();
      } else {
        std::ofstream(o->report) << csv.str();
      }
    };
  });
}

void add_correlate(CLI::App& app, std::function<void()>& action, std::ostream& out) {
  auto* cmd = app.add_subcommand("correlate", "Rank metric columns by Pearson correlation with a score column");
  struct Opts {
    fs::path csv;
    std::string score = "mIoU";
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--csv", o->csv, "CSV with one row per setting")->required()->check(CLI::ExistingFile);
  cmd->add_option("--score", o->score, "Score column");
  cmd->callback([&action, &out, o] {
    action = [&out, o] {
      std::ifstream in(o->csv);
      std::string line;
      if (!std::getline(in, line)) throw FormatError(o->csv.string() + ": empty CSV");
      const auto header = split_csv_line(line);
      std::vector<std::vector<std::optional<double>>> columns(header.size());
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) throw FormatError(o->csv.string() + ": ragged row");
        for (std::size_t c = 0; c < cells.size(); ++c) columns[c].push_back(parse_number(cells[c]));
      }
      const auto score_it = std::find(header.begin(), header.end(), o->score);
      if (score_it == header.end()) throw FormatError("no column '" + o->score + "'");
      const std::size_t score_col = static_cast<std::size_t>(score_it - header.begin());
      auto numeric = [](const std::vector<std::optional<double>>& col) {
        std::vector<double> v;
        for (const auto& x : col) {
          if (!x) return std::optional<std::vector<double>>{};
          v.push_back(*x);
        }
        return std::optional<std::vector<double>>{v};
      };
      const auto scores = numeric(columns[score_col]);
      if (!scores || scores->size() < 2) throw FormatError("score column needs at least two numeric rows");
      std::vector<std::pair<std::string, double>> ranked;
      for (std::size_t c = 0; c < header.size(); ++c) {
        if (c == score_col) continue;
        const auto values = numeric(columns[c]);
        if (!values) continue;
        try {
          ranked.emplace_back(header[c], pearson_correlation(*values, *scores));
        } catch (const Error&) {
          // constant column: correlation undefined
        }
      }
      std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
      out << "metric,pearson\n";
      for (const auto& [name, r] : ranked) out << name << ',' << fmt(r) << '\n';
    };
  });
}

FeatureLookup feature_cache(const Dataset& dataset, std::map<ImageId, FeatureImage>& cache) {
  return [&dataset, &cache](ImageId id) -> const FeatureImage& {
    auto it = cache.find(id);
    if (it == cache.end()) it = cache.emplace(id, compute_features(dataset.load_image(id), FeatureSpec{})).first;
    return it->second;
  };
}

void add_train(CLI::App& app, std::function<void()>& action, std::ostream& out) {
  auto* cmd = app.add_subcommand("train", "Train the pixel classifier on a sieved dataset");
  struct Opts {
    fs::path sieved, manifest, output;
    TrainConfig cfg;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--sieved", o->sieved, "Sieved dataset (SVD1)")->required();
  cmd->add_option("--manifest", o->manifest, "Dataset manifest")->required();
  cmd->add_option("--lr", o->cfg.learning_rate, "Learning rate");
  cmd->add_option("--epochs", o->cfg.epochs, "Epochs");
  cmd->add_option("--batch-size", o->cfg.batch_size, "Minibatch size")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o->cfg.seed, "Shuffle seed");
  cmd->add_option("-o,--output", o->output, "Model (MLP1)")->required();
  cmd->callback([&action, &out, o] {
    action = [&out, o] {
      const Dataset dataset = Dataset::load(o->manifest);
      std::map<ImageId, FeatureImage> cache;
      const TrainResult result =
          train(load_sieved_dataset(o->sieved), feature_cache(dataset, cache), dataset.num_classes(), o->cfg);
      save_model(result.params, o->output);
      if (result.status == TrainStatus::kSingleClass) out << "warning: training data holds a single class\n";
      if (!result.loss_history.empty()) out << "final loss " << fmt(result.loss_history.back()) << '\n';
    };
  });
}

void add_predict(CLI::App& app, std::function<void()>& action, std::ostream& out) {
  auto* cmd = app.add_subcommand("predict", "Predict class probabilities for dataset images");
  struct Opts {
    fs::path model, manifest, output;
    std::string split = "all";
    bool labels = false;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--model", o->model, "Model (MLP1)")->required();
  cmd->add_option("--manifest", o->manifest, "Dataset manifest")->required();
  cmd->add_option("--split", o->split, "train, val or all")->check(CLI::IsMember({"train", "val", "all"}));
  cmd->add_flag("--labels", o->labels, "Also write argmax label PNGs");
  cmd->add_option("-o,--output", o->output, "Output directory for <id>.ppf")->required();
  cmd->callback([&action, &out, o] {
    action = [&out, o] {
      const Dataset dataset = Dataset::load(o->manifest);
      const ModelParams model = load_model(o->model);
      ConfusionMatrix confusion(dataset.num_classes());
      for (const auto& entry : select_split(dataset, o->split)) {
        const ProbMap probs = predict(model, compute_features(load_rgb_png(entry.image), FeatureSpec{}));
        save_prob_map(probs, o->output / (std::to_string(entry.id) + ".ppf"));
        const LabelMap pred = argmax_labels(probs, dataset.ignore_id());
        if (o->labels) save_label_map(pred, o->output / (std::to_string(entry.id) + ".png"));
        confusion.add(pred, dataset.load_labels(entry.id));
      }
      out << "mIoU " << fmt(confusion.miou()) << '\n';
    };
  });
}

void add_synth(CLI::App& app, std::function<void()>& action, std::ostream& out) {
  auto* cmd = app.add_subcommand("synth", "Write the synthetic shapes dataset");
  struct Opts {
    fs::path output;
    std::uint32_t train = 20, val = 10, size = 64;
    std::uint64_t seed = 0;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("-o,--output", o->output, "Dataset directory")->required();
  cmd->add_option("--train", o->train, "Train images");
  cmd->add_option("--val", o->val, "Validation images");
  cmd->add_option("--size", o->size, "Image side length")->check(CLI::Range(8u, 4096u));
  cmd->add_option("--seed", o->seed, "Generator seed");
  cmd->callback([&action, &out, o] {
    action = [&out, o] {
      SyntheticConfig cfg;
      cfg.width = cfg.height = o->size;
      write_synthetic_dataset(o->output, o->train, o->val, o->seed, cfg);
      out << "wrote " << (o->output / "manifest.json").string() << '\n';
    };
  });
}

void print_status(const LoopState& state, std::ostream& out) {
  const char* phases[] = {"select", "awaiting_answers", "train"};
  out << "run " << state.config.name << ": "
      << (state.finished() ? std::string("finished") : "round " + std::to_string(state.round) + " (" +
                                                            phases[static_cast<int>(state.phase)] + ")")
      << ", " << state.clicks_spent() << " clicks spent\n";
  if (state.history.empty()) return;
  out << "round,answered,refunded,clicks,labeled_pixels,label_noise,val_miou\n";
  for (const auto& h : state.history) {
    out << h.round << ',' << h.answered << ',' << h.refunded << ',' << h.clicks_total << ',' << h.labeled_pixels
        << ',' << std::fixed << std::setprecision(4) << h.label_noise << ',' << h.val_miou << '\n'
        << std::defaultfloat;
  }
}

void drive(ActiveLearningLoop& loop, std::ostream& out) {
  const LoopConfig& cfg = loop.state().config;
  if (cfg.oracle == OracleMode::kSimulated) {
    loop.run_to_completion();
    print_status(loop.state(), out);
    return;
  }
  auto broker = std::make_shared<QueryBroker>(loop.dataset().num_classes());
  AnnotationService service(broker, loop.dataset());
  const int port = service.start("0.0.0.0", cfg.http_port);
  out << "annotation service on http://localhost:" << port << std::endl;
  loop.set_annotator(std::make_shared<HumanAnnotator>(broker));
  while (!loop.state().finished()) {
    broker->set_round(loop.state().round, loop.state().clicks_spent());
    loop.run_round();
    print_status(loop.state(), out);
  }
  service.stop();
}

void add_loop(CLI::App& app, std::function<void()>& action, std::ostream& out) {
  auto* cmd = app.add_subcommand("loop", "Run the active learning loop");
  cmd->require_subcommand(1);
  struct Opts {
    fs::path config, state;
    bool partial = false;
  };
  auto o = std::make_shared<Opts>();

  auto* run = cmd->add_subcommand("run", "Start a run from a config file");
  run->add_option("--config", o->config, "Run config (key = value)")->required()->check(CLI::ExistingFile);
  run->add_flag("--partial", o->partial, "Human mode: accept rounds with skipped queries");
  run->callback([&action, &out, o] {
    action = [&out, o] {
      LoopConfig cfg = LoopConfig::load(o->config);
      if (o->partial) cfg.partial = true;
      auto loop = ActiveLearningLoop::create(cfg);
      out << "run directory " << loop.run_dir().string() << '\n';
      drive(loop, out);
    };
  });

  auto* resume = cmd->add_subcommand("resume", "Continue a run from its state file");
  resume->add_option("--state", o->state, "state.json")->required()->check(CLI::ExistingFile);
  resume->add_flag("--partial", o->partial, "Human mode: accept rounds with skipped queries");
  resume->callback([&action, &out, o] {
    action = [&out, o] {
      auto loop = ActiveLearningLoop::resume(o->state);
      if (o->partial) loop.set_partial(true);
      drive(loop, out);
    };
  });

  auto* status = cmd->add_subcommand("status", "Summarize a run");
  status->add_option("--state", o->state, "state.json")->required()->check(CLI::ExistingFile);
  status->callback([&action, &out, o] { action = [&out, o] { print_status(load_state(o->state), out); }; });
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Superpixel active learning toolkit", "spal"};
  app.require_subcommand(1);
  std::function<void()> action;
  add_synth(app, action, out);
  add_segment(app, action, out);
  add_merge(app, action, out);
  add_select(app, action, out);
  add_sieve(app, action, out);
  add_oracle(app, action, out);
  add_evaluate(app, action, out);
  add_correlate(app, action, out);
  add_train(app, action, out);
  add_predict(app, action, out);
  add_loop(app, action, out);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }
  try {
    if (action) action();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace spal::cli
