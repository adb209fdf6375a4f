#include "spal/loop.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "query_json.hpp"
#include "spal/acquisition.hpp"
#include "spal/merge.hpp"
#include "spal/metrics.hpp"
#include "spal/oracle.hpp"
#include "spal/region.hpp"
#include "spal/sieve.hpp"
#include "spal/superpixel.hpp"

namespace spal {

using nlohmann::json;

std::uint32_t LoopState::clicks_spent() const {
  std::uint32_t clicks = 0;
  for (const auto& q : queries) clicks += q.clicks();
  return clicks;
}

namespace {

const char* phase_name(RoundPhase phase) {
  switch (phase) {
    case RoundPhase::kSelect:
      return "select";
    case RoundPhase::kAwaitingAnswers:
      return "awaiting_answers";
    case RoundPhase::kTrain:
      return "train";
  }
  return "select";
}

RoundPhase parse_phase(const std::string& name) {
  if (name == "select") return RoundPhase::kSelect;
  if (name == "awaiting_answers") return RoundPhase::kAwaitingAnswers;
  if (name == "train") return RoundPhase::kTrain;
  throw FormatError("unknown round phase '" + name + "'");
}

json summary_to_json(const RoundSummary& s) {
  return {{"round", s.round},           {"answered", s.answered},
          {"refunded", s.refunded},     {"clicks_total", s.clicks_total},
          {"candidates", s.candidates}, {"labeled_pixels", s.labeled_pixels},
          {"label_noise", s.label_noise}, {"val_miou", s.val_miou}};
}

RoundSummary summary_from_json(const json& j) {
  RoundSummary s;
  s.round = j.at("round");
  s.answered = j.at("answered");
  s.refunded = j.at("refunded");
  s.clicks_total = j.at("clicks_total");
  s.candidates = j.at("candidates");
  s.labeled_pixels = j.at("labeled_pixels");
  s.label_noise = j.at("label_noise");
  s.val_miou = j.at("val_miou");
  return s;
}

template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> threads;
    for (std::size_t t = 0; t < workers; ++t) {
      threads.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

std::string image_file(ImageId id, const char* ext) { return std::to_string(id) + ext; }

}  // namespace

void save_state(const LoopState& state, const std::filesystem::path& path) {
  json j;
  j["config"] = state.config.to_key_values();
  j["round"] = state.round;
  j["phase"] = phase_name(state.phase);
  j["queries"] = detail::queries_to_json(state.queries);
  j["next_query_id"] = state.next_query_id;
  j["rng_state"] = state.rng_state;
  j["history"] = json::array();
  for (const auto& s : state.history) j["history"].push_back(summary_to_json(s));
  j["clicks_spent"] = state.clicks_spent();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  // Write-then-rename so an interrupted save never leaves a torn state file.
  const auto tmp = std::filesystem::path(path).concat(".tmp");
  {
    std::ofstream out(tmp);
    if (!out) throw Error("cannot write " + tmp.string());
    out << j.dump() << '\n';
  }
  std::filesystem::rename(tmp, path);
}

LoopState load_state(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open state " + path.string());
  try {
    const json j = json::parse(in);
    LoopState state;
    state.config = LoopConfig::from_key_values(j.at("config").get<std::map<std::string, std::string>>());
    state.round = j.at("round");
    state.phase = parse_phase(j.at("phase").get<std::string>());
    state.queries = detail::queries_from_json(j.at("queries"));
    state.next_query_id = j.at("next_query_id");
    state.rng_state = j.at("rng_state").get<std::string>();
    for (const auto& s : j.at("history")) state.history.push_back(summary_from_json(s));
    return state;
  } catch (const json::exception& e) {
    throw FormatError("corrupted state file " + path.string() + ": " + e.what());
  }
}

void SimulatedAnnotator::resolve(std::vector<QueryRecord>& batch) {
  for (auto& q : batch) {
    if (q.status != QueryStatus::kPending) continue;
    if (auto answer = answer_query(q.pixels, ground_truth_(q.image_id))) {
      q.status = QueryStatus::kAnswered;
      q.answer = answer->dominant;
    } else {
      q.status = QueryStatus::kSkipped;
    }
  }
}

struct RankedRegion {
  ImageId image_id;
  RegionId region_id;
};

struct ActiveLearningLoop::Impl {
  LoopState state;
  std::filesystem::path run_dir;
  Dataset dataset;
  std::vector<ImageId> train_ids;
  std::vector<ImageId> val_ids;
  std::unordered_map<ImageId, Segmentation> base;
  std::unordered_map<ImageId, LabelMap> gt;
  std::unordered_map<ImageId, FeatureImage> features;
  std::shared_ptr<Annotator> annotator;
  std::mt19937_64 rng;

  std::filesystem::path round_dir(std::uint32_t t) const { return run_dir / ("round_" + std::to_string(t)); }

  void load_images() {
    const FeatureSpec spec;
    std::vector<DatasetImage> images = dataset.images();
    std::vector<FeatureImage> feats(images.size());
    std::vector<LabelMap> labels(images.size());
    parallel_for(images.size(), [&](std::size_t i) {
      const RgbImage rgb = load_rgb_png(images[i].image);
      labels[i] = load_label_map(images[i].labels, dataset.num_classes(), dataset.ignore_id());
      if (!(labels[i].extent() == rgb.extent())) {
        throw InvariantError("image " + std::to_string(images[i].id) + ": label map size differs from image");
      }
      feats[i] = compute_features(rgb, spec);
    });
    for (std::size_t i = 0; i < images.size(); ++i) {
      const ImageId id = images[i].id;
      (images[i].split == Split::kTrain ? train_ids : val_ids).push_back(id);
      features.emplace(id, std::move(feats[i]));
      gt.emplace(id, std::move(labels[i]));
    }
    if (train_ids.empty()) throw Error("dataset has no train images");
  }

  void persist() {
    std::ostringstream rng_text;
    rng_text << rng;
    state.rng_state = rng_text.str();
    save_state(state, run_dir / "state.json");
  }

  Annotator& active_annotator() {
    if (!annotator) {
      annotator = std::make_shared<SimulatedAnnotator>([this](ImageId id) -> const LabelMap& { return gt.at(id); });
    }
    return *annotator;
  }

  // Segmentation whose regions the given round queries.
  Segmentation query_segmentation(std::uint32_t t, ImageId id) const {
    if (t == 0) return base.at(id);
    const auto path = round_dir(t) / "merged" / image_file(id, ".seg");
    if (!std::filesystem::exists(path)) throw Error("missing artifact: " + path.string());
    return load_segmentation(path, base.at(id).extent());
  }

  PixelExclusion queried_pixels() const {
    PixelExclusion excluded;
    for (const auto& q : state.queries) {
      if (q.status == QueryStatus::kPending) continue;
      excluded.add(q.image_id, gt.at(q.image_id).size(), q.pixels);
    }
    return excluded;
  }

  void save_ranking(std::uint32_t t, const std::vector<RankedRegion>& ranking) const {
    json arr = json::array();
    for (const auto& r : ranking) arr.push_back({r.image_id, r.region_id});
    std::filesystem::create_directories(round_dir(t));
    std::ofstream out(round_dir(t) / "ranking.json");
    out << arr.dump() << '\n';
  }

  std::vector<RankedRegion> load_ranking(std::uint32_t t) const {
    const auto path = round_dir(t) / "ranking.json";
    std::ifstream in(path);
    if (!in) throw Error("missing artifact: " + path.string());
    std::vector<RankedRegion> ranking;
    for (const auto& e : json::parse(in)) ranking.push_back({e.at(0).get<ImageId>(), e.at(1).get<RegionId>()});
    return ranking;
  }

  std::vector<QueryRecord*> round_queries(std::uint32_t t) {
    std::vector<QueryRecord*> out;
    for (auto& q : state.queries) {
      if (q.round == t) out.push_back(&q);
    }
    return out;
  }

  // Appends up to `count` pending queries from the ranking, continuing after
  // the regions this round has already queried.
  std::size_t enqueue(std::uint32_t t, const std::vector<RankedRegion>& ranking, std::size_t count) {
    const std::size_t cursor = round_queries(t).size();
    std::unordered_map<ImageId, std::vector<std::vector<PixelIndex>>> pixels_cache;
    std::size_t added = 0;
    for (std::size_t k = cursor; k < ranking.size() && added < count; ++k, ++added) {
      const auto& r = ranking[k];
      auto it = pixels_cache.find(r.image_id);
      if (it == pixels_cache.end()) {
        it = pixels_cache.emplace(r.image_id, query_segmentation(t, r.image_id).region_pixels()).first;
      }
      QueryRecord q;
      q.query_id = state.next_query_id++;
      q.image_id = r.image_id;
      q.round = t;
      q.pixels = it->second.at(r.region_id);
      state.queries.push_back(std::move(q));
    }
    return added;
  }

  void write_batch_manifest(std::uint32_t t) {
    json arr = json::array();
    for (const QueryRecord* q : round_queries(t)) {
      arr.push_back({{"query_id", q->query_id},
                     {"image_id", q->image_id},
                     {"pixel_count", q->pixels.size()},
                     {"status", detail::status_name(q->status)}});
    }
    std::ofstream out(round_dir(t) / "batch.json");
    out << arr.dump(2) << '\n';
  }

  // Warm-up selection: a seeded uniform permutation of all base superpixels.
  std::vector<RankedRegion> warmup_ranking() {
    std::vector<RankedRegion> all;
    for (ImageId id : train_ids) {
      for (RegionId r = 0; r < base.at(id).num_regions(); ++r) all.push_back({id, r});
    }
    if (state.config.budget > all.size()) {
      throw Error("warmup: budget " + std::to_string(state.config.budget) + " exceeds the " +
                  std::to_string(all.size()) + " base superpixels");
    }
    for (std::size_t i = all.size(); i > 1; --i) std::swap(all[i - 1], all[rng() % i]);
    return all;
  }

  ModelParams previous_model(std::uint32_t t) const {
    const auto path = round_dir(t - 1) / "model.mlp1";
    if (!std::filesystem::exists(path)) throw Error("missing artifact: " + path.string());
    return load_model(path);
  }

  std::optional<ProbMap> external_probs(std::uint32_t t, ImageId id) const {
    if (state.config.probs_dir.empty()) return std::nullopt;
    const auto path = state.config.probs_dir / ("round_" + std::to_string(t)) / image_file(id, ".ppf");
    if (!std::filesystem::exists(path)) throw Error("missing artifact: " + path.string());
    ProbMap probs = load_prob_map(path);
    if (!(probs.extent() == gt.at(id).extent()) || probs.num_classes() != dataset.num_classes()) {
      throw InvariantError(path.string() + ": shape does not match the image and class count");
    }
    return probs;
  }

  // Predicts with the previous round's model, merges and scores every merged
  // region of every train image. Artifacts are written on request.
  std::vector<Candidate> round_candidates(std::uint32_t t, bool write_artifacts) const {
    const ModelParams model = previous_model(t);
    std::vector<Segmentation> merged(train_ids.size());
    std::vector<std::vector<RegionStats>> stats(train_ids.size());
    parallel_for(train_ids.size(), [&](std::size_t i) {
      const ImageId id = train_ids[i];
      auto external = external_probs(t, id);
      const ProbMap probs = external ? std::move(*external) : predict(model, features.at(id));
      const Segmentation& s0 = base.at(id);
      merged[i] = state.config.merge ? adaptive_merge(s0, probs, state.config.merge_cfg) : s0;
      stats[i] = region_stats(merged[i], probs);
      if (write_artifacts) {
        save_prob_map(probs, round_dir(t) / "probs" / image_file(id, ".ppf"));
        save_segmentation(merged[i], round_dir(t) / "merged" / image_file(id, ".seg"));
      }
    });

    const ClassPopularity popularity = class_popularity(stats, dataset.num_classes());
    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < train_ids.size(); ++i) {
      auto pixels = merged[i].region_pixels();
      for (RegionId r = 0; r < merged[i].num_regions(); ++r) {
        Candidate c;
        c.image_id = train_ids[i];
        c.region_id = r;
        c.score = acquisition_score(stats[i][r], popularity);
        c.stats = std::move(stats[i][r]);
        c.pixels = std::move(pixels[r]);
        candidates.push_back(std::move(c));
      }
    }
    return candidates;
  }

  std::vector<RankedRegion> round_ranking(std::uint32_t t) {
    const auto candidates = round_candidates(t, true);
    const auto order = rank_candidates(candidates, queried_pixels());
    if (order.empty()) throw Error("round " + std::to_string(t) + ": no eligible candidates");
    std::vector<RankedRegion> ranking;
    ranking.reserve(order.size());
    for (std::size_t i : order) ranking.push_back({candidates[i].image_id, candidates[i].region_id});
    if (state.config.selection == SelectionPolicy::kRandom) {
      for (std::size_t i = ranking.size(); i > 1; --i) std::swap(ranking[i - 1], ranking[rng() % i]);
    }
    return ranking;
  }

  void select(std::uint32_t t) {
    const std::vector<RankedRegion> ranking = t == 0 ? warmup_ranking() : round_ranking(t);
    save_ranking(t, ranking);
    enqueue(t, ranking, state.config.budget);
    state.phase = RoundPhase::kAwaitingAnswers;
    write_batch_manifest(t);
    persist();
  }

  void collect_answers(std::uint32_t t) {
    const auto ranking = load_ranking(t);
    for (;;) {
      std::vector<QueryRecord> batch;
      for (QueryRecord* q : round_queries(t)) {
        if (q->status == QueryStatus::kPending) batch.push_back(*q);
      }
      if (!batch.empty()) {
        active_annotator().resolve(batch);
        for (const auto& resolved : batch) {
          if (resolved.status == QueryStatus::kPending) throw Error("annotator left query pending");
          auto it = std::find_if(state.queries.begin(), state.queries.end(),
                                 [&](const QueryRecord& q) { return q.query_id == resolved.query_id; });
          *it = resolved;
        }
        persist();
      }
      std::size_t answered = 0;
      for (QueryRecord* q : round_queries(t)) answered += q->status == QueryStatus::kAnswered;
      if (answered >= state.config.budget || state.config.partial) break;
      // Refunded queries are replaced by the next-ranked regions.
      if (enqueue(t, ranking, state.config.budget - answered) == 0) break;
    }
    state.phase = RoundPhase::kTrain;
    write_batch_manifest(t);
    persist();
  }

  void train_round(std::uint32_t t) {
    const auto& cfg = state.config;
    std::unordered_map<ImageId, ProbMap> probs;
    if (t > 0 && cfg.sieve) {
      for (const auto& q : state.queries) {
        if (q.status != QueryStatus::kAnswered || probs.count(q.image_id)) continue;
        const auto path = round_dir(t) / "probs" / image_file(q.image_id, ".ppf");
        if (!std::filesystem::exists(path)) throw Error("missing artifact: " + path.string());
        probs.emplace(q.image_id, load_prob_map(path));
      }
    }
    const SievedDataset data = build_sieved_dataset(
        state.queries, [&](ImageId id) -> const ProbMap& { return probs.at(id); }, cfg.sieve_cfg,
        t > 0 && cfg.sieve);
    if (data.empty()) throw Error("round " + std::to_string(t) + ": no labeled pixels to train on");
    save_sieved_dataset(data, round_dir(t) / "sieved.svd1");

    TrainConfig train_cfg = cfg.train_cfg;
    train_cfg.seed = cfg.seed * 1'000'003ULL + t;
    const TrainResult trained = train(
        data, [&](ImageId id) -> const FeatureImage& { return features.at(id); }, dataset.num_classes(), train_cfg);
    save_model(trained.params, round_dir(t) / "model.mlp1");

    RoundSummary summary;
    summary.round = t;
    for (QueryRecord* q : round_queries(t)) {
      summary.answered += q->status == QueryStatus::kAnswered;
      summary.refunded += q->status == QueryStatus::kSkipped;
    }
    summary.clicks_total = state.clicks_spent();
    summary.candidates = load_ranking(t).size();
    summary.labeled_pixels = data.size();
    std::size_t wrong = 0, counted = 0;
    for (const auto& r : data.records) {
      const LabelMap& labels = gt.at(r.image_id);
      if (labels.ignored(r.pixel)) continue;
      ++counted;
      wrong += labels[r.pixel] != r.label;
    }
    summary.label_noise = counted ? static_cast<double>(wrong) / static_cast<double>(counted) : 0.0;
    summary.val_miou = val_ids.empty() ? 0.0 : validation_miou(trained.params);
    state.history.push_back(summary);

    ++state.round;
    state.phase = RoundPhase::kSelect;
    persist();
  }

  double validation_miou(const ModelParams& model) const {
    ConfusionMatrix confusion(dataset.num_classes());
    for (ImageId id : val_ids) {
      const ProbMap probs = predict(model, features.at(id));
      confusion.add(argmax_labels(probs, dataset.ignore_id()), gt.at(id));
    }
    return confusion.miou();
  }
};

ActiveLearningLoop::ActiveLearningLoop(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
ActiveLearningLoop::ActiveLearningLoop(ActiveLearningLoop&&) noexcept = default;
ActiveLearningLoop& ActiveLearningLoop::operator=(ActiveLearningLoop&&) noexcept = default;
ActiveLearningLoop::~ActiveLearningLoop() = default;

namespace {

void check_label_space(const LoopConfig& cfg, const Dataset& dataset) {
  if (cfg.num_classes && *cfg.num_classes != dataset.num_classes()) {
    throw Error("config num_classes " + std::to_string(*cfg.num_classes) + " != manifest " +
                std::to_string(dataset.num_classes()));
  }
  if (cfg.ignore_id && *cfg.ignore_id != dataset.ignore_id()) {
    throw Error("config ignore_id " + std::to_string(*cfg.ignore_id) + " != manifest " +
                std::to_string(dataset.ignore_id()));
  }
}

}  // namespace

ActiveLearningLoop ActiveLearningLoop::create(const LoopConfig& requested) {
  auto impl = std::make_unique<Impl>();
  // Absolute paths so resume works from any working directory.
  impl->state.config = requested;
  impl->state.config.manifest = std::filesystem::absolute(requested.manifest);
  impl->state.config.runs_dir = std::filesystem::absolute(requested.runs_dir);
  if (!requested.base_dir.empty()) impl->state.config.base_dir = std::filesystem::absolute(requested.base_dir);
  if (!requested.probs_dir.empty()) impl->state.config.probs_dir = std::filesystem::absolute(requested.probs_dir);
  const LoopConfig& config = impl->state.config;
  impl->run_dir = config.runs_dir / config.name;
  if (std::filesystem::exists(impl->run_dir / "state.json")) {
    throw Error("run already exists at " + impl->run_dir.string() + "; use resume");
  }
  impl->dataset = Dataset::load(config.manifest);
  check_label_space(config, impl->dataset);
  impl->load_images();
  impl->rng.seed(config.seed);

  std::vector<Segmentation> segs(impl->train_ids.size());
  parallel_for(segs.size(), [&](std::size_t i) {
    const ImageId id = impl->train_ids[i];
    const Extent extent = impl->gt.at(id).extent();
    if (config.base_algorithm == BaseAlgorithm::kSlic) {
      segs[i] = slic(load_rgb_png(impl->dataset.find(id).image), config.slic);
    } else if (config.base_algorithm == BaseAlgorithm::kImport) {
      const auto path = config.base_dir / image_file(id, ".seg");
      if (!std::filesystem::exists(path)) throw Error("missing artifact: " + path.string());
      // Imported regions may be fragmented; superpixels must be connected.
      segs[i] = enforce_connectivity(load_segmentation(path, extent));
    } else {
      segs[i] = grid_segmentation(extent.width, extent.height, config.grid_cell);
    }
    save_segmentation(segs[i], impl->run_dir / "base" / image_file(id, ".seg"));
  });
  for (std::size_t i = 0; i < segs.size(); ++i) impl->base.emplace(impl->train_ids[i], std::move(segs[i]));

  std::filesystem::create_directories(impl->run_dir);
  std::ofstream(impl->run_dir / "config.toml") << config.to_text();
  impl->persist();
  return ActiveLearningLoop(std::move(impl));
}

ActiveLearningLoop ActiveLearningLoop::resume(const std::filesystem::path& state_path) {
  auto impl = std::make_unique<Impl>();
  impl->state = load_state(state_path);
  impl->run_dir = state_path.parent_path();
  impl->dataset = Dataset::load(impl->state.config.manifest);
  check_label_space(impl->state.config, impl->dataset);
  impl->load_images();
  std::istringstream rng_text(impl->state.rng_state);
  rng_text >> impl->rng;
  if (!rng_text) throw FormatError("corrupted state file " + state_path.string() + ": bad rng state");
  for (ImageId id : impl->train_ids) {
    const auto path = impl->run_dir / "base" / image_file(id, ".seg");
    if (!std::filesystem::exists(path)) throw Error("missing artifact: " + path.string());
    impl->base.emplace(id, load_segmentation(path, impl->gt.at(id).extent()));
  }
  return ActiveLearningLoop(std::move(impl));
}

void ActiveLearningLoop::set_annotator(std::shared_ptr<Annotator> annotator) { impl_->annotator = std::move(annotator); }

void ActiveLearningLoop::run_round(StopPoint stop) {
  Impl& d = *impl_;
  if (d.state.finished()) return;
  const std::uint32_t t = d.state.round;
  if (d.state.phase == RoundPhase::kSelect) {
    d.select(t);
    if (stop == StopPoint::kAfterSelection) return;
  }
  if (d.state.phase == RoundPhase::kAwaitingAnswers) d.collect_answers(t);
  if (d.state.phase == RoundPhase::kTrain) d.train_round(t);
}

std::vector<Candidate> ActiveLearningLoop::preview_batch(std::uint32_t round, std::size_t budget) const {
  const Impl& d = *impl_;
  if (round < 1) throw Error("preview_batch: round must be >= 1");
  PixelExclusion excluded;
  for (const auto& q : d.state.queries) {
    if (q.round < round && q.status != QueryStatus::kPending) {
      excluded.add(q.image_id, d.gt.at(q.image_id).size(), q.pixels);
    }
  }
  return select_batch(d.round_candidates(round, false), budget, excluded);
}

void ActiveLearningLoop::set_partial(bool partial) { impl_->state.config.partial = partial; }

void ActiveLearningLoop::run_to_completion() {
  while (!impl_->state.finished()) run_round();
}

const LoopState& ActiveLearningLoop::state() const { return impl_->state; }
const std::filesystem::path& ActiveLearningLoop::run_dir() const { return impl_->run_dir; }
std::filesystem::path ActiveLearningLoop::round_dir(std::uint32_t round) const { return impl_->round_dir(round); }
const Dataset& ActiveLearningLoop::dataset() const { return impl_->dataset; }
const std::vector<ImageId>& ActiveLearningLoop::train_ids() const { return impl_->train_ids; }
const std::vector<ImageId>& ActiveLearningLoop::val_ids() const { return impl_->val_ids; }
const Segmentation& ActiveLearningLoop::base_segmentation(ImageId id) const { return impl_->base.at(id); }
const LabelMap& ActiveLearningLoop::ground_truth(ImageId id) const { return impl_->gt.at(id); }
const FeatureImage& ActiveLearningLoop::features(ImageId id) const { return impl_->features.at(id); }
double ActiveLearningLoop::validation_miou(const ModelParams& model) const { return impl_->validation_miou(model); }

}  // namespace spal
