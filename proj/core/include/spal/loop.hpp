#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "spal/acquisition.hpp"
#include "spal/config.hpp"
#include "spal/dataset.hpp"
#include "spal/model.hpp"
#include "spal/query.hpp"
#include "spal/raster.hpp"

namespace spal {

/// Where the current round stands. Rounds move kSelect -> kAwaitingAnswers
/// -> kTrain and then advance to the next round's kSelect.
enum class RoundPhase { kSelect, kAwaitingAnswers, kTrain };

struct RoundSummary {
  std::uint32_t round = 0;
  std::uint32_t answered = 0;
  std::uint32_t refunded = 0;
  std::uint32_t clicks_total = 0;
  std::size_t candidates = 0;
  std::size_t labeled_pixels = 0;
  /// Fraction of training pixels whose label differs from ground truth.
  double label_noise = 0.0;
  double val_miou = 0.0;
};

struct LoopState {
  LoopConfig config;
  /// Round to run next; 0 is the warm-up round.
  std::uint32_t round = 0;
  RoundPhase phase = RoundPhase::kSelect;
  std::vector<QueryRecord> queries;
  std::uint32_t next_query_id = 0;
  /// Serialized mt19937_64 state.
  std::string rng_state;
  std::vector<RoundSummary> history;

  std::uint32_t clicks_spent() const;
  bool finished() const { return round > config.rounds; }
};

void save_state(const LoopState& state, const std::filesystem::path& path);
LoopState load_state(const std::filesystem::path& path);

/// Resolves a batch of pending queries: each must end answered or skipped.
class Annotator {
 public:
  virtual ~Annotator() = default;
  virtual void resolve(std::vector<QueryRecord>& batch) = 0;
};

/// Answers from ground truth; all-ignore regions are skipped.
class SimulatedAnnotator : public Annotator {
 public:
  explicit SimulatedAnnotator(std::function<const LabelMap&(ImageId)> ground_truth)
      : ground_truth_(std::move(ground_truth)) {}
  void resolve(std::vector<QueryRecord>& batch) override;

 private:
  std::function<const LabelMap&(ImageId)> ground_truth_;
};

/// Where run_round stops; kComplete runs the round to the end.
enum class StopPoint { kAfterSelection, kComplete };

/// Drives warm-up and the merge / select / query / sieve / train rounds,
/// persisting state and per-round artifacts under <runs_dir>/<name>/.
class ActiveLearningLoop {
 public:
  /// Starts a fresh run; computes and stores base segmentations.
  static ActiveLearningLoop create(const LoopConfig& config);
  /// Reopens a run from its state.json.
  static ActiveLearningLoop resume(const std::filesystem::path& state_path);

  ActiveLearningLoop(ActiveLearningLoop&&) noexcept;
  ActiveLearningLoop& operator=(ActiveLearningLoop&&) noexcept;
  ~ActiveLearningLoop();

  /// Replaces the default simulated annotator.
  void set_annotator(std::shared_ptr<Annotator> annotator);

  /// Runs (or continues) the current round: warm-up when round == 0.
  /// No-op once the final round has completed.
  void run_round(StopPoint stop = StopPoint::kComplete);
  void run_to_completion();

  /// Top-`budget` acquisition candidates for `round` (>= 1) computed from the
  /// previous round's model, excluding pixels queried before that round.
  /// Writes nothing and does not touch the run state.
  std::vector<Candidate> preview_batch(std::uint32_t round, std::size_t budget) const;
  /// Human mode: accept rounds with fewer than `budget` answers.
  void set_partial(bool partial);

  const LoopState& state() const;
  const std::filesystem::path& run_dir() const;
  std::filesystem::path state_path() const { return run_dir() / "state.json"; }
  std::filesystem::path round_dir(std::uint32_t round) const;
  std::filesystem::path model_path(std::uint32_t round) const { return round_dir(round) / "model.mlp1"; }

  const Dataset& dataset() const;
  const std::vector<ImageId>& train_ids() const;
  const std::vector<ImageId>& val_ids() const;
  const Segmentation& base_segmentation(ImageId id) const;
  const LabelMap& ground_truth(ImageId id) const;
  const FeatureImage& features(ImageId id) const;

  /// Validation mIoU of a model over the val split.
  double validation_miou(const ModelParams& model) const;

 private:
  struct Impl;
  explicit ActiveLearningLoop(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

}  // namespace spal
