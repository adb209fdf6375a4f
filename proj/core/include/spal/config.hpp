#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "spal/merge.hpp"
#include "spal/model.hpp"
#include "spal/sieve.hpp"
#include "spal/superpixel.hpp"

namespace spal {

/// Flat `key = value` pairs; `#` starts a comment, `[section]` lines are
/// accepted and ignored, values may be double-quoted.
std::map<std::string, std::string> parse_key_values(const std::string& text);

enum class BaseAlgorithm { kSlic, kGrid, kImport };
enum class SelectionPolicy { kAcquisition, kRandom };
enum class OracleMode { kSimulated, kHuman };

struct LoopConfig {
  std::string name = "run";
  std::filesystem::path manifest;
  std::filesystem::path runs_dir = "runs";

  BaseAlgorithm base_algorithm = BaseAlgorithm::kSlic;
  SlicConfig slic{64, 10.0, 10, 1};
  std::uint32_t grid_cell = 8;
  /// kImport: <base_dir>/<image_id>.seg, one SEG1 file per train image.
  std::filesystem::path base_dir;

  bool merge = true;
  MergeConfig merge_cfg;
  SelectionPolicy selection = SelectionPolicy::kAcquisition;
  bool sieve = true;
  SieveConfig sieve_cfg{5, 5};
  /// When set, round t >= 1 reads <probs_dir>/round_<t>/<image_id>.ppf
  /// (e.g. from an external network) instead of predicting with the mock
  /// model. The mock model is still trained for validation mIoU.
  std::filesystem::path probs_dir;

  std::uint32_t budget = 40;
  std::uint32_t rounds = 3;
  TrainConfig train_cfg;
  std::uint64_t seed = 0;

  OracleMode oracle = OracleMode::kSimulated;
  std::uint16_t http_port = 8080;
  /// Human mode: skipped queries are not refilled.
  bool partial = false;

  /// Optional cross-checks against the dataset manifest.
  std::optional<std::uint32_t> num_classes;
  std::optional<std::uint32_t> ignore_id;

  static LoopConfig from_key_values(const std::map<std::string, std::string>& kv,
                                    const std::filesystem::path& base_dir = {});
  static LoopConfig load(const std::filesystem::path& path);
  std::map<std::string, std::string> to_key_values() const;
  std::string to_text() const;
};

}  // namespace spal
