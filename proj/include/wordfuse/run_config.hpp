#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wordfuse/align.hpp"
#include "wordfuse/corpus.hpp"
#include "wordfuse/feature_cache.hpp"
#include "wordfuse/model.hpp"
#include "wordfuse/trainer.hpp"

namespace wordfuse {

inline constexpr const char* kCacheDirEnv = "WORDFUSE_CACHE_DIR";

struct AlignSettings {
  std::string mode = "dtw";  // dtw | timestamps
  double radius = 0.0;       // 0: max(1, max(m, n) / 10)
  Distance distance = Distance::kEuclidean;
};

// Everything a run depends on. Hyperparameters are addressed as "group.key"
// through set(); unknown keys are rejected.
struct RunConfig {
  std::string command;
  std::filesystem::path manifest, cache, out_dir, reference, init, output;
  std::vector<std::filesystem::path> checkpoints;
  std::optional<Stage> stage;  // unset: all stages
  std::uint64_t seed = 0;
  FeatureConfig features;
  ModelConfig model;
  PipelineConfig training;
  SplitConfig split;
  std::size_t fold = 0;
  AlignSettings align;

  void set(const std::string& key, const std::string& value);
  static std::vector<std::string> keys();
  void set_epochs(std::size_t epochs);
  void set_seed(std::uint64_t s);
  // Keeps derived fields (model bands / embedding size, seeds) consistent.
  void sync();

  nlohmann::json to_json() const;
  // Applies a document written by to_json() on top of the current values.
  void merge_json(const nlohmann::json& j);
};

// Default feature-cache location: $WORDFUSE_CACHE_DIR/features.wfc.
std::filesystem::path default_cache_path();

}  // namespace wordfuse
