#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "wordfuse/corpus.hpp"
#include "wordfuse/metrics.hpp"
#include "wordfuse/model.hpp"

namespace wordfuse {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamMoments {
  Tensor m;
  Tensor v;
};

// One bias-corrected Adam step at step count t (1-based).
void adam_update(Parameter& param, AdamMoments& state, std::size_t t, const AdamConfig& config);

class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}
  // Every gradient is checked before any parameter moves; a non-finite
  // gradient aborts the whole update with a numeric error.
  void step(const std::vector<Parameter*>& params);
  std::size_t steps() const { return t_; }
  const AdamMoments& moments(const Parameter& p) const { return state_.at(&p); }

 private:
  AdamConfig config_;
  std::size_t t_ = 0;
  std::unordered_map<const Parameter*, AdamMoments> state_;
};

struct TrainConfig {
  Stage stage = Stage::kFusion;
  std::size_t epochs = 50;
  std::size_t batch_size = 8;
  bool freeze_branches = true;
  std::uint64_t seed = 0;
  std::size_t patience = 20;  // 0 disables early stopping
  bool stop_when_train_perfect = false;
  AdamConfig adam;
};

struct EpochRecord {
  Stage stage = Stage::kFusion;
  std::size_t epoch = 0;
  double train_loss = 0.0;
  Metrics train;
  std::optional<double> validation_loss;
  std::optional<Metrics> validation;
  nlohmann::json to_json() const;
};

struct StageResult {
  Stage stage = Stage::kFusion;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // 0: the initial weights were kept
  double best_score = -1.0;
  bool stopped_early = false;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Trains the parameters of one stage, keeps the weights with the best
// validation WA (train WA when there is no validation set) and restores them.
StageResult train_stage(Model& model, const std::vector<ModelInput>& train, const std::vector<ModelInput>& validation,
                        const TrainConfig& config, const EpochCallback& on_epoch = {});

struct PipelineConfig {
  std::size_t text_epochs = 50;
  std::size_t audio_epochs = 50;
  std::size_t fusion_epochs = 50;
  TrainConfig base;  // stage and epochs are overridden per stage
  nlohmann::json to_json() const;
};

// Fits the audio normalization on the training inputs, then runs the text,
// audio and fusion stages in order.
std::vector<StageResult> train_pipeline(Model& model, const std::vector<ModelInput>& train,
                                        const std::vector<ModelInput>& validation, const PipelineConfig& config,
                                        const EpochCallback& on_epoch = {});

// Inference with dropout off. `stage` selects the branch probes instead of
// the model's own prediction.
std::vector<std::size_t> predict_labels(Model& model, const std::vector<ModelInput>& inputs,
                                        std::optional<Stage> stage = std::nullopt);
Metrics evaluate(Model& model, const std::vector<ModelInput>& inputs, std::optional<Stage> stage = std::nullopt);

struct CrossValidationResult {
  std::vector<Metrics> folds;
  MetricSummary wa, ua, weighted_f1;
};

using ModelFactory = std::function<std::unique_ptr<Model>(const std::vector<ModelInput>& train, std::uint64_t seed)>;

// Trains one pipeline per split (seed + fold index) and scores each on its test list.
CrossValidationResult cross_validate(const std::vector<ModelInput>& inputs, const std::vector<DatasetSplit>& splits,
                                     const ModelFactory& factory, const PipelineConfig& config,
                                     const EpochCallback& on_epoch = {});

// Inputs whose ids appear in `ids`, in that order.
std::vector<ModelInput> select_inputs(const std::vector<ModelInput>& inputs, const std::vector<std::string>& ids);

}  // namespace wordfuse
