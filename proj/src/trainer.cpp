#include "wordfuse/trainer.hpp"

#include <cmath>
#include <map>

#include "wordfuse/error.hpp"

namespace wordfuse {

void adam_update(Parameter& param, AdamMoments& state, std::size_t t, const AdamConfig& c) {
  const std::size_t n = param.value.size();
  if (param.grad.size() != n) fail(ErrorKind::kDimension, "gradient of '" + param.name + "' has the wrong size");
  if (state.m.size() != n) state.m = Tensor(param.value.shape());
  if (state.v.size() != n) state.v = Tensor(param.value.shape());
  const double correct1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
  const double correct2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));
  for (std::size_t k = 0; k < n; ++k) {
    const double g = param.grad[k];
    state.m[k] = c.beta1 * state.m[k] + (1.0 - c.beta1) * g;
    state.v[k] = c.beta2 * state.v[k] + (1.0 - c.beta2) * g * g;
    const double m_hat = state.m[k] / correct1;
    const double v_hat = state.v[k] / correct2;
    param.value[k] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
}

void Adam::step(const std::vector<Parameter*>& params) {
  for (const Parameter* p : params) {
    if (!p->grad.all_finite()) fail(ErrorKind::kNumeric, "non-finite gradient for '" + p->name + "'; update aborted");
  }
  ++t_;
  for (Parameter* p : params) adam_update(*p, state_[p], t_, config_);
}

nlohmann::json EpochRecord::to_json() const {
  nlohmann::json j = {{"stage", stage_name(stage)}, {"epoch", epoch}, {"train_loss", train_loss}, {"train", train.to_json()}};
  if (validation_loss) j["validation_loss"] = *validation_loss;
  if (validation) j["validation"] = validation->to_json();
  return j;
}

nlohmann::json PipelineConfig::to_json() const {
  return {{"text_epochs", text_epochs},
          {"audio_epochs", audio_epochs},
          {"fusion_epochs", fusion_epochs},
          {"batch_size", base.batch_size},
          {"freeze_branches", base.freeze_branches},
          {"seed", base.seed},
          {"patience", base.patience},
          {"learning_rate", base.adam.learning_rate},
          {"beta1", base.adam.beta1},
          {"beta2", base.adam.beta2},
          {"epsilon", base.adam.epsilon}};
}

namespace {

struct StageData {
  const std::vector<ModelInput>* inputs = nullptr;
  std::vector<BranchTensors> cache;  // filled when the branches are frozen
};

Model::Branches stage_branches(Model& model, Tape& tape, Stage stage, const StageData& data, std::size_t i) {
  if (!data.cache.empty()) return model.constant_branches(tape, data.cache[i]);
  const ModelInput& in = (*data.inputs)[i];
  return model.branches(tape, in, stage != Stage::kAudio, stage != Stage::kText);
}

struct PassResult {
  double loss = 0.0;
  std::vector<std::size_t> predicted;
};

PassResult inference_pass(Model& model, Stage stage, const StageData& data) {
  PassResult r;
  Rng unused(0);
  for (std::size_t i = 0; i < data.inputs->size(); ++i) {
    Tape tape;
    Var logits = model.stage_logits(tape, stage, stage_branches(model, tape, stage, data, i), false, unused);
    r.loss += ad::cross_entropy(logits, (*data.inputs)[i].label).item();
    r.predicted.push_back(argmax(logits.value().storage()));
  }
  r.loss /= static_cast<double>(data.inputs->size());
  return r;
}

std::vector<std::size_t> labels_of(const std::vector<ModelInput>& inputs) {
  std::vector<std::size_t> out;
  for (const auto& in : inputs) out.push_back(in.label);
  return out;
}

}  // namespace

StageResult train_stage(Model& model, const std::vector<ModelInput>& train, const std::vector<ModelInput>& validation,
                        const TrainConfig& config, const EpochCallback& on_epoch) {
  StageResult result;
  result.stage = config.stage;
  if (train.empty()) fail(ErrorKind::kSplit, "no training inputs");
  if (config.batch_size == 0) fail(ErrorKind::kConfig, "batch size must be positive");
  if (!model.stage_trainable(config.stage)) return result;
  const std::size_t classes = model.config().classes;
  const std::vector<std::size_t> train_labels = labels_of(train);
  for (auto l : train_labels)
    if (l >= classes) fail(ErrorKind::kInput, "label " + std::to_string(l) + " outside " + std::to_string(classes) + " classes");

  std::vector<Parameter*> params = model.stage_parameters(config.stage, config.freeze_branches);
  StageData train_data{&train, {}}, val_data{&validation, {}};
  if (config.stage == Stage::kFusion && config.freeze_branches) {
    for (const auto& in : train) train_data.cache.push_back(model.branch_tensors(in));
    for (const auto& in : validation) val_data.cache.push_back(model.branch_tensors(in));
  }

  std::vector<Tensor> best_values;
  auto snapshot = [&] {
    best_values.clear();
    for (const Parameter* p : params) best_values.push_back(p->value);
  };
  snapshot();

  Rng rng(mix_seed(config.seed, 1 + static_cast<std::uint64_t>(config.stage)));
  Adam adam(config.adam);
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    EpochRecord record;
    record.stage = config.stage;
    record.epoch = epoch;
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (const auto& batch : balanced_batches(train_labels, classes, config.batch_size, rng)) {
      for (Parameter* p : params) p->zero_grad();
      for (std::size_t i : batch) {
        Tape tape;
        Var logits = model.stage_logits(tape, config.stage, stage_branches(model, tape, config.stage, train_data, i),
                                        true, rng);
        Var loss = ad::cross_entropy(logits, train[i].label);
        if (!std::isfinite(loss.item())) {
          fail(ErrorKind::kNumeric, std::string(stage_name(config.stage)) + " stage diverged at epoch " +
                                        std::to_string(epoch) + " (loss " + std::to_string(loss.item()) + ")");
        }
        tape.backward(loss);
        tape.accumulate_parameter_grads(1.0 / static_cast<double>(batch.size()));
        loss_sum += loss.item();
        ++seen;
      }
      adam.step(params);
    }
    record.train_loss = loss_sum / static_cast<double>(seen);
    const PassResult tr = inference_pass(model, config.stage, train_data);
    record.train = compute_metrics(train_labels, tr.predicted, classes);
    double score = record.train.wa;
    if (!validation.empty()) {
      const PassResult va = inference_pass(model, config.stage, val_data);
      record.validation_loss = va.loss;
      record.validation = compute_metrics(labels_of(validation), va.predicted, classes);
      score = record.validation->wa;
    }
    result.history.push_back(record);
    if (on_epoch) on_epoch(record);
    if (score > result.best_score) {
      result.best_score = score;
      result.best_epoch = epoch;
      snapshot();
    }
    if (config.stop_when_train_perfect && record.train.wa == 1.0) break;
    if (config.patience > 0 && epoch - result.best_epoch >= config.patience) {
      result.stopped_early = true;
      break;
    }
  }
  for (std::size_t k = 0; k < params.size(); ++k) params[k]->value = best_values[k];
  for (auto& p : model.parameters().all()) p.frozen = false;
  return result;
}

std::vector<StageResult> train_pipeline(Model& model, const std::vector<ModelInput>& train,
                                        const std::vector<ModelInput>& validation, const PipelineConfig& config,
                                        const EpochCallback& on_epoch) {
  model.fit_audio_normalization(train);
  std::vector<StageResult> out;
  for (auto [stage, epochs] : {std::pair{Stage::kText, config.text_epochs}, std::pair{Stage::kAudio, config.audio_epochs},
                               std::pair{Stage::kFusion, config.fusion_epochs}}) {
    TrainConfig c = config.base;
    c.stage = stage;
    c.epochs = epochs;
    out.push_back(train_stage(model, train, validation, c, on_epoch));
  }
  return out;
}

std::vector<std::size_t> predict_labels(Model& model, const std::vector<ModelInput>& inputs, std::optional<Stage> stage) {
  if (stage && model.stage_trainable(*stage)) {
    StageData data{&inputs, {}};
    return inference_pass(model, *stage, data).predicted;
  }
  std::vector<std::size_t> out;
  for (const auto& in : inputs) out.push_back(model.predict(in).label);
  return out;
}

Metrics evaluate(Model& model, const std::vector<ModelInput>& inputs, std::optional<Stage> stage) {
  if (inputs.empty()) fail(ErrorKind::kInput, "nothing to evaluate");
  return compute_metrics(labels_of(inputs), predict_labels(model, inputs, stage), model.config().classes);
}

std::vector<ModelInput> select_inputs(const std::vector<ModelInput>& inputs, const std::vector<std::string>& ids) {
  std::map<std::string, const ModelInput*> by_id;
  for (const auto& in : inputs) by_id[in.id] = &in;
  std::vector<ModelInput> out;
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) fail(ErrorKind::kListing, "no features for utterance '" + id + "'");
    out.push_back(*it->second);
  }
  return out;
}

CrossValidationResult cross_validate(const std::vector<ModelInput>& inputs, const std::vector<DatasetSplit>& splits,
                                     const ModelFactory& factory, const PipelineConfig& config,
                                     const EpochCallback& on_epoch) {
  CrossValidationResult result;
  std::vector<double> wa, ua, f1;
  for (std::size_t k = 0; k < splits.size(); ++k) {
    const auto train = select_inputs(inputs, splits[k].train);
    const auto validation = select_inputs(inputs, splits[k].validation);
    const auto test = select_inputs(inputs, splits[k].test);
    PipelineConfig c = config;
    c.base.seed = config.base.seed + k;
    auto model = factory(train, c.base.seed);
    train_pipeline(*model, train, validation, c, on_epoch);
    result.folds.push_back(evaluate(*model, test));
    wa.push_back(result.folds.back().wa);
    ua.push_back(result.folds.back().ua);
    f1.push_back(result.folds.back().weighted_f1);
  }
  result.wa = summarize(wa);
  result.ua = summarize(ua);
  result.weighted_f1 = summarize(f1);
  return result;
}

}  // namespace wordfuse
