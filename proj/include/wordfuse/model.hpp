#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wordfuse/corpus.hpp"
#include "wordfuse/decision.hpp"
#include "wordfuse/dsp.hpp"
#include "wordfuse/encoders.hpp"
#include "wordfuse/fusion.hpp"

namespace wordfuse {

struct ModelConfig {
  std::size_t embedding_dim = 300;
  std::size_t hidden = 100;
  std::size_t bands = 64;
  std::size_t classes = 2;
  std::size_t shared_dim = 0;  // 0 means the branch width 2·hidden
  std::size_t filters = 300;
  std::vector<std::size_t> widths{2, 3, 4, 5};
  double dropout = 0.5;
  bool batch_norm = false;
  bool train_embeddings = true;
  Strategy strategy = Strategy::kFaf;
  std::uint64_t seed = 0;

  std::size_t branch_dim() const { return 2 * hidden; }
  std::size_t fused_dim() const { return shared_dim ? shared_dim : branch_dim(); }
  void validate() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

enum class Stage { kText, kAudio, kFusion };
Stage parse_stage(const std::string& name);
const char* stage_name(Stage s);

struct ModelInput {
  std::string id;
  std::vector<std::size_t> token_ids;
  MfscMap mfsc;
  std::size_t label = 0;
};

// Branch outputs evaluated without dropout; reused while the branches are frozen.
struct BranchTensors {
  Tensor t_h, t_alpha, w_h, w_alpha;
  std::vector<Tensor> f_alpha;
};

struct AttentionSet {
  std::vector<double> t_alpha;
  std::vector<double> w_alpha;
  std::optional<std::vector<double>> s_alpha;
  std::optional<std::vector<double>> u_alpha;
  std::vector<std::vector<double>> f_alpha;  // per word, padded length
};

struct Prediction {
  std::vector<double> scores;  // class distribution (DL: weighted score sum)
  std::size_t label = 0;
  AttentionSet attention;
};

class Model {
 public:
  // embedding_init is |vocabulary| × embedding_dim.
  Model(const ModelConfig& config, Vocabulary vocabulary, const Tensor& embedding_init);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocabulary() const { return vocabulary_; }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }

  // Per-band statistics of the valid MFSC frames; stored as buffers.
  void fit_audio_normalization(const std::vector<ModelInput>& inputs);

  struct Branches {
    Var t_h, t_alpha, w_h, w_alpha;
    std::vector<Var> f_alpha;
  };
  // Branches left out are returned as empty handles.
  Branches branches(Tape& tape, const ModelInput& input, bool with_text = true, bool with_audio = true);
  Branches constant_branches(Tape& tape, const BranchTensors& cached);
  BranchTensors branch_tensors(const ModelInput& input);

  Var text_probe_logits(Tape& tape, const Branches& b, bool training, Rng& rng);
  Var audio_probe_logits(Tape& tape, const Branches& b, bool training, Rng& rng);
  // Fusion-stage logits for hf, vf, faf and ul.
  Var head_logits(Tape& tape, const Branches& b, bool training, Rng& rng,
                  std::optional<SharedWordVectors>* shared = nullptr);
  Var stage_logits(Tape& tape, Stage stage, const Branches& b, bool training, Rng& rng);
  // Whether a stage has anything to train for this strategy.
  bool stage_trainable(Stage stage) const;
  std::vector<Parameter*> stage_parameters(Stage stage, bool freeze_branches);

  Prediction predict(const ModelInput& input);
  Prediction predict(const BranchTensors& cached);
  std::vector<std::size_t> encode(const std::vector<std::string>& tokens) const { return vocabulary_.ids(tokens); }

  TextBranchParams text_params() const { return text_; }
  AudioBranchParams audio_params() const { return audio_; }
  FusionParams fusion_params() const { return fusion_; }
  DecisionParams decision_params() const { return decision_; }

  nlohmann::json metadata = nlohmann::json::object();

  // Used when restoring from a checkpoint: same layout, values replaced.
  struct RestoreTag {};
  Model(RestoreTag, const ModelConfig& config, Vocabulary vocabulary);

 private:
  void build(const Tensor* embedding_init);
  std::vector<Var> audio_word_frames(Tape& tape, const ModelInput& input);
  Var probe(Tape& tape, const DenseParams& p, Var h, Var alpha, bool training, Rng& rng);
  Prediction predict_with(Tape& tape, const Branches& b);

  ModelConfig config_;
  Vocabulary vocabulary_;
  ParameterSet params_;
  TextBranchParams text_;
  AudioBranchParams audio_;
  DenseParams text_probe_, audio_probe_;
  FusionParams fusion_;
  DecisionParams decision_;
  DenseParams ul_head_;
  Parameter* norm_mean_ = nullptr;
  Parameter* norm_std_ = nullptr;
};

// Initial embedding matrix: rows for vocabulary tokens taken from `table`
// where present, otherwise the seeded OOV vector.
Tensor embedding_matrix(const Vocabulary& vocabulary, const EmbeddingTable& table, std::uint64_t seed);

std::vector<double> to_vector(const Tensor& t);
std::size_t argmax(const std::vector<double>& v);

}  // namespace wordfuse
