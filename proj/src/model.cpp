#include "wordfuse/model.hpp"

#include <algorithm>
#include <cmath>

#include "wordfuse/error.hpp"

namespace wordfuse {

void ModelConfig::validate() const {
  if (embedding_dim == 0 || hidden == 0 || bands == 0 || filters == 0) {
    fail(ErrorKind::kConfig, "model dimensions must be positive");
  }
  if (classes < 2) fail(ErrorKind::kConfig, "need at least 2 classes");
  if (widths.empty()) fail(ErrorKind::kConfig, "need at least one filter width");
  for (auto w : widths)
    if (w == 0) fail(ErrorKind::kConfig, "filter widths must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail(ErrorKind::kConfig, "dropout must lie in [0, 1)");
}

nlohmann::json ModelConfig::to_json() const {
  return {{"embedding_dim", embedding_dim}, {"hidden", hidden},     {"bands", bands},
          {"classes", classes},             {"shared_dim", shared_dim}, {"filters", filters},
          {"widths", widths},               {"dropout", dropout},   {"batch_norm", batch_norm},
          {"train_embeddings", train_embeddings}, {"strategy", strategy_name(strategy)}, {"seed", seed}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.embedding_dim = j.at("embedding_dim").get<std::size_t>();
    c.hidden = j.at("hidden").get<std::size_t>();
    c.bands = j.at("bands").get<std::size_t>();
    c.classes = j.at("classes").get<std::size_t>();
    c.shared_dim = j.at("shared_dim").get<std::size_t>();
    c.filters = j.at("filters").get<std::size_t>();
    c.widths = j.at("widths").get<std::vector<std::size_t>>();
    c.dropout = j.at("dropout").get<double>();
    c.batch_norm = j.at("batch_norm").get<bool>();
    c.train_embeddings = j.at("train_embeddings").get<bool>();
    c.strategy = parse_strategy(j.at("strategy").get<std::string>());
    c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, std::string("model configuration: ") + e.what());
  }
  c.validate();
  return c;
}

Stage parse_stage(const std::string& name) {
  if (name == "text") return Stage::kText;
  if (name == "audio") return Stage::kAudio;
  if (name == "fusion") return Stage::kFusion;
  fail(ErrorKind::kConfig, "unknown stage '" + name + "' (text, audio, fusion)");
}

const char* stage_name(Stage s) {
  switch (s) {
    case Stage::kText: return "text";
    case Stage::kAudio: return "audio";
    case Stage::kFusion: return "fusion";
  }
  return "?";
}

Model::Model(const ModelConfig& config, Vocabulary vocabulary, const Tensor& embedding_init)
    : config_(config), vocabulary_(std::move(vocabulary)) {
  if (embedding_init.shape() != Shape{vocabulary_.size(), config_.embedding_dim}) {
    fail(ErrorKind::kDimension, "embedding matrix " + shape_string(embedding_init.shape()) + " does not match " +
                                    std::to_string(vocabulary_.size()) + " tokens × " +
                                    std::to_string(config_.embedding_dim));
  }
  build(&embedding_init);
}

Model::Model(RestoreTag, const ModelConfig& config, Vocabulary vocabulary)
    : config_(config), vocabulary_(std::move(vocabulary)) {
  build(nullptr);
}

void Model::build(const Tensor* embedding_init) {
  config_.validate();
  Rng rng(config_.seed);
  const std::size_t H = config_.hidden, B = config_.branch_dim(), D = config_.fused_dim(), C = config_.classes;
  text_.embedding = &params_.add("text.embedding",
                                 embedding_init ? *embedding_init : Tensor({vocabulary_.size(), config_.embedding_dim}),
                                 config_.train_embeddings);
  text_.gru = make_bi_gru(params_, "text.gru", config_.embedding_dim, H, rng);
  text_.attention = make_attention(params_, "text.att", B, rng);
  norm_mean_ = &params_.add("audio.norm.mean", Tensor({config_.bands}), false);
  norm_std_ = &params_.add("audio.norm.std", Tensor({config_.bands}, 1.0), false);
  audio_.frame_gru = make_bi_gru(params_, "audio.frame.gru", config_.bands, H, rng);
  audio_.frame_attention = make_attention(params_, "audio.frame.att", B, rng);
  audio_.word_gru = make_bi_gru(params_, "audio.word.gru", B, H, rng);
  audio_.word_attention = make_attention(params_, "audio.word.att", B, rng);
  text_probe_ = make_dense(params_, "probe.text", B, C, rng);
  audio_probe_ = make_dense(params_, "probe.audio", B, C, rng);
  if (is_word_level(config_.strategy)) {
    fusion_.dense = make_dense(params_, "fusion.dense", 2 * B, D, rng, !config_.batch_norm);
    if (config_.batch_norm) fusion_.norm = make_norm(params_, "fusion.norm", D);
    if (config_.strategy == Strategy::kFaf) fusion_.faf = make_attention(params_, "fusion.faf", D, rng);
    decision_ = make_decision(params_, "decision", config_.widths, config_.filters, D, C, config_.batch_norm, rng);
  } else if (config_.strategy == Strategy::kUl) {
    ul_head_ = make_dense(params_, "ul.out", 2 * B, C, rng);
  }
}

void Model::fit_audio_normalization(const std::vector<ModelInput>& inputs) {
  const std::size_t bands = config_.bands;
  std::vector<double> sum(bands, 0.0), sq(bands, 0.0);
  double count = 0.0;
  for (const auto& in : inputs) {
    if (in.mfsc.bands != bands) fail(ErrorKind::kDimension, "MFSC map of " + in.id + " has the wrong band count");
    for (std::size_t w = 0; w < in.mfsc.words; ++w) {
      for (std::size_t j = 0; j < in.mfsc.valid_frames[w]; ++j) {
        for (std::size_t b = 0; b < bands; ++b) {
          const double v = in.mfsc.at(w, b, j);
          sum[b] += v;
          sq[b] += v * v;
        }
        count += 1.0;
      }
    }
  }
  if (count == 0.0) fail(ErrorKind::kInput, "no audio frames to normalize");
  for (std::size_t b = 0; b < bands; ++b) {
    const double mean = sum[b] / count;
    const double var = std::max(0.0, sq[b] / count - mean * mean);
    const double sd = std::sqrt(var);
    norm_mean_->value[b] = mean;
    norm_std_->value[b] = sd > 1e-6 ? sd : 1.0;
  }
}

std::vector<Var> Model::audio_word_frames(Tape& tape, const ModelInput& input) {
  if (input.mfsc.bands != config_.bands) {
    fail(ErrorKind::kDimension, "MFSC map of " + input.id + " has " + std::to_string(input.mfsc.bands) +
                                    " bands, model expects " + std::to_string(config_.bands));
  }
  std::vector<Var> out;
  for (std::size_t w = 0; w < input.mfsc.words; ++w)
    out.push_back(tape.constant(word_frame_tensor(input.mfsc, w, &norm_mean_->value.storage(), &norm_std_->value.storage())));
  return out;
}

Model::Branches Model::branches(Tape& tape, const ModelInput& input, bool with_text, bool with_audio) {
  if (input.token_ids.size() != input.mfsc.words) {
    fail(ErrorKind::kFusion, input.id + ": " + std::to_string(input.token_ids.size()) + " tokens but " +
                                 std::to_string(input.mfsc.words) + " audio words");
  }
  Branches b;
  if (with_text) {
    TextBranchOutput t = text_branch(tape, text_, input.token_ids);
    b.t_h = t.t_h;
    b.t_alpha = t.t_alpha;
  }
  if (with_audio) {
    AudioBranchOutput a = audio_branch(tape, audio_, audio_word_frames(tape, input), input.mfsc.frames);
    b.w_h = a.w_h;
    b.w_alpha = a.w_alpha;
    b.f_alpha = a.f_alpha;
  }
  return b;
}

Model::Branches Model::constant_branches(Tape& tape, const BranchTensors& c) {
  Branches b{tape.constant(c.t_h), tape.constant(c.t_alpha), tape.constant(c.w_h), tape.constant(c.w_alpha), {}};
  for (const auto& f : c.f_alpha) b.f_alpha.push_back(tape.constant(f));
  return b;
}

BranchTensors Model::branch_tensors(const ModelInput& input) {
  Tape tape;
  Branches b = branches(tape, input);
  BranchTensors out{b.t_h.value(), b.t_alpha.value(), b.w_h.value(), b.w_alpha.value(), {}};
  for (Var f : b.f_alpha) out.f_alpha.push_back(f.value());
  return out;
}

Var Model::probe(Tape& tape, const DenseParams& p, Var h, Var alpha, bool training, Rng& rng) {
  return dense(tape, p, weighted_sum(alpha, ad::dropout(h, config_.dropout, training, rng)));
}

Var Model::text_probe_logits(Tape& tape, const Branches& b, bool training, Rng& rng) {
  return probe(tape, text_probe_, b.t_h, b.t_alpha, training, rng);
}

Var Model::audio_probe_logits(Tape& tape, const Branches& b, bool training, Rng& rng) {
  return probe(tape, audio_probe_, b.w_h, b.w_alpha, training, rng);
}

Var Model::head_logits(Tape& tape, const Branches& b, bool training, Rng& rng, std::optional<SharedWordVectors>* shared) {
  Var t_h = ad::dropout(b.t_h, config_.dropout, training, rng);
  Var w_h = ad::dropout(b.w_h, config_.dropout, training, rng);
  if (config_.strategy == Strategy::kUl) return dense(tape, ul_head_, ul_fusion_baseline(t_h, b.t_alpha, w_h, b.w_alpha));
  if (!is_word_level(config_.strategy)) {
    fail(ErrorKind::kConfig, std::string("strategy '") + strategy_name(config_.strategy) + "' has no trainable head");
  }
  SharedWordVectors v = fuse(tape, config_.strategy, fusion_, t_h, b.t_alpha, w_h, b.w_alpha);
  if (shared) *shared = v;
  return classify_logits(tape, decision_, v.v, config_.dropout, training, rng);
}

Var Model::stage_logits(Tape& tape, Stage stage, const Branches& b, bool training, Rng& rng) {
  switch (stage) {
    case Stage::kText: return text_probe_logits(tape, b, training, rng);
    case Stage::kAudio: return audio_probe_logits(tape, b, training, rng);
    case Stage::kFusion: return head_logits(tape, b, training, rng);
  }
  fail(ErrorKind::kConfig, "unknown stage");
}

bool Model::stage_trainable(Stage stage) const {
  return stage != Stage::kFusion || config_.strategy != Strategy::kDl;
}

std::vector<Parameter*> Model::stage_parameters(Stage stage, bool freeze_branches) {
  std::vector<std::string> prefixes;
  switch (stage) {
    case Stage::kText: prefixes = {"text.", "probe.text."}; break;
    case Stage::kAudio: prefixes = {"audio.", "probe.audio."}; break;
    case Stage::kFusion:
      prefixes = {"fusion.", "decision.", "ul."};
      if (!freeze_branches) prefixes.insert(prefixes.end(), {"text.", "audio."});
      break;
  }
  std::vector<Parameter*> out;
  for (auto& p : params_.all()) {
    bool active = false;
    for (const auto& prefix : prefixes) active = active || p.name.rfind(prefix, 0) == 0;
    p.frozen = !active;
    if (active && p.trainable) out.push_back(&p);
  }
  return out;
}

Prediction Model::predict_with(Tape& tape, const Branches& b) {
  Prediction out;
  out.attention.t_alpha = to_vector(b.t_alpha.value());
  out.attention.w_alpha = to_vector(b.w_alpha.value());
  for (Var f : b.f_alpha) out.attention.f_alpha.push_back(to_vector(f.value()));
  Rng unused(0);
  if (config_.strategy == Strategy::kDl) {
    const auto p_text = to_vector(ad::softmax(text_probe_logits(tape, b, false, unused)).value());
    const auto p_audio = to_vector(ad::softmax(audio_probe_logits(tape, b, false, unused)).value());
    out.scores = dl_fusion_baseline(p_text, p_audio);
  } else {
    std::optional<SharedWordVectors> shared;
    out.scores = to_vector(ad::softmax(head_logits(tape, b, false, unused, &shared)).value());
    if (shared && shared->s_alpha) out.attention.s_alpha = to_vector(shared->s_alpha->value());
    if (shared && shared->u_alpha) out.attention.u_alpha = to_vector(shared->u_alpha->value());
  }
  out.label = argmax(out.scores);
  return out;
}

Prediction Model::predict(const ModelInput& input) {
  Tape tape;
  return predict_with(tape, branches(tape, input));
}

Prediction Model::predict(const BranchTensors& cached) {
  Tape tape;
  return predict_with(tape, constant_branches(tape, cached));
}

Tensor embedding_matrix(const Vocabulary& vocabulary, const EmbeddingTable& table, std::uint64_t seed) {
  Tensor m({vocabulary.size(), table.dimension});
  for (std::size_t i = 0; i < vocabulary.size(); ++i) {
    const std::string& token = vocabulary.token(i);
    const std::size_t src = table.vocabulary.id(token);
    std::vector<double> row;
    if (src != 0 || token == Vocabulary::kUnknown) {
      row.assign(table.matrix.storage().begin() + static_cast<std::ptrdiff_t>(src * table.dimension),
                 table.matrix.storage().begin() + static_cast<std::ptrdiff_t>((src + 1) * table.dimension));
    } else {
      row = oov_vector(token, table.dimension, seed);
    }
    std::copy(row.begin(), row.end(), m.storage().begin() + static_cast<std::ptrdiff_t>(i * table.dimension));
  }
  return m;
}

std::vector<double> to_vector(const Tensor& t) { return t.storage(); }

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace wordfuse
