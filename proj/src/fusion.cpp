#include "wordfuse/fusion.hpp"

#include "wordfuse/error.hpp"

namespace wordfuse {

Strategy parse_strategy(const std::string& name) {
  if (name == "hf") return Strategy::kHf;
  if (name == "vf") return Strategy::kVf;
  if (name == "faf") return Strategy::kFaf;
  if (name == "ul") return Strategy::kUl;
  if (name == "dl") return Strategy::kDl;
  fail(ErrorKind::kConfig, "unknown fusion strategy '" + name + "' (hf, vf, faf, ul, dl)");
}

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kHf: return "hf";
    case Strategy::kVf: return "vf";
    case Strategy::kFaf: return "faf";
    case Strategy::kUl: return "ul";
    case Strategy::kDl: return "dl";
  }
  return "?";
}

bool is_word_level(Strategy s) { return s == Strategy::kHf || s == Strategy::kVf || s == Strategy::kFaf; }

DenseParams make_dense(ParameterSet& set, const std::string& prefix, std::size_t in, std::size_t out, Rng& rng,
                       bool bias) {
  add_matrix(set, prefix + ".w", out, in, rng);
  if (bias) add_zeros(set, prefix + ".b", {out});
  return bind_dense(set, prefix);
}

DenseParams bind_dense(ParameterSet& set, const std::string& prefix) {
  Parameter* b = set.contains(prefix + ".b") ? &set.get(prefix + ".b") : nullptr;
  return {&set.get(prefix + ".w"), b};
}

Var dense(Tape& tape, const DenseParams& p, Var x) {
  Var y = x.value().rank() == 1 ? ad::matmul(tape.parameter(*p.w), x) : ad::matmul_nt(x, tape.parameter(*p.w));
  return p.b ? ad::add_bias(y, tape.parameter(*p.b)) : y;
}

NormParams make_norm(ParameterSet& set, const std::string& prefix, std::size_t dim) {
  set.add(prefix + ".gamma", Tensor({dim}, 1.0));
  add_zeros(set, prefix + ".beta", {dim});
  return bind_norm(set, prefix);
}

NormParams bind_norm(ParameterSet& set, const std::string& prefix) {
  if (!set.contains(prefix + ".gamma")) return {};
  return {&set.get(prefix + ".gamma"), &set.get(prefix + ".beta")};
}

Var apply_norm(Tape& tape, const NormParams& p, Var x) {
  if (!p.enabled()) return x;
  return ad::feature_norm(x, tape.parameter(*p.gamma), tape.parameter(*p.beta));
}

namespace {

void check_branches(Var t_h, Var t_alpha, Var w_h, Var w_alpha) {
  const Tensor& th = t_h.value();
  const Tensor& wh = w_h.value();
  if (th.rank() != 2 || wh.rank() != 2) fail(ErrorKind::kFusion, "branch states must be matrices");
  if (th.dim(0) != wh.dim(0)) {
    fail(ErrorKind::kFusion, "text branch has " + std::to_string(th.dim(0)) + " words, audio branch " +
                                 std::to_string(wh.dim(0)));
  }
  if (t_alpha.size() != th.dim(0) || w_alpha.size() != wh.dim(0)) {
    fail(ErrorKind::kFusion, "attention length differs from the word count");
  }
}

Var shared_states(Tape& tape, const FusionParams& p, Var t_h, Var w_h) {
  return ad::tanh(apply_norm(tape, p.norm, dense(tape, p.dense, ad::concat({t_h, w_h}, 1))));
}

}  // namespace

SharedWordVectors horizontal_fusion(Tape& tape, const FusionParams& p, Var t_h, Var t_alpha, Var w_h, Var w_alpha) {
  check_branches(t_h, t_alpha, w_h, w_alpha);
  Var t_v = ad::scale_rows(t_alpha, t_h);
  Var w_v = ad::scale_rows(w_alpha, w_h);
  return {shared_states(tape, p, t_v, w_v), std::nullopt, std::nullopt};
}

SharedWordVectors vertical_fusion(Tape& tape, const FusionParams& p, Var t_h, Var t_alpha, Var w_h, Var w_alpha) {
  check_branches(t_h, t_alpha, w_h, w_alpha);
  Var h = shared_states(tape, p, t_h, w_h);
  Var s = ad::scale(ad::add(t_alpha, w_alpha), 0.5);
  return {ad::scale_rows(s, h), s, std::nullopt};
}

SharedWordVectors faf_fusion(Tape& tape, const FusionParams& p, Var t_h, Var t_alpha, Var w_h, Var w_alpha) {
  check_branches(t_h, t_alpha, w_h, w_alpha);
  if (!p.faf.w) fail(ErrorKind::kFusion, "fine-tuning attention parameters are missing");
  Var h = shared_states(tape, p, t_h, w_h);
  Var s = ad::scale(ad::add(t_alpha, w_alpha), 0.5);
  Var tuned = attend(tape, p.faf, h, Mask(h.value().dim(0), 1)).alpha;
  Var u = ad::add(tuned, s);
  return {ad::scale_rows(u, h), s, u};
}

SharedWordVectors fuse(Tape& tape, Strategy s, const FusionParams& p, Var t_h, Var t_alpha, Var w_h, Var w_alpha) {
  switch (s) {
    case Strategy::kHf: return horizontal_fusion(tape, p, t_h, t_alpha, w_h, w_alpha);
    case Strategy::kVf: return vertical_fusion(tape, p, t_h, t_alpha, w_h, w_alpha);
    case Strategy::kFaf: return faf_fusion(tape, p, t_h, t_alpha, w_h, w_alpha);
    default: fail(ErrorKind::kFusion, std::string("strategy '") + strategy_name(s) + "' has no word-level fusion");
  }
}

Var ul_fusion_baseline(Var t_h, Var t_alpha, Var w_h, Var w_alpha) {
  check_branches(t_h, t_alpha, w_h, w_alpha);
  return ad::concat({weighted_sum(t_alpha, t_h), weighted_sum(w_alpha, w_h)}, 0);
}

std::vector<double> dl_fusion_baseline(const std::vector<double>& p_text, const std::vector<double>& p_audio) {
  if (p_text.size() != p_audio.size()) {
    fail(ErrorKind::kFusion, "text scores cover " + std::to_string(p_text.size()) + " classes, audio scores " +
                                 std::to_string(p_audio.size()));
  }
  std::vector<double> out(p_text.size());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = kDlTextWeight * p_text[c] + kDlAudioWeight * p_audio[c];
  return out;
}

}  // namespace wordfuse
