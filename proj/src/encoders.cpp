#include "wordfuse/encoders.hpp"

#include <algorithm>

#include "wordfuse/error.hpp"

namespace wordfuse {

GruParams make_gru(ParameterSet& set, const std::string& prefix, std::size_t input_dim, std::size_t hidden, Rng& rng) {
  add_matrix(set, prefix + ".w_x", 3 * hidden, input_dim, rng);
  add_zeros(set, prefix + ".b", {3 * hidden});
  add_matrix(set, prefix + ".u_zr", 2 * hidden, hidden, rng);
  add_matrix(set, prefix + ".u_h", hidden, hidden, rng);
  return bind_gru(set, prefix);
}

BiGruParams make_bi_gru(ParameterSet& set, const std::string& prefix, std::size_t input_dim, std::size_t hidden,
                        Rng& rng) {
  return {make_gru(set, prefix + ".fwd", input_dim, hidden, rng), make_gru(set, prefix + ".bwd", input_dim, hidden, rng)};
}

AttentionParams make_attention(ParameterSet& set, const std::string& prefix, std::size_t dim, Rng& rng) {
  add_matrix(set, prefix + ".w", dim, dim, rng);
  add_zeros(set, prefix + ".b", {dim});
  add_uniform(set, prefix + ".v", {dim}, 0.1, rng);
  return bind_attention(set, prefix);
}

GruParams bind_gru(ParameterSet& set, const std::string& prefix) {
  GruParams g;
  g.w_x = &set.get(prefix + ".w_x");
  g.b = &set.get(prefix + ".b");
  g.u_zr = &set.get(prefix + ".u_zr");
  g.u_h = &set.get(prefix + ".u_h");
  g.hidden = g.u_h->value.dim(0);
  g.input_dim = g.w_x->value.dim(1);
  if (g.w_x->value.dim(0) != 3 * g.hidden || g.b->value.size() != 3 * g.hidden ||
      g.u_zr->value.shape() != Shape{2 * g.hidden, g.hidden} || g.u_h->value.shape() != Shape{g.hidden, g.hidden}) {
    fail(ErrorKind::kDimension, "inconsistent GRU parameter shapes under '" + prefix + "'");
  }
  return g;
}

BiGruParams bind_bi_gru(ParameterSet& set, const std::string& prefix) {
  return {bind_gru(set, prefix + ".fwd"), bind_gru(set, prefix + ".bwd")};
}

AttentionParams bind_attention(ParameterSet& set, const std::string& prefix) {
  return {&set.get(prefix + ".w"), &set.get(prefix + ".b"), &set.get(prefix + ".v")};
}

namespace {

// xp = W_x x + b already computed.
Var gru_step_projected(Tape& tape, const GruParams& p, Var xp, Var h) {
  const std::size_t H = p.hidden;
  Var zr = ad::sigmoid(ad::add(ad::slice(xp, 0, 2 * H), ad::matmul(tape.parameter(*p.u_zr), h)));
  Var z = ad::slice(zr, 0, H);
  Var r = ad::slice(zr, H, H);
  Var cand = ad::tanh(ad::add(ad::slice(xp, 2 * H, H), ad::matmul(tape.parameter(*p.u_h), ad::mul(r, h))));
  return ad::add(h, ad::mul(z, ad::sub(cand, h)));
}

std::vector<Var> run_direction(Tape& tape, const GruParams& p, Var projected, const std::vector<std::size_t>& order) {
  Var h = tape.constant(Tensor({p.hidden}));
  std::vector<Var> out;
  for (std::size_t t : order) {
    h = gru_step_projected(tape, p, ad::row(projected, t), h);
    out.push_back(h);
  }
  return out;
}

}  // namespace

Var gru_step(Tape& tape, const GruParams& p, Var x, Var h_prev) {
  if (x.value().rank() != 1 || x.size() != p.input_dim || h_prev.value().rank() != 1 || h_prev.size() != p.hidden) {
    fail(ErrorKind::kDimension, "gru_step expects x [" + std::to_string(p.input_dim) + "] and h [" +
                                    std::to_string(p.hidden) + "], got " + shape_string(x.shape()) + " and " +
                                    shape_string(h_prev.shape()));
  }
  Var xp = ad::add(ad::matmul(tape.parameter(*p.w_x), x), tape.parameter(*p.b));
  return gru_step_projected(tape, p, xp, h_prev);
}

Var bi_gru(Tape& tape, const BiGruParams& p, Var seq, const Mask& mask) {
  const Tensor& X = seq.value();
  if (X.rank() != 2 || X.dim(1) != p.forward.input_dim || X.dim(1) != p.backward.input_dim) {
    fail(ErrorKind::kDimension, "bi_gru input " + shape_string(X.shape()) + " does not match input dimension " +
                                    std::to_string(p.forward.input_dim));
  }
  const std::size_t T = X.dim(0);
  if (mask.size() != T) fail(ErrorKind::kDimension, "bi_gru mask length differs from the sequence length");
  std::vector<std::size_t> order;
  for (std::size_t t = 0; t < T; ++t)
    if (mask[t]) order.push_back(t);
  if (order.empty()) fail(ErrorKind::kEmptyAttention, "bi_gru over an all-masked sequence");
  auto project = [&](const GruParams& g) {
    return ad::add_bias(ad::matmul_nt(seq, tape.parameter(*g.w_x)), tape.parameter(*g.b));
  };
  const std::vector<Var> fwd = run_direction(tape, p.forward, project(p.forward), order);
  std::vector<std::size_t> reversed(order.rbegin(), order.rend());
  std::vector<Var> bwd = run_direction(tape, p.backward, project(p.backward), reversed);
  std::reverse(bwd.begin(), bwd.end());
  Var zero = tape.constant(Tensor({p.output_dim()}));
  std::vector<Var> rows(T, zero);
  for (std::size_t k = 0; k < order.size(); ++k) rows[order[k]] = ad::concat({fwd[k], bwd[k]}, 0);
  return ad::stack(rows);
}

AttentionResult attend(Tape& tape, const AttentionParams& p, Var states, const Mask& mask) {
  Var e = ad::tanh(ad::add_bias(ad::matmul_nt(states, tape.parameter(*p.w)), tape.parameter(*p.b)));
  Var scores = ad::matmul(e, tape.parameter(*p.v));
  return {scores, ad::masked_softmax(scores, mask)};
}

Var weighted_sum(Var alpha, Var states) { return ad::matmul(alpha, states); }

TextBranchOutput text_branch(Tape& tape, const TextBranchParams& p, Var embedded, const Mask& mask) {
  Var t_h = bi_gru(tape, p.gru, embedded, mask);
  return {t_h, attend(tape, p.attention, t_h, mask).alpha};
}

TextBranchOutput text_branch(Tape& tape, const TextBranchParams& p, const std::vector<std::size_t>& token_ids) {
  Var embedded = ad::embedding(tape.parameter(*p.embedding), token_ids);
  return text_branch(tape, p, embedded, Mask(token_ids.size(), 1));
}

FrameAttentionOutput frame_attention(Tape& tape, const AudioBranchParams& p, Var word_frames, std::size_t padded_length) {
  const std::size_t n = word_frames.value().rank() == 2 ? word_frames.value().dim(0) : 0;
  if (n == 0) fail(ErrorKind::kAlignment, "word with no frames");
  if (n > padded_length) {
    fail(ErrorKind::kDimension, std::to_string(n) + " frames exceed the padded length " + std::to_string(padded_length));
  }
  Var states = bi_gru(tape, p.frame_gru, word_frames, Mask(n, 1));
  Var padded = ad::pad_rows(states, padded_length);
  Mask mask(padded_length, 0);
  std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(n), 1);
  Var alpha = attend(tape, p.frame_attention, padded, mask).alpha;
  return {weighted_sum(alpha, padded), alpha};
}

AudioBranchOutput audio_branch(Tape& tape, const AudioBranchParams& p, const std::vector<Var>& word_frames,
                               std::size_t padded_length) {
  if (word_frames.empty()) fail(ErrorKind::kAlignment, "utterance has no words");
  AudioBranchOutput out;
  std::vector<Var> f_v;
  for (Var w : word_frames) {
    FrameAttentionOutput fa = frame_attention(tape, p, w, padded_length);
    f_v.push_back(fa.f_v);
    out.f_alpha.push_back(fa.f_alpha);
  }
  const Mask mask(f_v.size(), 1);
  out.w_h = bi_gru(tape, p.word_gru, ad::stack(f_v), mask);
  out.w_alpha = attend(tape, p.word_attention, out.w_h, mask).alpha;
  return out;
}

Tensor word_frame_tensor(const MfscMap& map, std::size_t word, const std::vector<double>* mean,
                         const std::vector<double>* stddev) {
  if (word >= map.words) fail(ErrorKind::kDimension, "word " + std::to_string(word) + " outside the map");
  const std::size_t n = map.valid_frames[word];
  if (n == 0) fail(ErrorKind::kAlignment, "word " + std::to_string(word) + " has no frames");
  Tensor t({n, map.bands});
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t b = 0; b < map.bands; ++b) {
      double v = map.at(word, b, j);
      if (mean && stddev) v = (v - (*mean)[b]) / (*stddev)[b];
      t.at(j, b) = v;
    }
  }
  return t;
}

}  // namespace wordfuse
