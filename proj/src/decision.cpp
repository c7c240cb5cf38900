#include "wordfuse/decision.hpp"

#include <algorithm>

#include "wordfuse/error.hpp"

namespace wordfuse {

std::size_t DecisionParams::max_width() const {
  std::size_t k = 0;
  for (const auto& b : banks) k = std::max(k, b.width);
  return k;
}

DecisionParams make_decision(ParameterSet& set, const std::string& prefix, const std::vector<std::size_t>& widths,
                             std::size_t filters, std::size_t dim, std::size_t classes, bool norm, Rng& rng) {
  if (widths.empty() || filters == 0) fail(ErrorKind::kConfig, "decision head needs at least one width and filter");
  for (std::size_t k : widths) {
    if (k == 0) fail(ErrorKind::kConfig, "filter width must be positive");
    const std::string name = prefix + ".conv" + std::to_string(k);
    add_matrix(set, name + ".w", filters, k * dim, rng);
    if (norm) make_norm(set, name + ".norm", filters);
    else add_zeros(set, name + ".b", {filters});
  }
  make_dense(set, prefix + ".out", widths.size() * filters, classes, rng);
  return bind_decision(set, prefix, widths);
}

DecisionParams bind_decision(ParameterSet& set, const std::string& prefix, const std::vector<std::size_t>& widths) {
  DecisionParams p;
  for (std::size_t k : widths) {
    const std::string name = prefix + ".conv" + std::to_string(k);
    Parameter* b = set.contains(name + ".b") ? &set.get(name + ".b") : nullptr;
    p.banks.push_back({k, &set.get(name + ".w"), b, bind_norm(set, name + ".norm")});
  }
  p.out = bind_dense(set, prefix + ".out");
  return p;
}

Var conv_over_words(Tape& tape, const ConvBank& bank, Var v) {
  const Tensor& V = v.value();
  if (V.rank() != 2 || V.dim(0) == 0) fail(ErrorKind::kDimension, "conv_over_words needs a non-empty word matrix");
  if (bank.w->value.dim(1) != bank.width * V.dim(1)) {
    fail(ErrorKind::kDimension, "filter of width " + std::to_string(bank.width) + " expects word vectors of size " +
                                    std::to_string(bank.w->value.dim(1) / bank.width) + ", got " +
                                    std::to_string(V.dim(1)));
  }
  Var windows = ad::unfold_rows(v, bank.width);
  Var pre = ad::matmul_nt(windows, tape.parameter(*bank.w));
  if (bank.b) pre = ad::add_bias(pre, tape.parameter(*bank.b));
  return ad::tanh(apply_norm(tape, bank.norm, pre));
}

ad::MaxResult max_pool_time(Var features) { return ad::max_over_axis(features, 0); }

Var classify_logits(Tape& tape, const DecisionParams& p, Var v, double dropout_rate, bool training, Rng& rng) {
  const std::size_t n = v.value().rank() == 2 ? v.value().dim(0) : 0;
  if (n == 0) fail(ErrorKind::kDimension, "classify needs at least one word vector");
  const std::size_t k_max = p.max_width();
  Var padded = n < k_max ? ad::pad_rows(v, k_max) : v;
  std::vector<Var> pooled;
  for (const auto& bank : p.banks) {
    Var f = conv_over_words(tape, bank, padded);
    // Window i starts at word i; windows starting past the last real word are pure padding.
    const std::size_t keep = std::min(f.value().dim(0), n);
    if (keep < f.value().dim(0)) f = ad::rows(f, 0, keep);
    pooled.push_back(max_pool_time(f).values);
  }
  Var c = ad::concat(pooled, 0);
  c = ad::dropout(c, dropout_rate, training, rng);
  return dense(tape, p.out, c);
}

Var classify(Tape& tape, const DecisionParams& p, Var v) {
  Rng unused(0);
  return ad::softmax(classify_logits(tape, p, v, 0.0, false, unused));
}

}  // namespace wordfuse
