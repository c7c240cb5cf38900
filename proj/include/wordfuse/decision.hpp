#pragma once

#include <vector>

#include "wordfuse/autodiff.hpp"
#include "wordfuse/fusion.hpp"

namespace wordfuse {

struct ConvBank {
  std::size_t width = 0;
  Parameter* w = nullptr;  // filters × (width · dim)
  Parameter* b = nullptr;  // filters; absent under normalization
  NormParams norm;
};

struct DecisionParams {
  std::vector<ConvBank> banks;
  DenseParams out;  // (banks · filters) → classes
  std::size_t max_width() const;
};

DecisionParams make_decision(ParameterSet& set, const std::string& prefix, const std::vector<std::size_t>& widths,
                             std::size_t filters, std::size_t dim, std::size_t classes, bool norm, Rng& rng);
DecisionParams bind_decision(ParameterSet& set, const std::string& prefix, const std::vector<std::size_t>& widths);

// f_i = tanh(W_c · V[i : i+k] + b_c), valid windows only: [(N − k + 1) × filters].
Var conv_over_words(Tape& tape, const ConvBank& bank, Var v);
ad::MaxResult max_pool_time(Var features);

// V is zero-padded to the widest filter; windows made only of padding are
// left out of the pooling. Returns logits; dropout hits the pooled vector.
Var classify_logits(Tape& tape, const DecisionParams& p, Var v, double dropout_rate, bool training, Rng& rng);
Var classify(Tape& tape, const DecisionParams& p, Var v);

}  // namespace wordfuse
