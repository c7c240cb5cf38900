#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wordfuse/autodiff.hpp"
#include "wordfuse/encoders.hpp"

namespace wordfuse {

enum class Strategy { kHf, kVf, kFaf, kUl, kDl };

Strategy parse_strategy(const std::string& name);
const char* strategy_name(Strategy s);
// HF, VF and FAF produce word vectors for the convolutional head.
bool is_word_level(Strategy s);

// out = x · wᵀ + b with w [out × in]; b is absent when a normalization follows
struct DenseParams {
  Parameter* w = nullptr;
  Parameter* b = nullptr;
};
DenseParams make_dense(ParameterSet& set, const std::string& prefix, std::size_t in, std::size_t out, Rng& rng,
                       bool bias = true);
DenseParams bind_dense(ParameterSet& set, const std::string& prefix);
Var dense(Tape& tape, const DenseParams& p, Var x);

// Optional per-feature normalization applied to a dense pre-activation.
struct NormParams {
  Parameter* gamma = nullptr;
  Parameter* beta = nullptr;
  bool enabled() const { return gamma != nullptr; }
};
NormParams make_norm(ParameterSet& set, const std::string& prefix, std::size_t dim);
NormParams bind_norm(ParameterSet& set, const std::string& prefix);
Var apply_norm(Tape& tape, const NormParams& p, Var x);

struct FusionParams {
  DenseParams dense;     // [t ; w] (2·branch) → shared dimension
  AttentionParams faf;   // W_u, b_u, v_u; unset unless FAF
  NormParams norm;
};

struct SharedWordVectors {
  Var v;  // N × shared
  std::optional<Var> s_alpha;
  std::optional<Var> u_alpha;
};

// V_i = tanh(Dense([t_alpha_i·t_h_i ; w_alpha_i·w_h_i]))
SharedWordVectors horizontal_fusion(Tape& tape, const FusionParams& p, Var t_h, Var t_alpha, Var w_h, Var w_alpha);
// h_i = tanh(Dense([t_h_i ; w_h_i])), s = (t_alpha + w_alpha)/2, V_i = s_i·h_i
SharedWordVectors vertical_fusion(Tape& tape, const FusionParams& p, Var t_h, Var t_alpha, Var w_h, Var w_alpha);
// u = softmax(tanh(h·W_uᵀ + b_u)·v_u) + s (mass 2), V_i = u_i·h_i
SharedWordVectors faf_fusion(Tape& tape, const FusionParams& p, Var t_h, Var t_alpha, Var w_h, Var w_alpha);
SharedWordVectors fuse(Tape& tape, Strategy s, const FusionParams& p, Var t_h, Var t_alpha, Var w_h, Var w_alpha);

// [Σ t_alpha_i t_h_i ; Σ w_alpha_i w_h_i]
Var ul_fusion_baseline(Var t_h, Var t_alpha, Var w_h, Var w_alpha);

inline constexpr double kDlTextWeight = 1.2;
inline constexpr double kDlAudioWeight = 0.8;
std::vector<double> dl_fusion_baseline(const std::vector<double>& p_text, const std::vector<double>& p_audio);

}  // namespace wordfuse
