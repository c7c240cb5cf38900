#pragma once

#include <string>
#include <vector>

#include "wordfuse/autodiff.hpp"
#include "wordfuse/dsp.hpp"

namespace wordfuse {

// Gate blocks are stacked in the order z, r, h̃:
//   w_x [3H × in], b [3H], u_zr [2H × H], u_h [H × H].
struct GruParams {
  Parameter* w_x = nullptr;
  Parameter* b = nullptr;
  Parameter* u_zr = nullptr;
  Parameter* u_h = nullptr;
  std::size_t input_dim = 0;
  std::size_t hidden = 0;
};

struct BiGruParams {
  GruParams forward;
  GruParams backward;
  std::size_t output_dim() const { return forward.hidden + backward.hidden; }
};

// energies = tanh(states · wᵀ + b) · v
struct AttentionParams {
  Parameter* w = nullptr;
  Parameter* b = nullptr;
  Parameter* v = nullptr;
};

GruParams make_gru(ParameterSet& set, const std::string& prefix, std::size_t input_dim, std::size_t hidden, Rng& rng);
BiGruParams make_bi_gru(ParameterSet& set, const std::string& prefix, std::size_t input_dim, std::size_t hidden,
                        Rng& rng);
AttentionParams make_attention(ParameterSet& set, const std::string& prefix, std::size_t dim, Rng& rng);
GruParams bind_gru(ParameterSet& set, const std::string& prefix);
BiGruParams bind_bi_gru(ParameterSet& set, const std::string& prefix);
AttentionParams bind_attention(ParameterSet& set, const std::string& prefix);

// z = σ(W_z x + U_z h + b_z), r = σ(W_r x + U_r h + b_r),
// h̃ = tanh(W_h x + U_h (r ⊙ h) + b_h), h' = (1 − z) ⊙ h + z ⊙ h̃
Var gru_step(Tape& tape, const GruParams& p, Var x, Var h_prev);

// Runs left→right over masked-in rows with `p.forward` and right→left with
// `p.backward`; row i is [h→_i ; h←_i], zero where masked out.
Var bi_gru(Tape& tape, const BiGruParams& p, Var seq, const Mask& mask);

struct AttentionResult {
  Var energies;
  Var alpha;
};
AttentionResult attend(Tape& tape, const AttentionParams& p, Var states, const Mask& mask);
// Σ_i alpha_i · row_i
Var weighted_sum(Var alpha, Var states);

struct TextBranchParams {
  Parameter* embedding = nullptr;
  BiGruParams gru;
  AttentionParams attention;
};

struct AudioBranchParams {
  BiGruParams frame_gru;
  AttentionParams frame_attention;
  BiGruParams word_gru;
  AttentionParams word_attention;
};

struct TextBranchOutput {
  Var t_h;
  Var t_alpha;
};

struct FrameAttentionOutput {
  Var f_v;
  Var f_alpha;  // length L, zero past the valid frames
};

struct AudioBranchOutput {
  Var w_h;
  Var w_alpha;
  std::vector<Var> f_alpha;
};

TextBranchOutput text_branch(Tape& tape, const TextBranchParams& p, Var embedded, const Mask& mask);
TextBranchOutput text_branch(Tape& tape, const TextBranchParams& p, const std::vector<std::size_t>& token_ids);

// word_frames is [valid × bands] (already normalized); the result's f_alpha
// is padded with zeros to padded_length.
FrameAttentionOutput frame_attention(Tape& tape, const AudioBranchParams& p, Var word_frames, std::size_t padded_length);
AudioBranchOutput audio_branch(Tape& tape, const AudioBranchParams& p, const std::vector<Var>& word_frames,
                               std::size_t padded_length);

// Frames of word i as a [valid × bands] tensor, each band standardized with
// (x − mean) / std when statistics are given.
Tensor word_frame_tensor(const MfscMap& map, std::size_t word, const std::vector<double>* mean = nullptr,
                         const std::vector<double>* stddev = nullptr);

}  // namespace wordfuse
