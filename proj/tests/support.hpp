#pragma once

#include <memory>
#include <vector>

#include "wordfuse/gradcheck.hpp"
#include "wordfuse/model.hpp"
#include "wordfuse/rng.hpp"

namespace wordfuse::testing {

inline Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.storage()) v = rng.uniform(-scale, scale);
  return t;
}

struct TinySpec {
  std::size_t vocab = 6;
  std::size_t embedding_dim = 3;
  std::size_t hidden = 2;
  std::size_t bands = 3;
  std::size_t classes = 2;
  std::size_t filters = 3;
  std::vector<std::size_t> widths{1, 2};
  Strategy strategy = Strategy::kFaf;
  bool batch_norm = false;
  std::uint64_t seed = 1;
};

inline std::unique_ptr<Model> tiny_model(const TinySpec& s) {
  std::vector<std::string> tokens;
  for (std::size_t i = 1; i < s.vocab; ++i) tokens.push_back("w" + std::to_string(i));
  Vocabulary vocab(tokens);
  Rng rng(s.seed + 1000);
  ModelConfig c;
  c.embedding_dim = s.embedding_dim;
  c.hidden = s.hidden;
  c.bands = s.bands;
  c.classes = s.classes;
  c.filters = s.filters;
  c.widths = s.widths;
  c.strategy = s.strategy;
  c.batch_norm = s.batch_norm;
  c.seed = s.seed;
  c.dropout = 0.5;
  return std::make_unique<Model>(c, vocab, random_tensor({vocab.size(), s.embedding_dim}, rng, 0.5));
}

// Random utterance of n words; word i has valid[i] frames out of L.
inline ModelInput random_input(std::size_t n, std::size_t L, std::size_t bands, std::size_t vocab, Rng& rng,
                               std::size_t label = 0) {
  ModelInput in;
  in.id = "u";
  in.label = label;
  in.mfsc.words = n;
  in.mfsc.bands = bands;
  in.mfsc.frames = L;
  in.mfsc.values.assign(n * bands * L, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    in.token_ids.push_back(rng.below(vocab));
    const std::size_t valid = 1 + rng.below(L);
    in.mfsc.valid_frames.push_back(valid);
    for (std::size_t b = 0; b < bands; ++b)
      for (std::size_t j = 0; j < valid; ++j) in.mfsc.at(i, b, j) = rng.uniform(-1.0, 1.0);
  }
  return in;
}

inline std::vector<Parameter*> trainable(Model& m) {
  std::vector<Parameter*> out;
  for (auto& p : m.parameters().all())
    if (p.trainable) out.push_back(&p);
  return out;
}

// Full-pipeline gradient check at a U(-1, 1) parameter point, on a random
// utterance labelled with a class the model does not predict.
inline double pipeline_grad_check(Model& model, std::size_t words, std::size_t frames, std::uint64_t seed) {
  Rng rng(seed);
  for (Parameter* p : trainable(model))
    for (auto& v : p->value.storage()) v = rng.uniform(-1.0, 1.0);
  const auto& c = model.config();
  ModelInput in = random_input(words, frames, c.bands, model.vocabulary().size(), rng);
  in.label = (model.predict(in).label + 1) % c.classes;
  auto loss = [&](Tape& t) {
    Rng unused(0);
    const auto b = model.branches(t, in);
    return ad::cross_entropy(model.stage_logits(t, Stage::kFusion, b, false, unused), in.label);
  };
  return grad_check_parameters(loss, trainable(model));
}

}  // namespace wordfuse::testing
