#pragma once

#include <filesystem>
#include <vector>

#include "wordfuse/corpus.hpp"
#include "wordfuse/dsp.hpp"

namespace wordfuse {

// Toy corpus whose label is (keyword + keyword tone) mod classes. Utterances
// come in groups that share distractors, durations and noise, spanning every
// keyword × tone combination, so identical transcripts and identical
// waveforms each occur with several labels.
struct SynthConfig {
  std::size_t n_per_class = 16;
  std::size_t classes = 2;
  std::uint64_t seed = 0;
  int sample_rate = 16000;
  double hop_ms = 10.0;
  std::size_t min_words = 3;
  std::size_t max_words = 8;
  std::size_t min_word_frames = 8;
  std::size_t max_word_frames = 14;
  double amplitude = 0.3;
  double noise = 0.005;
  std::size_t speakers = 4;
  bool verify = true;
};

struct SynthCorpus {
  std::vector<UtteranceRecord> records;
  std::vector<AudioBuffer> audio;
  // Training accuracy of single-modality linear probes (NaN when not verified).
  double text_probe_accuracy = 0.0;
  double audio_probe_accuracy = 0.0;
};

const std::vector<std::string>& synth_keywords();
const std::vector<std::string>& synth_distractors();
double synth_keyword_tone_hz(std::size_t tone);
double synth_distractor_tone_hz(const std::string& word);

SynthCorpus synth_toy_corpus(const SynthConfig& config);
// Writes <dir>/audio/<id>.wav and <dir>/manifest.jsonl.
void write_synth_corpus(const std::filesystem::path& dir, const SynthCorpus& corpus);

// Softmax regression fitted by full-batch gradient descent; returns the
// training accuracy. Features are standardized per column first.
double linear_probe_accuracy(std::vector<std::vector<double>> features, const std::vector<std::size_t>& labels,
                             std::size_t classes, std::size_t iterations = 2000);

std::vector<std::vector<double>> bag_of_words_features(const std::vector<UtteranceRecord>& records);
std::vector<std::vector<double>> mean_mfsc_features(const std::vector<AudioBuffer>& audio, const MfscConfig& config = {});

}  // namespace wordfuse
