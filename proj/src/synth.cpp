#include "wordfuse/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "wordfuse/error.hpp"
#include "wordfuse/wav.hpp"

namespace wordfuse {

const std::vector<std::string>& synth_keywords() {
  static const std::vector<std::string> words{"great", "awful", "fine", "boring", "superb", "dreadful"};
  return words;
}

const std::vector<std::string>& synth_distractors() {
  static const std::vector<std::string> words{"the", "movie", "was", "really", "plot", "quite", "and", "it"};
  return words;
}

double synth_keyword_tone_hz(std::size_t tone) {
  static const double tones[] = {3000.0, 250.0, 5000.0, 420.0, 6500.0, 160.0};
  return tones[tone % std::size(tones)];
}

double synth_distractor_tone_hz(const std::string& word) {
  static const std::map<std::string, double> tones{{"the", 600.0},  {"movie", 800.0}, {"was", 1000.0},
                                                    {"really", 1250.0}, {"plot", 1500.0}, {"quite", 1800.0},
                                                    {"and", 2200.0}, {"it", 2600.0}};
  return tones.at(word);
}

namespace {

struct Group {
  std::vector<std::string> distractors;  // empty string marks the keyword slot
  std::vector<std::size_t> frames;
  std::uint64_t noise_seed = 0;
  std::size_t speaker = 0;
};

AudioBuffer render(const SynthConfig& cfg, const std::vector<double>& tones, const std::vector<std::size_t>& frames,
                   std::uint64_t noise_seed) {
  const std::size_t hop = ms_to_samples(cfg.hop_ms, cfg.sample_rate);
  const std::size_t tail = ms_to_samples(25.0, cfg.sample_rate);
  std::size_t total = tail;
  for (auto f : frames) total += f * hop;
  AudioBuffer audio;
  audio.sample_rate = cfg.sample_rate;
  audio.samples.assign(total, 0.0);
  Rng noise(noise_seed);
  for (auto& s : audio.samples) s = cfg.noise * noise.uniform(-1.0, 1.0);
  const std::size_t fade = ms_to_samples(5.0, cfg.sample_rate);
  std::size_t offset = 0;
  for (std::size_t w = 0; w < tones.size(); ++w) {
    const std::size_t len = frames[w] * hop;
    for (std::size_t i = 0; i < len; ++i) {
      double env = 1.0;
      if (i < fade) env = 0.5 - 0.5 * std::cos(M_PI * i / fade);
      else if (len - i <= fade) env = 0.5 - 0.5 * std::cos(M_PI * (len - i) / fade);
      const double t = static_cast<double>(i) / cfg.sample_rate;
      audio.samples[offset + i] += cfg.amplitude * env * std::sin(2.0 * M_PI * tones[w] * t);
    }
    offset += len;
  }
  return audio;
}

}  // namespace

SynthCorpus synth_toy_corpus(const SynthConfig& cfg) {
  if (cfg.classes < 2) fail(ErrorKind::kConfig, "toy corpus needs at least 2 classes");
  if (cfg.classes > synth_keywords().size()) {
    fail(ErrorKind::kConfig, "toy corpus supports at most " + std::to_string(synth_keywords().size()) + " classes");
  }
  if (cfg.min_words < 1 || cfg.max_words < cfg.min_words) fail(ErrorKind::kConfig, "bad word-count range");
  if (cfg.min_word_frames < 1 || cfg.max_word_frames < cfg.min_word_frames) fail(ErrorKind::kConfig, "bad word-length range");
  Rng rng(cfg.seed);
  SynthCorpus corpus;
  std::vector<std::size_t> per_class(cfg.classes, 0);
  const auto& distractors = synth_distractors();
  std::size_t group_index = 0;
  while (*std::min_element(per_class.begin(), per_class.end()) < cfg.n_per_class) {
    Group g;
    const std::size_t n_words = cfg.min_words + rng.below(cfg.max_words - cfg.min_words + 1);
    const std::size_t slot = rng.below(n_words);
    std::string previous;
    for (std::size_t w = 0; w < n_words; ++w) {
      if (w == slot) {
        g.distractors.emplace_back();
        previous.clear();
      } else {
        std::string word;
        do {
          word = distractors[rng.below(distractors.size())];
        } while (word == previous);
        g.distractors.push_back(word);
        previous = word;
      }
      g.frames.push_back(cfg.min_word_frames + rng.below(cfg.max_word_frames - cfg.min_word_frames + 1));
    }
    g.noise_seed = rng.next();
    g.speaker = group_index % std::max<std::size_t>(1, cfg.speakers);
    for (std::size_t tone = 0; tone < cfg.classes; ++tone) {
      // Rendering depends on the tone only, so all keywords share this waveform.
      std::vector<double> tones;
      for (const auto& d : g.distractors) tones.push_back(d.empty() ? synth_keyword_tone_hz(tone) : synth_distractor_tone_hz(d));
      AudioBuffer audio;
      bool rendered = false;
      for (std::size_t kw = 0; kw < cfg.classes; ++kw) {
        const std::size_t label = (kw + tone) % cfg.classes;
        if (per_class[label] >= cfg.n_per_class) continue;
        if (!rendered) audio = render(cfg, tones, g.frames, g.noise_seed), rendered = true;
        UtteranceRecord r;
        r.id = "toy" + std::to_string(group_index) + "_k" + std::to_string(kw) + "_t" + std::to_string(tone);
        r.label = label;
        r.audio = "audio/" + r.id + ".wav";
        r.speaker = "spk" + std::to_string(g.speaker);
        std::vector<WordInterval> ivs;
        std::vector<TimedWord> ts;
        std::size_t frame = 0;
        for (std::size_t w = 0; w < n_words; ++w) {
          const std::string token = g.distractors[w].empty() ? synth_keywords()[kw] : g.distractors[w];
          r.tokens.push_back(token);
          ivs.push_back(WordInterval{w, frame, frame + g.frames[w]});
          ts.push_back(TimedWord{token, frame * cfg.hop_ms / 1000.0, (frame + g.frames[w]) * cfg.hop_ms / 1000.0});
          frame += g.frames[w];
        }
        r.intervals = std::move(ivs);
        r.timestamps = std::move(ts);
        corpus.records.push_back(std::move(r));
        corpus.audio.push_back(audio);
        ++per_class[label];
      }
    }
    ++group_index;
  }
  if (cfg.verify) {
    std::vector<std::size_t> labels;
    for (const auto& r : corpus.records) labels.push_back(r.label);
    corpus.text_probe_accuracy = linear_probe_accuracy(bag_of_words_features(corpus.records), labels, cfg.classes);
    MfscConfig mc;
    mc.hop_ms = cfg.hop_ms;
    corpus.audio_probe_accuracy = linear_probe_accuracy(mean_mfsc_features(corpus.audio, mc), labels, cfg.classes);
  } else {
    corpus.text_probe_accuracy = corpus.audio_probe_accuracy = std::numeric_limits<double>::quiet_NaN();
  }
  return corpus;
}

void write_synth_corpus(const std::filesystem::path& dir, const SynthCorpus& corpus) {
  std::filesystem::create_directories(dir / "audio");
  for (std::size_t i = 0; i < corpus.records.size(); ++i) write_wav(dir / corpus.records[i].audio, corpus.audio[i]);
  save_manifest(dir / "manifest.jsonl", corpus.records);
}

double linear_probe_accuracy(std::vector<std::vector<double>> x, const std::vector<std::size_t>& labels,
                             std::size_t classes, std::size_t iterations) {
  if (x.empty()) return 0.0;
  const std::size_t n = x.size(), d = x[0].size();
  for (std::size_t j = 0; j < d; ++j) {
    double mu = 0.0, var = 0.0;
    for (const auto& row : x) mu += row[j];
    mu /= static_cast<double>(n);
    for (const auto& row : x) var += (row[j] - mu) * (row[j] - mu);
    const double sd = std::sqrt(var / static_cast<double>(n));
    for (auto& row : x) row[j] = sd > 1e-12 ? (row[j] - mu) / sd : 0.0;
  }
  std::vector<double> w(classes * (d + 1), 0.0);
  std::vector<double> grad(w.size());
  std::vector<double> logits(classes);
  const double lr = 0.5;
  auto score = [&](const std::vector<double>& row, std::size_t c) {
    double s = w[c * (d + 1) + d];
    for (std::size_t j = 0; j < d; ++j) s += w[c * (d + 1) + j] * row[j];
    return s;
  };
  for (std::size_t it = 0; it < iterations; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < classes; ++c) mx = std::max(mx, logits[c] = score(x[i], c));
      double z = 0.0;
      for (auto& l : logits) z += (l = std::exp(l - mx));
      for (std::size_t c = 0; c < classes; ++c) {
        const double g = logits[c] / z - (c == labels[i] ? 1.0 : 0.0);
        for (std::size_t j = 0; j < d; ++j) grad[c * (d + 1) + j] += g * x[i][j];
        grad[c * (d + 1) + d] += g;
      }
    }
    for (std::size_t k = 0; k < w.size(); ++k) w[k] -= lr * grad[k] / static_cast<double>(n);
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < classes; ++c)
      if (score(x[i], c) > score(x[i], best)) best = c;
    correct += best == labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

std::vector<std::vector<double>> bag_of_words_features(const std::vector<UtteranceRecord>& records) {
  const Vocabulary vocab = Vocabulary::from_records(records);
  std::vector<std::vector<double>> out;
  for (const auto& r : records) {
    std::vector<double> counts(vocab.size(), 0.0);
    for (const auto& t : r.tokens) counts[vocab.id(t)] += 1.0;
    out.push_back(std::move(counts));
  }
  return out;
}

std::vector<std::vector<double>> mean_mfsc_features(const std::vector<AudioBuffer>& audio, const MfscConfig& config) {
  std::vector<std::vector<double>> out;
  for (const auto& a : audio) {
    const MelFilterBank bank = build_filterbank(a.sample_rate, config);
    const FrameMatrix frames = extract_mfsc(a, bank, config);
    std::vector<double> mean(bank.n_filters, 0.0);
    for (const auto& f : frames)
      for (std::size_t b = 0; b < mean.size(); ++b) mean[b] += f[b] / static_cast<double>(frames.size());
    out.push_back(std::move(mean));
  }
  return out;
}

}  // namespace wordfuse
