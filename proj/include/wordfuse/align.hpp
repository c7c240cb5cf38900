#pragma once

#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "wordfuse/dsp.hpp"
#include "wordfuse/interval.hpp"

namespace wordfuse {

enum class Distance { kEuclidean, kSquaredEuclidean, kManhattan };

Distance parse_distance(const std::string& name);
double frame_distance(std::span<const double> a, std::span<const double> b, Distance metric);

struct DtwResult {
  double cost = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> path;
};

inline constexpr double kUnboundedRadius = std::numeric_limits<double>::infinity();

// Slope-normalized Sakoe-Chiba band: |i·(n/m) − j| ≤ radius.
bool in_band(std::size_t i, std::size_t j, std::size_t m, std::size_t n, double radius);
double default_radius(std::size_t m, std::size_t n);

// Minimum-cost monotone warping path of a against b with steps (1,0), (0,1),
// (1,1), restricted to the band. Only in-band cells are evaluated.
DtwResult dtw_band(const FrameMatrix& a, const FrameMatrix& b, double radius, Distance metric = Distance::kEuclidean);

// Projects a path onto per-word target intervals. reference_ranges partition
// the reference axis [0, m) in word order; the result partitions [0, n).
std::vector<WordInterval> align_words(const std::vector<std::pair<std::size_t, std::size_t>>& reference_ranges,
                                      const DtwResult& dtw, std::size_t n_target);

struct TimedWord {
  std::string word;
  double start_seconds = 0.0;
  double end_seconds = 0.0;
};

// Converts word timings to frame intervals via floor(t / hop).
std::vector<WordInterval> ingest_timestamps(const std::vector<TimedWord>& records, double hop_ms, std::size_t n_frames,
                                            std::size_t expected_words);

// Mean log-mel frame and mean duration per token, used to synthesize a DTW
// reference for a transcript.
struct WordPrototype {
  std::vector<double> mean;
  double mean_frames = 0.0;
  std::size_t count = 0;
};

struct PrototypeTable {
  std::map<std::string, WordPrototype> words;
  WordPrototype fallback;

  void add(const std::string& token, const FrameMatrix& frames, const WordInterval& interval);
  void finalize();
  const WordPrototype& lookup(const std::string& token) const;
};

struct ReferenceTemplate {
  FrameMatrix frames;
  std::vector<std::pair<std::size_t, std::size_t>> word_ranges;
};

// Concatenates per-word prototypes, scaling the duration estimates so the
// template spans roughly target_frames.
ReferenceTemplate build_template(const std::vector<std::string>& tokens, const PrototypeTable& table,
                                 std::size_t target_frames);

// radius ≤ 0 selects default_radius.
std::vector<WordInterval> align_utterance(const std::vector<std::string>& tokens, const FrameMatrix& frames,
                                          const PrototypeTable& table, double radius = 0.0,
                                          Distance metric = Distance::kEuclidean);

}  // namespace wordfuse
