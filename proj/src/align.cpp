#include "wordfuse/align.hpp"

#include <algorithm>
#include <cmath>

#include "wordfuse/error.hpp"

namespace wordfuse {

Distance parse_distance(const std::string& name) {
  if (name == "euclidean") return Distance::kEuclidean;
  if (name == "sqeuclidean") return Distance::kSquaredEuclidean;
  if (name == "manhattan") return Distance::kManhattan;
  fail(ErrorKind::kConfig, "unknown distance '" + name + "' (euclidean, sqeuclidean, manhattan)");
}

double frame_distance(std::span<const double> a, std::span<const double> b, Distance metric) {
  if (a.size() != b.size()) {
    fail(ErrorKind::kDimension, "frame sizes disagree: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += metric == Distance::kManhattan ? std::abs(d) : d * d;
  }
  return metric == Distance::kEuclidean ? std::sqrt(s) : s;
}

bool in_band(std::size_t i, std::size_t j, std::size_t m, std::size_t n, double radius) {
  if (std::isinf(radius)) return true;
  const double center = static_cast<double>(i) * static_cast<double>(n) / static_cast<double>(m);
  return std::abs(center - static_cast<double>(j)) <= radius;
}

double default_radius(std::size_t m, std::size_t n) {
  return std::max(1.0, static_cast<double>(std::max(m, n)) / 10.0);
}

DtwResult dtw_band(const FrameMatrix& a, const FrameMatrix& b, double radius, Distance metric) {
  const std::size_t m = a.size(), n = b.size();
  if (m == 0 || n == 0) fail(ErrorKind::kAlignment, "DTW needs two non-empty sequences");
  if (!(radius >= 0.0)) fail(ErrorKind::kConfig, "DTW radius must be non-negative");
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> cost(m * n, kInf);
  auto at = [&](std::size_t i, std::size_t j) -> double& { return cost[i * n + j]; };
  const double slope = static_cast<double>(n) / static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t lo = 0, hi = n - 1;
    if (!std::isinf(radius)) {
      const double c = static_cast<double>(i) * slope;
      lo = static_cast<std::size_t>(std::max(0.0, std::ceil(c - radius - 1e-9)));
      const double upper = std::floor(c + radius + 1e-9);
      if (upper < 0.0) continue;
      hi = std::min<std::size_t>(n - 1, static_cast<std::size_t>(upper));
    }
    for (std::size_t j = lo; j <= hi && j < n; ++j) {
      if (!in_band(i, j, m, n, radius)) continue;
      double best = kInf;
      if (i == 0 && j == 0) best = 0.0;
      if (i > 0) best = std::min(best, at(i - 1, j));
      if (j > 0) best = std::min(best, at(i, j - 1));
      if (i > 0 && j > 0) best = std::min(best, at(i - 1, j - 1));
      if (best == kInf) continue;
      at(i, j) = best + frame_distance(a[i], b[j], metric);
    }
  }
  if (at(m - 1, n - 1) == kInf) {
    fail(ErrorKind::kAlignment, "no warping path fits inside radius " + std::to_string(radius) + " for lengths " +
                                    std::to_string(m) + " and " + std::to_string(n) + "; use a larger radius");
  }
  DtwResult result;
  result.cost = at(m - 1, n - 1);
  std::size_t i = m - 1, j = n - 1;
  result.path.emplace_back(i, j);
  while (i > 0 || j > 0) {
    // Preference on ties: diagonal, then vertical, then horizontal.
    double best = kInf;
    std::size_t bi = i, bj = j;
    if (i > 0 && j > 0 && at(i - 1, j - 1) < best) best = at(i - 1, j - 1), bi = i - 1, bj = j - 1;
    if (i > 0 && at(i - 1, j) < best) best = at(i - 1, j), bi = i - 1, bj = j;
    if (j > 0 && at(i, j - 1) < best) best = at(i, j - 1), bi = i, bj = j - 1;
    i = bi, j = bj;
    result.path.emplace_back(i, j);
  }
  std::reverse(result.path.begin(), result.path.end());
  return result;
}

std::vector<WordInterval> align_words(const std::vector<std::pair<std::size_t, std::size_t>>& reference_ranges,
                                      const DtwResult& dtw, std::size_t n_target) {
  if (dtw.path.empty()) fail(ErrorKind::kAlignment, "empty warping path");
  if (reference_ranges.empty()) fail(ErrorKind::kAlignment, "no words to align");
  const std::size_t words = reference_ranges.size();
  if (n_target < words) {
    fail(ErrorKind::kAlignment, std::to_string(words) + " words cannot each own a frame of " +
                                    std::to_string(n_target));
  }
  std::size_t expected_start = 0;
  for (const auto& [start, end] : reference_ranges) {
    if (start != expected_start || end <= start) fail(ErrorKind::kAlignment, "reference ranges do not partition the axis");
    expected_start = end;
  }
  const std::size_t m = expected_start;
  std::vector<std::size_t> word_of(m);
  for (std::size_t w = 0; w < words; ++w)
    for (std::size_t i = reference_ranges[w].first; i < reference_ranges[w].second; ++i) word_of[i] = w;

  // Each target frame belongs to the word of the first reference index the
  // path pairs it with; ownership is then non-decreasing in j.
  std::vector<std::size_t> owner(n_target, words);
  for (const auto& [i, j] : dtw.path) {
    if (i >= m || j >= n_target) fail(ErrorKind::kAlignment, "warping path leaves the aligned axes");
    if (owner[j] == words) owner[j] = word_of[i];
  }
  std::vector<std::size_t> counts(words, 0);
  for (std::size_t j = 0; j < n_target; ++j) {
    if (owner[j] == words) fail(ErrorKind::kAlignment, "warping path skips target frame " + std::to_string(j));
    ++counts[owner[j]];
  }
  // Empty words take one frame from their longer neighbour, or failing
  // that from the nearest word that can spare one.
  for (std::size_t w = 0; w < words; ++w) {
    if (counts[w] != 0) continue;
    std::size_t donor = words;
    const std::size_t left = w > 0 ? counts[w - 1] : 0;
    const std::size_t right = w + 1 < words ? counts[w + 1] : 0;
    if (std::max(left, right) >= 2) donor = left >= right ? w - 1 : w + 1;
    for (std::size_t d = 2; d < words && donor == words; ++d) {
      if (w >= d && counts[w - d] >= 2) donor = w - d;
      else if (w + d < words && counts[w + d] >= 2) donor = w + d;
    }
    if (donor == words) fail(ErrorKind::kAlignment, "not enough frames to give every word one");
    --counts[donor];
    ++counts[w];
  }
  std::vector<WordInterval> out;
  std::size_t start = 0;
  for (std::size_t w = 0; w < words; ++w) {
    out.push_back(WordInterval{w, start, start + counts[w]});
    start += counts[w];
  }
  return out;
}

std::vector<WordInterval> ingest_timestamps(const std::vector<TimedWord>& records, double hop_ms, std::size_t n_frames,
                                            std::size_t expected_words) {
  if (records.size() != expected_words) {
    fail(ErrorKind::kManifest, std::to_string(records.size()) + " timestamps for " + std::to_string(expected_words) +
                                   " transcript words");
  }
  if (!(hop_ms > 0.0)) fail(ErrorKind::kConfig, "hop must be positive");
  if (n_frames < records.size()) {
    fail(ErrorKind::kAlignment, std::to_string(n_frames) + " frames cannot hold " + std::to_string(records.size()) + " words");
  }
  constexpr double kSlack = 1e-9;
  double previous_end = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.start_seconds < 0.0 || r.end_seconds + kSlack < r.start_seconds || r.start_seconds + kSlack < previous_end) {
      fail(ErrorKind::kInput, "timestamps decrease at word " + std::to_string(i) + " ('" + r.word + "')");
    }
    previous_end = r.end_seconds;
  }
  auto to_frame = [&](double seconds) {
    const double f = std::floor(seconds * 1000.0 / hop_ms + 1e-9);
    return std::min<std::size_t>(n_frames, static_cast<std::size_t>(std::max(0.0, f)));
  };
  std::vector<WordInterval> out;
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    std::size_t s = std::max(to_frame(records[i].start_seconds), cursor);
    std::size_t e = std::max(to_frame(records[i].end_seconds), s + 1);
    out.push_back(WordInterval{i, s, e});
    cursor = e;
  }
  // Widening may run past the end; pull trailing words back inside.
  std::size_t limit = n_frames;
  for (std::size_t i = out.size(); i-- > 0;) {
    if (out[i].end_frame > limit) {
      out[i].end_frame = limit;
      out[i].start_frame = std::min(out[i].start_frame, limit - 1);
    }
    limit = out[i].start_frame;
  }
  validate_intervals(out, n_frames);
  return out;
}

void PrototypeTable::add(const std::string& token, const FrameMatrix& frames, const WordInterval& interval) {
  validate_intervals({interval}, frames.size());
  for (WordPrototype* p : {&words[token], &fallback}) {
    if (p->mean.empty()) p->mean.assign(frames[interval.start_frame].size(), 0.0);
    for (std::size_t f = interval.start_frame; f < interval.end_frame; ++f)
      for (std::size_t b = 0; b < p->mean.size(); ++b) p->mean[b] += frames[f][b];
    p->mean_frames += static_cast<double>(interval.length());
    ++p->count;
  }
}

void PrototypeTable::finalize() {
  auto finish = [](WordPrototype& p) {
    if (p.count == 0) return;
    const double frames = p.mean_frames;
    for (auto& v : p.mean) v /= frames;
    p.mean_frames /= static_cast<double>(p.count);
  };
  for (auto& [token, p] : words) finish(p);
  finish(fallback);
}

const WordPrototype& PrototypeTable::lookup(const std::string& token) const {
  auto it = words.find(token);
  if (it != words.end()) return it->second;
  if (fallback.count == 0) fail(ErrorKind::kAlignment, "prototype table is empty");
  return fallback;
}

ReferenceTemplate build_template(const std::vector<std::string>& tokens, const PrototypeTable& table,
                                 std::size_t target_frames) {
  if (tokens.empty()) fail(ErrorKind::kAlignment, "empty transcript");
  double total = 0.0;
  for (const auto& t : tokens) total += std::max(1.0, table.lookup(t).mean_frames);
  const double scale = target_frames > 0 ? static_cast<double>(target_frames) / total : 1.0;
  ReferenceTemplate tpl;
  double position = 0.0;
  for (const auto& t : tokens) {
    const WordPrototype& p = table.lookup(t);
    const std::size_t start = tpl.frames.size();
    position += std::max(1.0, p.mean_frames) * scale;
    const std::size_t end = std::max(start + 1, static_cast<std::size_t>(std::lround(position)));
    for (std::size_t f = start; f < end; ++f) tpl.frames.push_back(p.mean);
    tpl.word_ranges.emplace_back(start, end);
  }
  return tpl;
}

std::vector<WordInterval> align_utterance(const std::vector<std::string>& tokens, const FrameMatrix& frames,
                                          const PrototypeTable& table, double radius, Distance metric) {
  const ReferenceTemplate tpl = build_template(tokens, table, frames.size());
  const double r = radius > 0.0 ? radius : default_radius(tpl.frames.size(), frames.size());
  const DtwResult dtw = dtw_band(tpl.frames, frames, r, metric);
  return align_words(tpl.word_ranges, dtw, frames.size());
}

}  // namespace wordfuse
