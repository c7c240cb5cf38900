#include "wordfuse/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wordfuse/error.hpp"

namespace wordfuse {

void validate_intervals(const std::vector<WordInterval>& intervals, std::size_t n_frames) {
  std::size_t previous_end = 0;
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    const auto& iv = intervals[i];
    const std::string where = "word " + std::to_string(i) + " [" + std::to_string(iv.start_frame) + ", " +
                              std::to_string(iv.end_frame) + ")";
    if (iv.start_frame >= iv.end_frame) fail(ErrorKind::kAlignment, where + " is empty");
    if (iv.end_frame > n_frames) {
      fail(ErrorKind::kAlignment, where + " exceeds the " + std::to_string(n_frames) + " available frames");
    }
    if (iv.start_frame < previous_end) fail(ErrorKind::kAlignment, where + " overlaps its predecessor");
    previous_end = iv.end_frame;
  }
}

std::size_t ms_to_samples(double ms, int sample_rate) {
  return static_cast<std::size_t>(std::lround(ms * sample_rate / 1000.0));
}

std::size_t frame_count(std::size_t n_samples, std::size_t window, std::size_t hop) {
  if (n_samples < window) return 0;
  return 1 + (n_samples - window) / hop;
}

std::vector<double> hamming_window(std::size_t length) {
  std::vector<double> w(length, 1.0);
  if (length == 1) return w;
  for (std::size_t i = 0; i < length; ++i)
    w[i] = 0.54 - 0.46 * std::cos(2.0 * M_PI * static_cast<double>(i) / static_cast<double>(length - 1));
  return w;
}

FrameMatrix frame_signal(const AudioBuffer& audio, double window_ms, double hop_ms) {
  if (audio.sample_rate <= 0) fail(ErrorKind::kConfig, "sample rate must be positive");
  if (!(hop_ms > 0.0) || window_ms < hop_ms) {
    fail(ErrorKind::kConfig, "need window ≥ hop > 0, got window " + std::to_string(window_ms) + " ms, hop " +
                                 std::to_string(hop_ms) + " ms");
  }
  const std::size_t win = ms_to_samples(window_ms, audio.sample_rate);
  const std::size_t hop = std::max<std::size_t>(1, ms_to_samples(hop_ms, audio.sample_rate));
  const std::size_t n = frame_count(audio.samples.size(), win, hop);
  if (n == 0 || win == 0) {
    fail(ErrorKind::kEmptySignal, std::to_string(audio.samples.size()) + " samples is shorter than one " +
                                      std::to_string(win) + "-sample window");
  }
  const auto window = hamming_window(win);
  FrameMatrix frames(n, std::vector<double>(win));
  for (std::size_t f = 0; f < n; ++f) {
    const double* src = audio.samples.data() + f * hop;
    for (std::size_t i = 0; i < win; ++i) frames[f][i] = src[i] * window[i];
  }
  return frames;
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  if (!is_power_of_two(n)) fail(ErrorKind::kConfig, "FFT size " + std::to_string(n) + " is not a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * M_PI / static_cast<double>(len);
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        // Twiddles evaluated directly; the accumulated-product form loses
        // ~1e-13 over 512 points.
        const std::complex<double> w(std::cos(angle * k), std::sin(angle * k));
        const auto u = a[i + k];
        const auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
    }
  }
}

std::vector<double> power_spectrum(std::span<const double> frame, std::size_t fft_size) {
  if (!is_power_of_two(fft_size)) {
    fail(ErrorKind::kConfig, "FFT size " + std::to_string(fft_size) + " is not a power of two");
  }
  if (frame.size() > fft_size) {
    fail(ErrorKind::kConfig, "frame of " + std::to_string(frame.size()) + " samples exceeds FFT size " +
                                 std::to_string(fft_size));
  }
  std::vector<std::complex<double>> buf(fft_size);
  for (std::size_t i = 0; i < frame.size(); ++i) buf[i] = frame[i];
  fft(buf);
  std::vector<double> power(fft_size / 2 + 1);
  for (std::size_t k = 0; k < power.size(); ++k) power[k] = std::norm(buf[k]);
  return power;
}

double mel(double hz) {
  if (hz < 0.0) fail(ErrorKind::kInput, "negative frequency " + std::to_string(hz));
  return 2595.0 * std::log10(1.0 + hz / 700.0);
}

double mel_inverse(double mel_value) { return 700.0 * (std::pow(10.0, mel_value / 2595.0) - 1.0); }

MelFilterBank build_filterbank(int sample_rate, std::size_t fft_size, double f_min, double f_max,
                               std::size_t n_filters) {
  if (sample_rate <= 0) fail(ErrorKind::kConfig, "sample rate must be positive");
  if (!is_power_of_two(fft_size)) {
    fail(ErrorKind::kConfig, "FFT size " + std::to_string(fft_size) + " is not a power of two");
  }
  const double nyquist = sample_rate / 2.0;
  if (!(f_min >= 0.0 && f_min < f_max && f_max <= nyquist)) {
    fail(ErrorKind::kConfig, "need 0 ≤ f_min < f_max ≤ " + std::to_string(nyquist) + " Hz");
  }
  MelFilterBank bank;
  bank.n_filters = n_filters;
  bank.sample_rate = sample_rate;
  bank.fft_size = fft_size;
  const std::size_t bins = bank.bins();
  const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(fft_size);
  std::size_t in_band = 0;
  for (std::size_t b = 0; b < bins; ++b) {
    const double f = b * bin_hz;
    if (f >= f_min && f <= f_max) ++in_band;
  }
  if (in_band < n_filters) {
    fail(ErrorKind::kConfig, std::to_string(in_band) + " FFT bins in band cannot support " +
                                 std::to_string(n_filters) + " filters");
  }
  const double m_lo = mel(f_min), m_hi = mel(f_max);
  std::vector<double> edges(n_filters + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_inverse(m_lo + (m_hi - m_lo) * static_cast<double>(i) / static_cast<double>(n_filters + 1));
  bank.weights.assign(n_filters * bins, 0.0);
  for (std::size_t m = 0; m < n_filters; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    bank.centers_hz.push_back(mid);
    bool any = false;
    for (std::size_t b = 0; b < bins; ++b) {
      const double f = b * bin_hz;
      double w = 0.0;
      if (f > lo && f <= mid) w = (f - lo) / (mid - lo);
      else if (f > mid && f < hi) w = (hi - f) / (hi - mid);
      bank.weights[m * bins + b] = w;
      any = any || w > 0.0;
    }
    if (!any) {
      fail(ErrorKind::kConfig, "mel filter " + std::to_string(m) + " covers no FFT bin; increase the FFT size");
    }
  }
  return bank;
}

MelFilterBank build_filterbank(int sample_rate, const MfscConfig& config) {
  const double f_max = config.f_max > 0.0 ? config.f_max : sample_rate / 2.0;
  return build_filterbank(sample_rate, config.fft_size, config.f_min, f_max, config.n_filters);
}

FrameMatrix extract_mfsc(const AudioBuffer& audio, const MelFilterBank& bank, const MfscConfig& config) {
  if (audio.sample_rate != bank.sample_rate) {
    fail(ErrorKind::kConfig, "filterbank built for " + std::to_string(bank.sample_rate) + " Hz, audio is " +
                                 std::to_string(audio.sample_rate) + " Hz");
  }
  const AudioBuffer* source = &audio;
  AudioBuffer emphasized;
  if (config.preemphasis && !audio.samples.empty()) {
    emphasized.sample_rate = audio.sample_rate;
    emphasized.samples.resize(audio.samples.size());
    emphasized.samples[0] = audio.samples[0];
    for (std::size_t i = 1; i < audio.samples.size(); ++i)
      emphasized.samples[i] = audio.samples[i] - config.preemphasis_coefficient * audio.samples[i - 1];
    source = &emphasized;
  }
  const FrameMatrix frames = frame_signal(*source, config.window_ms, config.hop_ms);
  const std::size_t bins = bank.bins();
  FrameMatrix out(frames.size(), std::vector<double>(bank.n_filters));
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const auto power = power_spectrum(frames[f], bank.fft_size);
    for (std::size_t m = 0; m < bank.n_filters; ++m) {
      double e = 0.0;
      const double* w = bank.weights.data() + m * bins;
      for (std::size_t b = 0; b < bins; ++b) e += w[b] * power[b];
      out[f][m] = std::log(e + config.log_floor);
    }
  }
  return out;
}

MfscMap word_mfsc_map(const FrameMatrix& frames, const std::vector<WordInterval>& intervals, std::size_t max_frames) {
  if (intervals.empty()) fail(ErrorKind::kAlignment, "utterance has no word intervals");
  if (max_frames == 0) fail(ErrorKind::kConfig, "padded word length must be positive");
  validate_intervals(intervals, frames.size());
  MfscMap map;
  map.words = intervals.size();
  map.bands = frames.empty() ? 0 : frames[0].size();
  map.frames = max_frames;
  map.values.assign(map.words * map.bands * map.frames, 0.0);
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    const std::size_t n = std::min(intervals[i].length(), max_frames);
    map.valid_frames.push_back(n);
    for (std::size_t j = 0; j < n; ++j) {
      const auto& column = frames[intervals[i].start_frame + j];
      for (std::size_t b = 0; b < map.bands; ++b) map.at(i, b, j) = column[b];
    }
  }
  return map;
}

std::size_t padded_length(std::span<const std::vector<WordInterval>> utterances, std::size_t cap) {
  std::size_t longest = 0;
  for (const auto& u : utterances)
    for (const auto& iv : u) longest = std::max(longest, iv.length());
  return std::min(longest, cap);
}

}  // namespace wordfuse
