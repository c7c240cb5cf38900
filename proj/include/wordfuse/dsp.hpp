#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "wordfuse/interval.hpp"

namespace wordfuse {

struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate = 16000;

  double duration_seconds() const { return static_cast<double>(samples.size()) / sample_rate; }
};

// Front-end settings. Defaults are standard speech values.
struct MfscConfig {
  double window_ms = 25.0;
  double hop_ms = 10.0;
  std::size_t fft_size = 512;
  std::size_t n_filters = 64;
  double f_min = 0.0;
  double f_max = 0.0;  // 0 selects Nyquist
  bool preemphasis = false;
  double preemphasis_coefficient = 0.97;
  double log_floor = 1e-10;
};

using FrameMatrix = std::vector<std::vector<double>>;

std::size_t ms_to_samples(double ms, int sample_rate);
std::size_t frame_count(std::size_t n_samples, std::size_t window, std::size_t hop);

std::vector<double> hamming_window(std::size_t length);

// Hamming-windowed frames; throws an empty-signal error when the audio is
// shorter than one window.
FrameMatrix frame_signal(const AudioBuffer& audio, double window_ms, double hop_ms);

bool is_power_of_two(std::size_t n);
// In-place iterative radix-2 transform; size must be a power of two.
void fft(std::vector<std::complex<double>>& data);
// |DFT|² bins 0..fft_size/2 of the frame zero-padded to fft_size.
std::vector<double> power_spectrum(std::span<const double> frame, std::size_t fft_size);

double mel(double hz);
double mel_inverse(double mel_value);

struct MelFilterBank {
  std::size_t n_filters = 0;
  int sample_rate = 0;
  std::size_t fft_size = 0;
  std::vector<double> centers_hz;
  std::vector<double> weights;  // n_filters × bins, row-major

  std::size_t bins() const { return fft_size / 2 + 1; }
  double weight(std::size_t filter, std::size_t bin) const { return weights[filter * bins() + bin]; }
};

MelFilterBank build_filterbank(int sample_rate, std::size_t fft_size, double f_min, double f_max,
                               std::size_t n_filters = 64);
MelFilterBank build_filterbank(int sample_rate, const MfscConfig& config);

// log(bank · |FFT|² + floor) per frame; no DCT.
FrameMatrix extract_mfsc(const AudioBuffer& audio, const MelFilterBank& bank, const MfscConfig& config = {});

// Per-word log-mel blocks zero-padded to a common length.
struct MfscMap {
  std::size_t words = 0;
  std::size_t bands = 0;
  std::size_t frames = 0;  // L
  std::vector<double> values;  // [words, bands, frames]
  std::vector<std::size_t> valid_frames;

  double at(std::size_t word, std::size_t band, std::size_t frame) const {
    return values[(word * bands + band) * frames + frame];
  }
  double& at(std::size_t word, std::size_t band, std::size_t frame) {
    return values[(word * bands + band) * frames + frame];
  }
};

// Word i occupies frame columns 0..n_i−1; words longer than max_frames are
// truncated at the end.
MfscMap word_mfsc_map(const FrameMatrix& frames, const std::vector<WordInterval>& intervals, std::size_t max_frames);

// min(longest interval, cap)
std::size_t padded_length(std::span<const std::vector<WordInterval>> utterances, std::size_t cap);

}  // namespace wordfuse
