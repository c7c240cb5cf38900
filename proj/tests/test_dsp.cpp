#include <doctest.h>

#include <cmath>
#include <complex>

#include "wordfuse/dsp.hpp"
#include "wordfuse/error.hpp"
#include "wordfuse/rng.hpp"

using namespace wordfuse;

namespace {

std::vector<double> direct_power(const std::vector<double>& x, std::size_t n) {
  std::vector<double> out(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t)
      acc += x[t] * std::polar(1.0, -2.0 * M_PI * static_cast<double>(k * t % n) / static_cast<double>(n));
    out[k] = std::norm(acc);
  }
  return out;
}

AudioBuffer tone(double hz, double seconds, int rate = 16000) {
  AudioBuffer a;
  a.sample_rate = rate;
  a.samples.resize(static_cast<std::size_t>(seconds * rate));
  for (std::size_t i = 0; i < a.samples.size(); ++i) a.samples[i] = 0.5 * std::sin(2.0 * M_PI * hz * i / rate);
  return a;
}

}  // namespace

TEST_SUITE("dsp") {
  TEST_CASE("fft matches the direct transform") {
    Rng rng(7);
    for (std::size_t n : {1u, 2u, 8u, 64u, 512u}) {
      std::vector<double> x(n);
      for (auto& v : x) v = rng.uniform(-1.0, 1.0);
      const auto fast = power_spectrum(x, n);
      const auto slow = direct_power(x, n);
      for (std::size_t k = 0; k < fast.size(); ++k) CHECK(std::abs(fast[k] - slow[k]) < 1e-9);
    }
  }

  TEST_CASE("short frames are zero padded") {
    std::vector<double> x{1.0, -2.0, 0.5};
    const auto fast = power_spectrum(x, 16);
    const auto slow = direct_power(x, 16);
    for (std::size_t k = 0; k < fast.size(); ++k) CHECK(fast[k] == doctest::Approx(slow[k]).epsilon(1e-12));
    CHECK_THROWS_AS(power_spectrum(x, 12), Error);
    CHECK_THROWS_AS(power_spectrum(std::vector<double>(20), 16), Error);
  }

  TEST_CASE("framing counts and hamming window") {
    CHECK(ms_to_samples(25.0, 16000) == 400);
    CHECK(frame_count(16000, 400, 160) == 98);
    CHECK(frame_count(399, 400, 160) == 0);
    const auto w = hamming_window(5);
    CHECK(w[0] == doctest::Approx(0.08));
    CHECK(w[2] == doctest::Approx(1.0));
    CHECK(w[4] == doctest::Approx(0.08));
    const auto frames = frame_signal(tone(440, 1.0), 25.0, 10.0);
    CHECK(frames.size() == 98);
    CHECK(frames[0].size() == 400);
  }

  TEST_CASE("audio shorter than one window is rejected") {
    AudioBuffer a;
    a.samples.assign(100, 0.0);
    try {
      frame_signal(a, 25.0, 10.0);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kEmptySignal);
    }
    CHECK_THROWS_AS(frame_signal(tone(100, 1.0), 5.0, 10.0), Error);
  }

  TEST_CASE("mel scale") {
    CHECK(mel(0.0) == 0.0);
    CHECK(mel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)));
    CHECK(mel_inverse(mel(1234.5)) == doctest::Approx(1234.5));
    CHECK_THROWS_AS(mel(-1.0), Error);
  }

  TEST_CASE("filterbank rows are triangles with increasing centres") {
    const auto bank = build_filterbank(16000, 512, 0.0, 8000.0, 64);
    CHECK(bank.weights.size() == 64 * 257);
    for (std::size_t m = 0; m < bank.n_filters; ++m) {
      if (m > 0) CHECK(bank.centers_hz[m] > bank.centers_hz[m - 1]);
      std::size_t peak = 0;
      double best = -1.0;
      for (std::size_t b = 0; b < bank.bins(); ++b) {
        const double w = bank.weight(m, b);
        CHECK(w >= 0.0);
        CHECK(w <= 1.0);
        if (w > best) best = w, peak = b;
      }
      CHECK(best > 0.0);
      // Non-decreasing up to the peak, non-increasing after, zero outside.
      for (std::size_t b = 1; b <= peak; ++b) CHECK(bank.weight(m, b) >= bank.weight(m, b - 1));
      for (std::size_t b = peak + 1; b < bank.bins(); ++b) CHECK(bank.weight(m, b) <= bank.weight(m, b - 1));
      const double bin_hz = 16000.0 / 512.0;
      for (std::size_t b = 0; b < bank.bins(); ++b) {
        if (bank.weight(m, b) > 0.0) {
          const double lo = m == 0 ? 0.0 : bank.centers_hz[m - 1];
          const double hi = m + 1 < 64 ? bank.centers_hz[m + 1] : 8000.0;
          CHECK(b * bin_hz > lo - 1e-9);
          CHECK(b * bin_hz < hi + 1e-9);
        }
      }
    }
  }

  TEST_CASE("filterbank configuration errors") {
    CHECK_THROWS_AS(build_filterbank(16000, 500, 0.0, 8000.0), Error);
    CHECK_THROWS_AS(build_filterbank(16000, 512, 0.0, 9000.0), Error);
    CHECK_THROWS_AS(build_filterbank(16000, 64, 0.0, 8000.0, 64), Error);
    CHECK_THROWS_AS(build_filterbank(0, 512, 0.0, 8000.0), Error);
  }

  TEST_CASE("a pure tone peaks in the band containing it") {
    MfscConfig cfg;
    const auto bank = build_filterbank(16000, cfg);
    const auto mfsc = extract_mfsc(tone(2000.0, 0.5), bank, cfg);
    REQUIRE(mfsc.size() == 48);
    const auto& frame = mfsc[10];
    const std::size_t best = static_cast<std::size_t>(std::max_element(frame.begin(), frame.end()) - frame.begin());
    CHECK(std::abs(bank.centers_hz[best] - 2000.0) < 200.0);
  }

  TEST_CASE("silence hits the log floor") {
    AudioBuffer a;
    a.samples.assign(1600, 0.0);
    const auto mfsc = extract_mfsc(a, build_filterbank(16000, MfscConfig{}));
    for (const auto& f : mfsc)
      for (double v : f) CHECK(v == doctest::Approx(std::log(1e-10)));
  }

  TEST_CASE("preemphasis boosts high bands relative to low") {
    MfscConfig plain, emph;
    emph.preemphasis = true;
    const auto bank = build_filterbank(16000, plain);
    AudioBuffer a = tone(200.0, 0.3);
    const auto b = tone(6000.0, 0.3);
    for (std::size_t i = 0; i < a.samples.size(); ++i) a.samples[i] += b.samples[i];
    const auto x = extract_mfsc(a, bank, plain)[5];
    const auto y = extract_mfsc(a, bank, emph)[5];
    CHECK((y[60] - y[5]) > (x[60] - x[5]));
  }

  TEST_CASE("word map pads with zeros and truncates long words") {
    FrameMatrix frames(10, std::vector<double>(2));
    for (std::size_t f = 0; f < 10; ++f) frames[f] = {1.0 + f, -1.0 - f};
    const std::vector<WordInterval> iv{{0, 0, 2}, {1, 2, 9}};
    const MfscMap map = word_mfsc_map(frames, iv, 5);
    CHECK(map.words == 2);
    CHECK(map.bands == 2);
    CHECK(map.frames == 5);
    CHECK(map.valid_frames == std::vector<std::size_t>{2, 5});
    CHECK(map.at(0, 0, 1) == 2.0);
    CHECK(map.at(0, 1, 2) == 0.0);
    CHECK(map.at(1, 1, 4) == -7.0);
    CHECK_THROWS_AS(word_mfsc_map(frames, {{0, 3, 2}}, 5), Error);
    CHECK_THROWS_AS(word_mfsc_map(frames, {{0, 0, 11}}, 5), Error);
    CHECK_THROWS_AS(word_mfsc_map(frames, {{0, 0, 4}, {1, 3, 6}}, 5), Error);
    const std::vector<std::vector<WordInterval>> all{iv, {{0, 0, 3}}};
    CHECK(padded_length(all, 100) == 7);
    CHECK(padded_length(all, 4) == 4);
  }
}
