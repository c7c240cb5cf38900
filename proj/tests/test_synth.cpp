#include <doctest.h>

#include <map>
#include <set>

#include "wordfuse/error.hpp"
#include "wordfuse/synth.hpp"

using namespace wordfuse;

TEST_SUITE("synth") {
  TEST_CASE("labels come from the keyword and tone together") {
    SynthConfig cfg;
    cfg.n_per_class = 8;
    const SynthCorpus c = synth_toy_corpus(cfg);
    CHECK(c.records.size() == 16);
    CHECK(c.audio.size() == 16);
    std::map<std::size_t, std::size_t> per_class;
    for (const auto& r : c.records) {
      ++per_class[r.label];
      std::size_t kw = 99;
      for (std::size_t k = 0; k < synth_keywords().size(); ++k)
        for (const auto& t : r.tokens)
          if (t == synth_keywords()[k]) kw = k;
      REQUIRE(kw < 99);
      const std::size_t tone = static_cast<std::size_t>(r.id.back() - '0');
      CHECK(r.label == (kw + tone) % 2);
      REQUIRE(r.intervals.has_value());
      CHECK(r.intervals->size() == r.tokens.size());
      CHECK(r.timestamps->size() == r.tokens.size());
    }
    CHECK(per_class[0] == 8);
    CHECK(per_class[1] == 8);
  }

  TEST_CASE("neither modality alone is linearly separable") {
    SynthConfig cfg;
    cfg.n_per_class = 8;
    const SynthCorpus c = synth_toy_corpus(cfg);
    CHECK(c.text_probe_accuracy == doctest::Approx(0.5));
    CHECK(c.audio_probe_accuracy == doctest::Approx(0.5));
  }

  TEST_CASE("generation is reproducible") {
    SynthConfig cfg;
    cfg.n_per_class = 4;
    cfg.verify = false;
    const auto a = synth_toy_corpus(cfg), b = synth_toy_corpus(cfg);
    CHECK(a.records == b.records);
    CHECK(a.audio[3].samples == b.audio[3].samples);
    cfg.seed = 1;
    CHECK(synth_toy_corpus(cfg).audio[0].samples != a.audio[0].samples);
  }

  TEST_CASE("more classes and bad configurations") {
    SynthConfig cfg;
    cfg.classes = 3;
    cfg.n_per_class = 3;
    cfg.verify = false;
    std::set<std::size_t> labels;
    for (const auto& r : synth_toy_corpus(cfg).records) labels.insert(r.label);
    CHECK(labels.size() == 3);
    cfg.classes = 1;
    CHECK_THROWS_AS(synth_toy_corpus(cfg), Error);
    cfg.classes = 7;
    CHECK_THROWS_AS(synth_toy_corpus(cfg), Error);
  }

  TEST_CASE("a linear probe separates separable data") {
    std::vector<std::vector<double>> x{{0, 1}, {1, 0}, {0, 2}, {2, 0}};
    CHECK(linear_probe_accuracy(x, {0, 1, 0, 1}, 2) == 1.0);
  }
}
