#include <doctest.h>

#include <filesystem>

#include "wordfuse/error.hpp"
#include "wordfuse/feature_cache.hpp"
#include "wordfuse/io.hpp"
#include "wordfuse/synth.hpp"

using namespace wordfuse;

namespace {

struct Corpus {
  std::filesystem::path dir;
  Manifest manifest;
  Corpus() {
    dir = std::filesystem::temp_directory_path() / "wordfuse_cache_test";
    std::filesystem::remove_all(dir);
    SynthConfig cfg;
    cfg.n_per_class = 2;
    cfg.verify = false;
    write_synth_corpus(dir, synth_toy_corpus(cfg));
    manifest = load_manifest(dir / "manifest.jsonl");
  }
  ~Corpus() { std::filesystem::remove_all(dir); }
};

FeatureConfig small_config() {
  FeatureConfig c;
  c.embedding_dim = 8;
  return c;
}

}  // namespace

TEST_SUITE("cache") {
  TEST_CASE("extraction produces per-word maps with 64 bands") {
    Corpus corpus;
    FeatureCache cache;
    const auto report = extract_features(corpus.manifest, small_config(), cache);
    CHECK(report.computed == corpus.manifest.records.size());
    CHECK(report.failures.empty());
    for (const auto& r : corpus.manifest.records) {
      const CacheEntry& e = cache.get(r.id);
      CHECK(e.mfsc.words == r.tokens.size());
      CHECK(e.mfsc.bands == 64);
      CHECK(e.embedded.shape() == Shape{r.tokens.size(), 8});
      for (std::size_t w = 0; w < e.mfsc.words; ++w) {
        CHECK(e.mfsc.valid_frames[w] == (*r.intervals)[w].length());
        for (std::size_t b = 0; b < 64; ++b)
          for (std::size_t j = e.mfsc.valid_frames[w]; j < e.mfsc.frames; ++j) CHECK(e.mfsc.at(w, b, j) == 0.0);
      }
    }
  }

  TEST_CASE("save, load and incremental reuse") {
    Corpus corpus;
    const auto path = corpus.dir / "features.wfc";
    FeatureCache cache = FeatureCache::load(path);
    CHECK(cache.size() == 0);
    extract_features(corpus.manifest, small_config(), cache);
    cache.save(path);
    FeatureCache back = FeatureCache::load(path);
    CHECK(back.ids() == cache.ids());
    const std::string id = cache.ids().front();
    CHECK(back.get(id).mfsc.values == cache.get(id).mfsc.values);
    CHECK(back.get(id).embedded.storage() == cache.get(id).embedded.storage());
    CHECK(back.get(id).hash == cache.get(id).hash);
    CHECK(back.get(id).intervals == cache.get(id).intervals);

    const auto again = extract_features(corpus.manifest, small_config(), back);
    CHECK(again.computed == 0);
    CHECK(again.reused == corpus.manifest.records.size());

    FeatureConfig changed = small_config();
    changed.mfsc.n_filters = 40;
    const auto redo = extract_features(corpus.manifest, changed, back);
    CHECK(redo.computed == corpus.manifest.records.size());
  }

  TEST_CASE("a damaged cache file is rejected") {
    Corpus corpus;
    const auto path = corpus.dir / "features.wfc";
    FeatureCache cache;
    extract_features(corpus.manifest, small_config(), cache);
    cache.save(path);
    std::string bytes = read_file(path);
    bytes[bytes.size() / 3] ^= 0x01;
    write_file_atomic(path, bytes);
    try {
      FeatureCache::load(path);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kFormat);
    }
    write_file_atomic(path, "garbage");
    CHECK_THROWS_AS(FeatureCache::load(path), Error);
  }

  TEST_CASE("records without intervals or timestamps fail individually") {
    Corpus corpus;
    Manifest m = corpus.manifest;
    m.records[0].intervals.reset();
    m.records[0].timestamps.reset();
    m.records[1].intervals.reset();
    FeatureCache cache;
    const auto report = extract_features(m, small_config(), cache);
    CHECK(report.failures.size() == 1);
    CHECK(report.failures[0].find("align") != std::string::npos);
    CHECK(report.computed == m.records.size() - 1);
    CHECK_THROWS_AS(cache.get(m.records[0].id), Error);
  }

  TEST_CASE("inputs share one padded length and vocabulary") {
    Corpus corpus;
    FeatureCache cache;
    extract_features(corpus.manifest, small_config(), cache);
    const auto ids = cache.ids();
    const EmbeddingTable table = table_from_cache(cache, ids, 0);
    const std::size_t L = dataset_padded_length(cache, ids);
    const auto inputs = make_inputs(cache, ids, table.vocabulary, L);
    for (const auto& in : inputs) {
      CHECK(in.mfsc.frames == L);
      for (auto t : in.token_ids) CHECK(t != 0);
    }
    const CacheEntry& e = cache.get(ids[0]);
    const std::size_t row = table.vocabulary.id(e.tokens[0]);
    CHECK(table.matrix.at(row, 3) == e.embedded.at(0, 3));
    const MfscMap cut = pad_map(e.mfsc, 2);
    CHECK(cut.frames == 2);
    for (auto n : cut.valid_frames) CHECK(n <= 2);
  }

  TEST_CASE("timestamps stand in for intervals") {
    UtteranceRecord r;
    r.tokens = {"a", "b"};
    r.timestamps = std::vector<TimedWord>{{"a", 0.0, 0.05}, {"b", 0.05, 0.12}};
    const auto iv = record_intervals(r, 20, 10.0);
    CHECK(iv == std::vector<WordInterval>{{0, 0, 5}, {1, 5, 12}});
  }
}
