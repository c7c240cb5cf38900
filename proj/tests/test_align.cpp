#include <doctest.h>

#include <cmath>
#include <functional>

#include "wordfuse/align.hpp"
#include "wordfuse/error.hpp"
#include "wordfuse/rng.hpp"

using namespace wordfuse;

namespace {

FrameMatrix seq(const std::vector<double>& v) {
  FrameMatrix m;
  for (double x : v) m.push_back({x});
  return m;
}

double brute_force(const FrameMatrix& a, const FrameMatrix& b) {
  double best = INFINITY;
  std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t i, std::size_t j, double acc) {
    acc += std::abs(a[i][0] - b[j][0]);
    if (i + 1 == a.size() && j + 1 == b.size()) {
      best = std::min(best, acc);
      return;
    }
    if (i + 1 < a.size()) walk(i + 1, j, acc);
    if (j + 1 < b.size()) walk(i, j + 1, acc);
    if (i + 1 < a.size() && j + 1 < b.size()) walk(i + 1, j + 1, acc);
  };
  walk(0, 0, 0.0);
  return best;
}

void check_path(const DtwResult& r, std::size_t m, std::size_t n) {
  REQUIRE_FALSE(r.path.empty());
  CHECK(r.path.front() == std::make_pair<std::size_t, std::size_t>(0, 0));
  CHECK(r.path.back() == std::make_pair(m - 1, n - 1));
  for (std::size_t k = 1; k < r.path.size(); ++k) {
    const auto di = r.path[k].first - r.path[k - 1].first;
    const auto dj = r.path[k].second - r.path[k - 1].second;
    CHECK(di <= 1);
    CHECK(dj <= 1);
    CHECK(di + dj >= 1);
  }
}

}  // namespace

TEST_SUITE("align") {
  TEST_CASE("unbanded dtw matches path enumeration") {
    Rng rng(11);
    for (int trial = 0; trial < 300; ++trial) {
      std::vector<double> x(1 + rng.below(5)), y(1 + rng.below(5));
      for (auto& v : x) v = static_cast<double>(rng.below(3));
      for (auto& v : y) v = static_cast<double>(rng.below(3));
      const auto r = dtw_band(seq(x), seq(y), kUnboundedRadius, Distance::kManhattan);
      CHECK(r.cost == brute_force(seq(x), seq(y)));
      check_path(r, x.size(), y.size());
      double along = 0.0;
      for (auto [i, j] : r.path) along += std::abs(x[i] - y[j]);
      CHECK(along == r.cost);
    }
  }

  TEST_CASE("identical sequences cost nothing and walk the diagonal") {
    const auto a = seq({0, 1, 2, 1, 0});
    const auto r = dtw_band(a, a, 1.0);
    CHECK(r.cost == 0.0);
    CHECK(r.path.size() == 5);
  }

  TEST_CASE("band membership is slope normalized") {
    CHECK(in_band(2, 4, 4, 8, 0.0));
    CHECK_FALSE(in_band(2, 5, 4, 8, 0.5));
    CHECK(in_band(2, 5, 4, 8, 1.0));
    CHECK(default_radius(5, 30) == 3.0);
    CHECK(default_radius(3, 4) == 1.0);
  }

  TEST_CASE("cells outside the band are never on the path") {
    Rng rng(2);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> x(3 + rng.below(10)), y(3 + rng.below(10));
      for (auto& v : x) v = rng.uniform();
      for (auto& v : y) v = rng.uniform();
      const double r = 1.0 + rng.below(3);
      try {
        const auto res = dtw_band(seq(x), seq(y), r);
        for (auto [i, j] : res.path) CHECK(in_band(i, j, x.size(), y.size(), r));
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::kAlignment);
      }
    }
  }

  TEST_CASE("dtw rejects empty input and negative radius") {
    CHECK_THROWS_AS(dtw_band({}, seq({1}), 1.0), Error);
    CHECK_THROWS_AS(dtw_band(seq({1}), seq({1}), -1.0), Error);
    CHECK(parse_distance("manhattan") == Distance::kManhattan);
    CHECK_THROWS_AS(parse_distance("cosine"), Error);
  }

  TEST_CASE("distance metrics") {
    const std::vector<double> a{0, 0}, b{3, 4};
    CHECK(frame_distance(a, b, Distance::kEuclidean) == 5.0);
    CHECK(frame_distance(a, b, Distance::kSquaredEuclidean) == 25.0);
    CHECK(frame_distance(a, b, Distance::kManhattan) == 7.0);
  }

  TEST_CASE("word projection on a hand-traced 4 x 6 path") {
    DtwResult r;
    r.path = {{0, 0}, {0, 1}, {1, 2}, {2, 3}, {3, 4}, {3, 5}};
    const auto iv = align_words({{0, 2}, {2, 4}}, r, 6);
    CHECK(iv == std::vector<WordInterval>{{0, 0, 3}, {1, 3, 6}});
  }

  TEST_CASE("an empty word borrows a frame from its longer neighbour") {
    DtwResult r;
    r.path = {{0, 0}, {1, 0}, {2, 1}, {3, 2}, {3, 3}, {3, 4}, {3, 5}};
    const auto iv = align_words({{0, 1}, {1, 2}, {2, 4}}, r, 6);
    CHECK(iv == std::vector<WordInterval>{{0, 0, 1}, {1, 1, 2}, {2, 2, 6}});
  }

  TEST_CASE("word projection errors") {
    DtwResult r;
    r.path = {{0, 0}, {1, 1}};
    CHECK_THROWS_AS(align_words({{0, 1}, {1, 2}, {2, 3}}, r, 2), Error);
    CHECK_THROWS_AS(align_words({{0, 1}, {2, 3}}, r, 2), Error);
    CHECK_THROWS_AS(align_words({}, r, 2), Error);
    r.path = {{0, 0}, {1, 2}};
    CHECK_THROWS_AS(align_words({{0, 1}, {1, 2}}, r, 3), Error);
  }

  TEST_CASE("timestamps become frame intervals") {
    std::vector<TimedWord> ts{{"a", 0.0, 0.13}, {"b", 0.13, 0.2}, {"c", 0.2, 0.31}};
    const auto iv = ingest_timestamps(ts, 10.0, 40, 3);
    CHECK(iv == std::vector<WordInterval>{{0, 0, 13}, {1, 13, 20}, {2, 20, 31}});
    CHECK_THROWS_AS(ingest_timestamps(ts, 10.0, 40, 2), Error);
    ts[1].start_seconds = 0.05;
    CHECK_THROWS_AS(ingest_timestamps(ts, 10.0, 40, 3), Error);
  }

  TEST_CASE("zero-length and overhanging timestamps are widened and clipped") {
    std::vector<TimedWord> ts{{"a", 0.0, 0.0}, {"b", 0.0, 0.05}, {"c", 0.05, 0.5}};
    const auto iv = ingest_timestamps(ts, 10.0, 8, 3);
    CHECK(iv.front().start_frame == 0);
    CHECK(iv.back().end_frame == 8);
    validate_intervals(iv, 8);
  }

  TEST_CASE("prototype alignment recovers boundaries of clean sequences") {
    // Word "lo" is 4 frames at 0, "hi" is 6 frames at 1.
    PrototypeTable table;
    FrameMatrix ref;
    for (int i = 0; i < 4; ++i) ref.push_back({0.0, 0.0});
    for (int i = 0; i < 6; ++i) ref.push_back({1.0, 1.0});
    table.add("lo", ref, {0, 0, 4});
    table.add("hi", ref, {1, 4, 10});
    table.finalize();
    CHECK(table.lookup("lo").mean_frames == 4.0);
    CHECK(table.lookup("zzz").count == 2);
    FrameMatrix target;
    for (int i = 0; i < 7; ++i) target.push_back({1.0, 1.0});
    for (int i = 0; i < 3; ++i) target.push_back({0.0, 0.0});
    for (int i = 0; i < 5; ++i) target.push_back({1.0, 1.0});
    const auto iv = align_utterance({"hi", "lo", "hi"}, target, table);
    CHECK(iv == std::vector<WordInterval>{{0, 0, 7}, {1, 7, 10}, {2, 10, 15}});
  }

  TEST_CASE("an empty prototype table cannot align") {
    PrototypeTable table;
    table.finalize();
    CHECK_THROWS_AS(align_utterance({"a"}, FrameMatrix(3, {0.0}), table), Error);
  }
}
