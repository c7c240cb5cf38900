#include <doctest.h>

#include "wordfuse/error.hpp"
#include "wordfuse/metrics.hpp"
#include "wordfuse/rng.hpp"

using namespace wordfuse;

TEST_SUITE("metrics") {
  TEST_CASE("worked confusion example") {
    const Metrics m = Metrics::from_confusion({{8, 2}, {4, 6}});
    CHECK(m.total == 20);
    CHECK(m.wa == doctest::Approx(0.7));
    CHECK(m.ua == doctest::Approx(0.7));
    // F1: class 0 = 2·(8/12)·0.8/(8/12+0.8) = 8/11, class 1 = 2·0.75·0.6/1.35 = 2/3.
    CHECK(m.weighted_f1 == doctest::Approx(0.5 * (8.0 / 11.0) + 0.5 * (2.0 / 3.0)));
    CHECK(m.weighted_f1 == doctest::Approx(0.697).epsilon(5e-4));
  }

  TEST_CASE("perfect and degenerate predictions") {
    const Metrics p = compute_metrics({0, 1, 2, 1}, {0, 1, 2, 1}, 3);
    CHECK(p.wa == 1.0);
    CHECK(p.ua == 1.0);
    CHECK(p.weighted_f1 == 1.0);
    const Metrics all_zero = compute_metrics({0, 0, 1, 1}, {0, 0, 0, 0}, 2);
    CHECK(all_zero.wa == 0.5);
    CHECK(all_zero.ua == 0.5);
    CHECK(all_zero.weighted_f1 == doctest::Approx(0.5 * (2.0 / 3.0)));
  }

  TEST_CASE("classes without support do not count toward UA") {
    const Metrics m = compute_metrics({0, 0, 1}, {0, 2, 1}, 3);
    CHECK(m.ua == doctest::Approx(0.75));
  }

  TEST_CASE("length and label errors") {
    CHECK_THROWS_AS(compute_metrics({0, 1}, {0}, 2), Error);
    CHECK_THROWS_AS(compute_metrics({0, 5}, {0, 1}, 2), Error);
  }

  TEST_CASE("summary uses the population deviation") {
    const auto s = summarize({1.0, 3.0});
    CHECK(s.mean == 2.0);
    CHECK(s.stddev == 1.0);
  }

  TEST_CASE("json report") {
    const auto j = Metrics::from_confusion({{1, 0}, {0, 1}}).to_json();
    CHECK(j.at("wa") == 1.0);
    CHECK(j.at("confusion").size() == 2);
  }
}
