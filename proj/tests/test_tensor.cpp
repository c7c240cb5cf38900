#include <doctest.h>

#include "wordfuse/error.hpp"
#include "wordfuse/parameter.hpp"
#include "wordfuse/rng.hpp"
#include "wordfuse/tensor.hpp"

using namespace wordfuse;

TEST_SUITE("tensor") {
  TEST_CASE("shape bookkeeping") {
    Tensor m = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
    CHECK(m.rank() == 2);
    CHECK(m.rows() == 2);
    CHECK(m.cols() == 3);
    CHECK(m.at(1, 2) == 6);
    CHECK(shape_string(m.shape()) == "[2×3]");
    CHECK(Tensor::scalar(4).shape() == Shape{1});
    CHECK(shape_size({2, 3, 4}) == 24);
  }

  TEST_CASE("data size must match the shape") {
    CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), Error);
  }

  TEST_CASE("finite check") {
    Tensor t = Tensor::vector({1.0, 2.0});
    CHECK(t.all_finite());
    t[1] = std::numeric_limits<double>::quiet_NaN();
    CHECK_FALSE(t.all_finite());
  }

  TEST_CASE("parameter set keeps names unique and addresses stable") {
    ParameterSet set;
    Parameter& a = set.add("a", Tensor({2}));
    for (int i = 0; i < 100; ++i) set.add("p" + std::to_string(i), Tensor({1}));
    CHECK(&set.get("a") == &a);
    CHECK_THROWS_AS(set.add("a", Tensor({1})), Error);
    CHECK_THROWS_AS(set.get("missing"), Error);
    CHECK(set.with_prefix("p1").size() == 11);
    CHECK(set.scalar_count() == 102);
  }

  TEST_CASE("uniform init respects its bound") {
    ParameterSet set;
    Rng rng(3);
    Parameter& w = add_matrix(set, "w", 20, 25, rng);
    for (double v : w.value.storage()) CHECK(std::abs(v) <= 0.2);
    CHECK(add_zeros(set, "b", {4}).value.storage() == std::vector<double>(4, 0.0));
  }

  TEST_CASE("rng streams are reproducible and uniform draws stay in range") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
    Rng r(1);
    for (int i = 0; i < 1000; ++i) {
      const double u = r.uniform();
      CHECK(u >= 0.0);
      CHECK(u < 1.0);
      CHECK(r.below(7) < 7);
    }
    CHECK(mix_seed(1, 2) != mix_seed(2, 1));
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  }
}
