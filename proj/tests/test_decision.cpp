#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "wordfuse/decision.hpp"
#include "wordfuse/error.hpp"
#include "wordfuse/gradcheck.hpp"

using namespace wordfuse;
using wordfuse::testing::random_tensor;

TEST_SUITE("decision") {
  TEST_CASE("convolution over words matches the window formula") {
    ParameterSet set;
    Rng rng(1);
    const DecisionParams p = make_decision(set, "d", {2}, 3, 2, 2, false, rng);
    for (auto& v : p.banks[0].b->value.storage()) v = rng.uniform(-1, 1);
    const Tensor V = random_tensor({4, 2}, rng);
    Tape t;
    const auto f = conv_over_words(t, p.banks[0], t.constant(V)).value();
    CHECK(f.shape() == Shape{3, 3});
    const auto& W = p.banks[0].w->value;
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t k = 0; k < 3; ++k) {
        double s = p.banks[0].b->value[k];
        for (std::size_t c = 0; c < 4; ++c) s += W.at(k, c) * V.at(i + c / 2, c % 2);
        CHECK(f.at(i, k) == doctest::Approx(std::tanh(s)).epsilon(1e-12));
      }
    CHECK(set.contains("d.conv2.w"));
    CHECK(set.contains("d.out.w"));
  }

  TEST_CASE("max pooling keeps the largest response per filter") {
    Tape t;
    auto r = max_pool_time(t.constant(Tensor::matrix(3, 2, {0.1, -0.5, 0.7, -0.2, 0.3, -0.9})));
    CHECK(r.values.value().storage() == std::vector<double>{0.7, -0.2});
  }

  TEST_CASE("utterances shorter than the widest filter are padded") {
    ParameterSet set;
    Rng rng(2);
    const DecisionParams p = make_decision(set, "d", {1, 3}, 2, 2, 3, false, rng);
    CHECK(p.max_width() == 3);
    Tape t;
    const auto probs = classify(t, p, t.constant(random_tensor({1, 2}, rng))).value();
    CHECK(probs.size() == 3);
    CHECK(probs[0] + probs[1] + probs[2] == doctest::Approx(1.0));
  }

  TEST_CASE("pure padding windows never win the pooling") {
    // A width-1 bank with a large bias would fire on zero rows; only the
    // single real word may be pooled.
    ParameterSet set;
    Rng rng(3);
    DecisionParams p = make_decision(set, "d", {1, 2}, 1, 1, 2, false, rng);
    p.banks[0].w->value[0] = 1.0;
    p.banks[0].b->value[0] = 0.0;
    p.out.w->value.storage() = {1.0, 0.0, 0.0, 0.0};
    p.out.b->value.storage() = {0.0, 0.0};
    Tape t;
    Rng unused(0);
    const auto z = classify_logits(t, p, t.constant(Tensor::matrix(1, 1, {-0.5})), 0.0, false, unused).value();
    CHECK(z[0] == doctest::Approx(std::tanh(-0.5)));
  }

  TEST_CASE("dropout applies to the pooled features only while training") {
    ParameterSet set;
    Rng rng(4);
    const DecisionParams p = make_decision(set, "d", {2}, 4, 2, 2, false, rng);
    const Tensor V = random_tensor({3, 2}, rng);
    Tape t;
    Rng a(1), b(2);
    const auto eval1 = classify_logits(t, p, t.constant(V), 0.5, false, a).value();
    const auto eval2 = classify_logits(t, p, t.constant(V), 0.5, false, b).value();
    CHECK(eval1.storage() == eval2.storage());
  }

  TEST_CASE("decision head gradients, with and without normalization") {
    for (bool norm : {false, true}) {
      ParameterSet set;
      Rng rng(5);
      const DecisionParams p = make_decision(set, "d", {2, 3}, 3, 2, 2, norm, rng);
      Parameter v{"v", random_tensor({4, 2}, rng), Tensor()};
      std::vector<Parameter*> params{&v};
      for (auto& q : set.all()) params.push_back(&q);
      auto loss = [&](Tape& t) {
        Rng unused(0);
        return ad::cross_entropy(classify_logits(t, p, t.parameter(v), 0.0, false, unused), 1);
      };
      CHECK(grad_check_parameters(loss, params) < 1e-5);
    }
  }

  TEST_CASE("dimension errors") {
    ParameterSet set;
    Rng rng(6);
    const DecisionParams p = make_decision(set, "d", {2}, 3, 2, 2, false, rng);
    Tape t;
    CHECK_THROWS_AS(conv_over_words(t, p.banks[0], t.constant(Tensor({3, 5}))), Error);
    CHECK_THROWS_AS(make_decision(set, "e", {}, 3, 2, 2, false, rng), Error);
  }
}
