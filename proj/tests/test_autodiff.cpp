#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "wordfuse/error.hpp"
#include "wordfuse/gradcheck.hpp"

using namespace wordfuse;
using wordfuse::testing::random_tensor;

namespace {

constexpr double kTol = 1e-6;

// Reduces any output to a scalar with fixed random weights so every output
// coordinate contributes to the gradient.
Var project(Tape& tape, Var y) {
  Rng rng(99);
  Tensor w(y.shape());
  for (auto& v : w.storage()) v = rng.uniform(-1.0, 1.0);
  return ad::sum(ad::mul(y, tape.constant(w)));
}

double check(const std::function<Var(Tape&, const std::vector<Var>&)>& f, std::vector<Tensor> inputs) {
  return grad_check([&](Tape& t, const std::vector<Var>& x) { return project(t, f(t, x)); }, std::move(inputs));
}

}  // namespace

TEST_SUITE("autodiff") {
  TEST_CASE("matmul values") {
    Tape t;
    Var a = t.constant(Tensor::matrix(2, 2, {1, 2, 3, 4}));
    Var b = t.constant(Tensor::matrix(2, 1, {5, 6}));
    CHECK(ad::matmul(a, b).value().storage() == std::vector<double>{17, 39});
    Var v = t.constant(Tensor::vector({1, 1}));
    CHECK(ad::matmul(v, a).value().storage() == std::vector<double>{4, 6});
    CHECK(ad::matmul_nt(a, a).value().storage() == std::vector<double>{5, 11, 11, 25});
    CHECK_THROWS_AS(ad::matmul(b, b), Error);
  }

  TEST_CASE("gradients of every operation") {
    Rng rng(5);
    auto m = [&](std::size_t r, std::size_t c) { return random_tensor({r, c}, rng); };
    auto v = [&](std::size_t n) { return random_tensor({n}, rng); };
    CHECK(check([](Tape&, auto& x) { return ad::matmul(x[0], x[1]); }, {m(3, 4), m(4, 2)}) < kTol);
    CHECK(check([](Tape&, auto& x) { return ad::matmul(x[0], x[1]); }, {v(3), m(3, 2)}) < kTol);
    CHECK(check([](Tape&, auto& x) { return ad::matmul_nt(x[0], x[1]); }, {m(3, 4), m(2, 4)}) < kTol);
    CHECK(check([](Tape&, auto& x) { return ad::tanh(x[0]); }, {m(2, 3)}) < kTol);
    CHECK(check([](Tape&, auto& x) { return ad::sigmoid(x[0]); }, {m(2, 3)}) < kTol);
    CHECK(check([](Tape&, auto& x) { return ad::relu(x[0]); }, {m(2, 3)}) < kTol);
    CHECK(check([](Tape&, auto& x) { return ad::add(x[0], x[1]); }, {m(2, 3), m(2, 3)}) < kTol);
    CHECK(check([](Tape&, auto& x) { return ad::sub(x[0], x[1]); }, {m(2, 3), v(1)}) < kTol);
    CHECK(check([](Tape&, auto& x) { return ad::mul(x[0], x[1]); }, {m(2, 3), m(2, 3)}) < kTol);
    CHECK(check([](Tape&, auto& x) { return ad::mul(x[0], x[1]); }, {v(1), m(2, 3)}) < kTol);
    CHECK(check([](Tape&, auto& x) { return ad::scale(x[0], -2.5); }, {v(4)}) < kTol);
    CHECK(check([](Tape&, auto& x) { return ad::add_bias(x[0], x[1]); }, {m(3, 2), v(2)}) < kTol);
    CHECK(check([](Tape&, auto& x) { return ad::scale_rows(x[0], x[1]); }, {v(3), m(3, 2)}) < kTol);
    CHECK(check([](Tape&, auto& x) { return ad::softmax(x[0]); }, {v(5)}) < kTol);
    CHECK(check([](Tape&, auto& x) { return ad::masked_softmax(x[0], Mask{1, 0, 1, 1, 0}); }, {v(5)}) < kTol);
    CHECK(check([](Tape&, auto& x) { return ad::concat({x[0], x[1]}, 1); }, {m(2, 3), m(2, 2)}) < kTol);
    CHECK(check([](Tape&, auto& x) { return ad::concat({x[0], x[1]}, 0); }, {m(2, 3), m(1, 3)}) < kTol);
    CHECK(check([](Tape&, auto& x) { return ad::stack({x[0], x[1], x[0]}); }, {v(3), v(3)}) < kTol);
    CHECK(check([](Tape&, auto& x) { return ad::slice(x[0], 1, 3); }, {v(5)}) < kTol);
    CHECK(check([](Tape&, auto& x) { return ad::row(x[0], 2); }, {m(3, 2)}) < kTol);
    CHECK(check([](Tape&, auto& x) { return ad::rows(x[0], 1, 2); }, {m(4, 2)}) < kTol);
    CHECK(check([](Tape&, auto& x) { return ad::pad_rows(x[0], 5); }, {m(2, 3)}) < kTol);
    CHECK(check([](Tape&, auto& x) { return ad::unfold_rows(x[0], 2); }, {m(4, 3)}) < kTol);
    CHECK(check([](Tape&, auto& x) { return ad::max_over_axis(x[0], 0).values; }, {m(4, 3)}) < kTol);
    CHECK(check([](Tape&, auto& x) { return ad::cross_entropy(x[0], 2); }, {v(3)}) < kTol);
    CHECK(check([](Tape&, auto& x) { return ad::embedding(x[0], std::vector<std::size_t>{2, 0, 2}); }, {m(3, 4)}) <
          kTol);
    CHECK(check([](Tape&, auto& x) { return ad::feature_norm(x[0], x[1], x[2]); }, {m(4, 3), v(3), v(3)}) < 1e-5);
  }

  TEST_CASE("masked softmax puts exact zeros on padding") {
    Tape t;
    Var e = t.constant(Tensor::vector({3.0, -1.0, 700.0, 0.5}));
    const auto a = ad::masked_softmax(e, Mask{1, 1, 0, 1}).value();
    CHECK(a[2] == 0.0);
    CHECK(a[0] + a[1] + a[3] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(ad::masked_softmax(e, Mask{0, 0, 0, 0}), Error);
    CHECK_THROWS_AS(ad::masked_softmax(e, Mask{1, 1}), Error);
  }

  TEST_CASE("softmax is stable for large energies") {
    Tape t;
    const auto a = ad::softmax(t.constant(Tensor::vector({1000.0, 1000.0}))).value();
    CHECK(a[0] == doctest::Approx(0.5));
  }

  TEST_CASE("cross entropy value") {
    Tape t;
    Var z = t.constant(Tensor::vector({0.0, std::log(3.0)}));
    CHECK(ad::cross_entropy(z, 1).item() == doctest::Approx(std::log(4.0 / 3.0)));
    CHECK_THROWS_AS(ad::cross_entropy(z, 2), Error);
  }

  TEST_CASE("max pooling ties go to the lowest index") {
    Tape t;
    auto r = ad::max_over_axis(t.constant(Tensor::matrix(3, 2, {1, 5, 4, 5, 4, 2})), 0);
    CHECK(r.values.value().storage() == std::vector<double>{4, 5});
    CHECK(r.argmax == std::vector<std::size_t>{1, 0});
  }

  TEST_CASE("dropout is the identity at inference and unbiased in training") {
    Tape t;
    Rng rng(1);
    Var x = t.constant(Tensor({4000}, 1.0));
    CHECK(ad::dropout(x, 0.5, false, rng).id == x.id);
    const auto y = ad::dropout(x, 0.5, true, rng).value();
    double sum = 0.0;
    for (double v : y.storage()) {
      CHECK((v == 0.0 || v == 2.0));
      sum += v;
    }
    CHECK(sum / 4000.0 == doctest::Approx(1.0).epsilon(0.06));
  }

  TEST_CASE("shape errors are reported") {
    Tape t;
    Var a = t.constant(Tensor({2, 3}));
    CHECK_THROWS_AS(ad::add(a, t.constant(Tensor({3, 2}))), Error);
    CHECK_THROWS_AS(ad::unfold_rows(a, 3), Error);
    CHECK_THROWS_AS(ad::concat({}, 0), Error);
  }

  TEST_CASE("parameters share one leaf per tape and frozen ones get no gradient") {
    Parameter p{"p", Tensor::vector({1.0, 2.0}), Tensor()};
    Parameter q{"q", Tensor::vector({3.0, 4.0}), Tensor()};
    q.frozen = true;
    Tape t;
    Var a = t.parameter(p);
    CHECK(t.parameter(p).id == a.id);
    Var loss = ad::sum(ad::mul(ad::add(a, a), t.parameter(q)));
    t.backward(loss);
    t.accumulate_parameter_grads();
    CHECK(p.grad.storage() == std::vector<double>{6.0, 8.0});
    CHECK((q.grad.size() == 0 || q.grad.storage() == std::vector<double>{0.0, 0.0}));
  }

  TEST_CASE("gradients accumulate across tapes until cleared") {
    Parameter p{"p", Tensor::vector({2.0}), Tensor()};
    for (int i = 0; i < 2; ++i) {
      Tape t;
      Var x = t.parameter(p);
      t.backward(ad::mul(x, x));
      t.accumulate_parameter_grads(0.5);
    }
    CHECK(p.grad[0] == doctest::Approx(4.0));
    p.zero_grad();
    CHECK(p.grad[0] == 0.0);
  }

  TEST_CASE("relative error definition") {
    CHECK(relative_error(1.0, 1.0) == 0.0);
    CHECK(relative_error(1.0, -1.0) == doctest::Approx(1.0));
    CHECK(relative_error(0.0, 1e-12) == doctest::Approx(1e-4));
  }

  TEST_CASE("gradient check catches a wrong derivative") {
    // sigmoid'(x) evaluated through a deliberately broken composite.
    auto broken = [](Tape& t, const std::vector<Var>& x) {
      Var y = x[0];
      return t.push(Tensor::scalar(y.item() * y.item()), true, [y](Tape& tape, std::uint32_t self) {
        tape.grad_buffer(y.id)[0] += tape.grad_ref(self)[0] * 3.0 * y.item();
      });
    };
    CHECK(grad_check(broken, {Tensor::vector({0.7})}) > 0.1);
  }
}
