#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "wordfuse/error.hpp"
#include "wordfuse/fusion.hpp"
#include "wordfuse/gradcheck.hpp"

using namespace wordfuse;
using wordfuse::testing::random_tensor;

namespace {

struct Fixture {
  ParameterSet set;
  FusionParams p;
  Tensor th, tw, ta, wa;
  explicit Fixture(std::size_t n = 3, std::size_t d = 2, std::uint64_t seed = 1) {
    Rng rng(seed);
    p.dense = make_dense(set, "fd", 2 * d, d, rng);
    p.faf = make_attention(set, "ff", d, rng);
    th = random_tensor({n, d}, rng);
    tw = random_tensor({n, d}, rng);
    ta = random_tensor({n}, rng);
    wa = random_tensor({n}, rng);
    double st = 0, sw = 0;
    for (std::size_t i = 0; i < n; ++i) ta[i] = std::abs(ta[i]) + 0.1, st += ta[i];
    for (std::size_t i = 0; i < n; ++i) wa[i] = std::abs(wa[i]) + 0.1, sw += wa[i];
    for (std::size_t i = 0; i < n; ++i) ta[i] /= st, wa[i] /= sw;
  }
  // tanh(W [a ; b] + bias) for one word.
  std::vector<double> shared(const std::vector<double>& a, const std::vector<double>& b) const {
    std::vector<double> in(a);
    in.insert(in.end(), b.begin(), b.end());
    const auto& W = p.dense.w->value;
    std::vector<double> out(W.dim(0));
    for (std::size_t r = 0; r < out.size(); ++r) {
      double s = p.dense.b->value[r];
      for (std::size_t c = 0; c < in.size(); ++c) s += W.at(r, c) * in[c];
      out[r] = std::tanh(s);
    }
    return out;
  }
  std::vector<double> row(const Tensor& m, std::size_t i, double scale = 1.0) const {
    std::vector<double> out(m.dim(1));
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = scale * m.at(i, c);
    return out;
  }
};

}  // namespace

TEST_SUITE("fusion") {
  TEST_CASE("strategy names") {
    for (const char* s : {"hf", "vf", "faf", "ul", "dl"}) CHECK(std::string(strategy_name(parse_strategy(s))) == s);
    CHECK(is_word_level(Strategy::kFaf));
    CHECK_FALSE(is_word_level(Strategy::kUl));
    CHECK_THROWS_AS(parse_strategy("xf"), Error);
  }

  TEST_CASE("horizontal fusion scales states before the dense layer") {
    Fixture f;
    Tape t;
    const auto out = horizontal_fusion(t, f.p, t.constant(f.th), t.constant(f.ta), t.constant(f.tw), t.constant(f.wa));
    CHECK_FALSE(out.s_alpha.has_value());
    for (std::size_t i = 0; i < 3; ++i) {
      const auto want = f.shared(f.row(f.th, i, f.ta[i]), f.row(f.tw, i, f.wa[i]));
      for (std::size_t c = 0; c < 2; ++c) CHECK(out.v.value().at(i, c) == doctest::Approx(want[c]).epsilon(1e-12));
    }
  }

  TEST_CASE("vertical fusion averages the two attentions") {
    Fixture f;
    Tape t;
    const auto out = vertical_fusion(t, f.p, t.constant(f.th), t.constant(f.ta), t.constant(f.tw), t.constant(f.wa));
    REQUIRE(out.s_alpha.has_value());
    double total = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      const double s = (f.ta[i] + f.wa[i]) / 2.0;
      CHECK(out.s_alpha->value()[i] == doctest::Approx(s));
      total += out.s_alpha->value()[i];
      const auto h = f.shared(f.row(f.th, i), f.row(f.tw, i));
      for (std::size_t c = 0; c < 2; ++c) CHECK(out.v.value().at(i, c) == doctest::Approx(s * h[c]).epsilon(1e-12));
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("fine-tuning fusion adds a learned distribution to the shared attention") {
    Fixture f;
    Tape t;
    const auto out = faf_fusion(t, f.p, t.constant(f.th), t.constant(f.ta), t.constant(f.tw), t.constant(f.wa));
    REQUIRE(out.u_alpha.has_value());
    double total = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      const double u = out.u_alpha->value()[i], s = out.s_alpha->value()[i];
      CHECK(u - s > 0.0);
      CHECK(u - s < 1.0);
      total += u;
      const auto h = f.shared(f.row(f.th, i), f.row(f.tw, i));
      for (std::size_t c = 0; c < 2; ++c) CHECK(out.v.value().at(i, c) == doctest::Approx(u * h[c]).epsilon(1e-12));
    }
    CHECK(total == doctest::Approx(2.0).epsilon(1e-12));
    FusionParams no_faf = f.p;
    no_faf.faf = {};
    CHECK_THROWS_AS(faf_fusion(t, no_faf, t.constant(f.th), t.constant(f.ta), t.constant(f.tw), t.constant(f.wa)), Error);
  }

  TEST_CASE("word count mismatches are fusion errors") {
    Fixture f;
    Rng rng(2);
    Tape t;
    try {
      fuse(t, Strategy::kHf, f.p, t.constant(f.th), t.constant(f.ta), t.constant(random_tensor({4, 2}, rng)),
           t.constant(Tensor({4}, 0.25)));
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kFusion);
    }
    CHECK_THROWS_AS(fuse(t, Strategy::kUl, f.p, t.constant(f.th), t.constant(f.ta), t.constant(f.tw), t.constant(f.wa)),
                    Error);
  }

  TEST_CASE("utterance-level baseline concatenates attention-weighted sums") {
    Fixture f(3, 2);
    Tape t;
    const auto u = ul_fusion_baseline(t.constant(f.th), t.constant(f.ta), t.constant(f.tw), t.constant(f.wa)).value();
    CHECK(u.size() == 4);
    double first = 0.0, third = 0.0;
    for (std::size_t i = 0; i < 3; ++i) first += f.ta[i] * f.th.at(i, 0), third += f.wa[i] * f.tw.at(i, 0);
    CHECK(u[0] == doctest::Approx(first));
    CHECK(u[2] == doctest::Approx(third));
  }

  TEST_CASE("decision-level baseline weights text 1.2 and audio 0.8") {
    const auto d = dl_fusion_baseline({0.9, 0.1}, {0.2, 0.8});
    CHECK(d[0] == doctest::Approx(1.24));
    CHECK(d[1] == doctest::Approx(0.76));
    CHECK_THROWS_AS(dl_fusion_baseline({1.0}, {0.5, 0.5}), Error);
  }

  TEST_CASE("fusion gradients for every strategy") {
    for (Strategy s : {Strategy::kHf, Strategy::kVf, Strategy::kFaf}) {
      Fixture f(3, 2, 7);
      Rng rng(3);
      Parameter th{"th", f.th, Tensor()}, tw{"tw", f.tw, Tensor()}, ta{"ta", f.ta, Tensor()}, wa{"wa", f.wa, Tensor()};
      const Tensor proj = random_tensor({3, 2}, rng);
      std::vector<Parameter*> params{&th, &tw, &ta, &wa};
      for (auto& p : f.set.all()) params.push_back(&p);
      auto loss = [&](Tape& t) {
        auto out = fuse(t, s, f.p, t.parameter(th), t.parameter(ta), t.parameter(tw), t.parameter(wa));
        return ad::sum(ad::mul(out.v, t.constant(proj)));
      };
      CHECK(grad_check_parameters(loss, params) < 1e-6);
    }
  }

  TEST_CASE("optional normalization") {
    ParameterSet set;
    const NormParams n = make_norm(set, "n", 2);
    CHECK(n.enabled());
    CHECK_FALSE(NormParams{}.enabled());
    Tape t;
    const auto y = apply_norm(t, n, t.constant(Tensor::matrix(2, 2, {1, 5, 3, 9}))).value();
    CHECK(y.at(0, 0) == doctest::Approx(-1.0).epsilon(1e-4));
    CHECK(y.at(1, 1) == doctest::Approx(1.0).epsilon(1e-4));
  }
}
