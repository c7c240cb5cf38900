#include "wordfuse/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wordfuse/error.hpp"

namespace wordfuse {
namespace {

double checked(double v) {
  if (!std::isfinite(v)) fail(ErrorKind::kNumeric, "non-finite value during gradient check");
  return v;
}

std::vector<std::size_t> coordinates(std::size_t n, const GradCheckOptions& options, std::uint64_t salt) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (options.max_coords_per_tensor == 0 || options.max_coords_per_tensor >= n) return idx;
  Rng rng(mix_seed(options.seed, salt));
  rng.shuffle(idx);
  idx.resize(options.max_coords_per_tensor);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

double grad_check(const std::function<Var(Tape&, const std::vector<Var>&)>& f, std::vector<Tensor> inputs,
                  const GradCheckOptions& options) {
  auto evaluate = [&](bool with_grad, std::vector<std::vector<double>>* grads) {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& t : inputs) vars.push_back(tape.input(t));
    Var out = f(tape, vars);
    const double v = checked(out.item());
    if (with_grad) {
      tape.backward(out);
      for (const Var& x : vars) grads->push_back(tape.grad(x));
    }
    return v;
  };
  std::vector<std::vector<double>> analytic;
  evaluate(true, &analytic);
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i : coordinates(inputs[k].size(), options, k)) {
      const double orig = inputs[k][i];
      inputs[k][i] = orig + options.step;
      const double up = evaluate(false, nullptr);
      inputs[k][i] = orig - options.step;
      const double down = evaluate(false, nullptr);
      inputs[k][i] = orig;
      const double numeric = (up - down) / (2.0 * options.step);
      worst = std::max(worst, relative_error(analytic[k][i], numeric));
    }
  }
  return worst;
}

double grad_check_parameters(const std::function<Var(Tape&)>& f, const std::vector<Parameter*>& params,
                             const GradCheckOptions& options) {
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    Var out = f(tape);
    checked(out.item());
    tape.backward(out);
    tape.accumulate_parameter_grads();
  }
  std::vector<std::vector<double>> analytic;
  for (Parameter* p : params) analytic.push_back(p->grad.storage());
  auto evaluate = [&] {
    Tape tape;
    return checked(f(tape).item());
  };
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& value = params[k]->value;
    for (std::size_t i : coordinates(value.size(), options, k)) {
      const double orig = value[i];
      value[i] = orig + options.step;
      const double up = evaluate();
      value[i] = orig - options.step;
      const double down = evaluate();
      value[i] = orig;
      const double numeric = (up - down) / (2.0 * options.step);
      worst = std::max(worst, relative_error(analytic[k][i], numeric));
    }
  }
  return worst;
}

}  // namespace wordfuse
