#pragma once

#include <functional>
#include <vector>

#include "wordfuse/autodiff.hpp"

namespace wordfuse {

struct GradCheckOptions {
  double step = 1e-5;
  // 0 checks every coordinate; otherwise a seeded sample of this many per tensor.
  std::size_t max_coords_per_tensor = 0;
  std::uint64_t seed = 0;
};

// |g_ad − g_fd| / max(1e-8, |g_ad| + |g_fd|)
double relative_error(double analytic, double numeric);

// f maps tape-bound inputs to a scalar. Returns the maximum relative error
// between reverse-mode and central-difference gradients over all checked
// coordinates. Throws a numeric error if f produces a non-finite value.
double grad_check(const std::function<Var(Tape&, const std::vector<Var>&)>& f, std::vector<Tensor> inputs,
                  const GradCheckOptions& options = {});

// Same check for a loss that binds model parameters itself. f must be
// deterministic (no dropout sampling).
double grad_check_parameters(const std::function<Var(Tape&)>& f, const std::vector<Parameter*>& params,
                             const GradCheckOptions& options = {});

}  // namespace wordfuse
