#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "thermocae/graph.hpp"

namespace thermocae {

struct GradCheckOptions {
  double step = 1e-5;
  std::size_t samples = 50;
  std::uint64_t seed = 1;
};

/// Compares reverse-mode gradients with central differences at randomly
/// sampled coordinates. Returns max |analytic - numeric| / max(1, |analytic|).
double grad_check(const std::function<Var(Graph&, Var)>& f, const Tensor& x,
                  const GradCheckOptions& opts = {});

/// Same check over the coordinates of a parameter set; `loss` must build its
/// scalar from graph.parameter(...) of those parameters. Parameter values are
/// restored on return.
double grad_check(const std::function<Var(Graph&)>& loss, std::span<Parameter* const> params,
                  const GradCheckOptions& opts = {});

}  // namespace thermocae
