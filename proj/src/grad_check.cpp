#include "thermocae/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "thermocae/rng.hpp"

namespace thermocae {

namespace {

double scalar_of(Var v) {
  if (v.value().size() != 1) throw ShapeError("grad_check: function must return a scalar");
  return v.value()[0];
}

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
}

}  // namespace

double grad_check(const std::function<Var(Graph&, Var)>& f, const Tensor& x,
                  const GradCheckOptions& opts) {
  Parameter p{"x", x, {}};
  std::vector<Parameter*> params{&p};
  return grad_check([&](Graph& g) { return f(g, g.parameter(p)); }, params, opts);
}

double grad_check(const std::function<Var(Graph&)>& loss, std::span<Parameter* const> params,
                  const GradCheckOptions& opts) {
  std::size_t total = 0;
  for (const Parameter* p : params) total += p->value.size();
  if (total == 0) return 0.0;
  {
    Graph g;
    Var l = loss(g);
    scalar_of(l);
    g.backward(l);
  }
  Rng rng(opts.seed);
  double worst = 0.0;
  for (std::size_t s = 0; s < opts.samples; ++s) {
    std::size_t flat = rng.below(total);
    std::size_t which = 0;
    while (flat >= params[which]->value.size()) flat -= params[which++]->value.size();
    Parameter& p = *params[which];
    const double analytic = p.grad.empty() ? 0.0 : p.grad[flat];
    const double saved = p.value[flat];
    auto eval = [&](double v) {
      p.value[flat] = v;
      Graph g;
      return scalar_of(loss(g));
    };
    const double plus = eval(saved + opts.step);
    const double minus = eval(saved - opts.step);
    p.value[flat] = saved;
    const double numeric = (plus - minus) / (2.0 * opts.step);
    worst = std::max(worst, relative_error(analytic, numeric));
  }
  return worst;
}

}  // namespace thermocae
