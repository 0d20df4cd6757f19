#pragma once

#include <cmath>
#include <utility>

#include "vjf/core.hpp"

namespace vjf {

// Central-difference gradient of a scalar function, the oracle every analytic
// gradient in this library is checked against.
template <class F>
Vec finite_diff_gradient(F&& f, Vec x, double h) {
  require_domain(h > 0.0, "finite_diff_gradient: h must be positive");
  Vec g(x.size());
  for (Index j = 0; j < x.size(); ++j) {
    const double xj = x[j];
    x[j] = xj + h;
    const double fp = f(x);
    x[j] = xj - h;
    const double fm = f(x);
    x[j] = xj;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw numeric_error("finite_diff_gradient: non-finite function evaluation");
    g[j] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// ||a - b|| / max(||a|| + ||b||, floor); the relative-error metric used by the
// gradient-correctness checks.
inline double gradient_rel_error(const Vec& a, const Vec& b, double floor = 1e-12) {
  const double denom = std::max(a.norm() + b.norm(), floor);
  return (a - b).norm() / denom;
}

}  // namespace vjf
