#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "elscore/types.hpp"

namespace elscore {

namespace detail {

// d/dp of the constrained log-likelihood
//   xt ln p + (nt-xt) ln(1-p) + xc ln(p-delta) + (nc-xc) ln(1-p+delta)
// at an interior point of the nuisance domain. Counts may be fractional
// (design proportions enter through here when sizing a study).
inline double constrained_loglik_slope(double xt, double nt, double xc, double nc, double delta,
                                       double p) {
  double s = 0.0;
  if (xt > 0.0) s += xt / p;
  if (nt - xt > 0.0) s -= (nt - xt) / (1.0 - p);
  if (xc > 0.0) s += xc / (p - delta);
  if (nc - xc > 0.0) s -= (nc - xc) / (1.0 - p + delta);
  return s;
}

// Maximizer of the constrained log-likelihood over p in
// [max(0, delta), min(1, 1 + delta)]. The log-likelihood is strictly concave,
// so bisection on the slope sign converges whether the maximizer is interior
// or at either endpoint. 50 halvings of a unit-length interval end well below
// the 1e-12 placement tolerance.
inline double constrained_mle_p_test(double xt, double nt, double xc, double nc, double delta) {
  double lo = std::max(0.0, delta);
  double hi = std::min(1.0, 1.0 + delta);
  for (int it = 0; it < 50 && hi - lo > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (constrained_loglik_slope(xt, nt, xc, nc, delta, mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Restricted MLE of (p_test, p_control) subject to p_test - p_control = delta.
inline ConstrainedMle restricted_mle(const TwoArmData& data, DifferenceConstraint constraint) {
  validate(data);
  validate(constraint);
  const double p = detail::constrained_mle_p_test(data.test.successes, data.test.trials,
                                                  data.control.successes, data.control.trials,
                                                  constraint.delta);
  return ConstrainedMle{p, p - constraint.delta, constraint};
}

// Restricted MLE driven by target proportions and relative arm weights
// instead of observed counts; used for sample-size calculations.
inline ConstrainedMle restricted_mle_weighted(double p_test, double weight_test, double p_control,
                                              double weight_control, double delta) {
  const double p = detail::constrained_mle_p_test(p_test * weight_test, weight_test,
                                                  p_control * weight_control, weight_control,
                                                  delta);
  return ConstrainedMle{p, p - delta, DifferenceConstraint{delta}};
}

// Score statistic for the difference of proportions at a fixed constraint.
// The variance is evaluated at the restricted MLE, with no small-sample bias
// factor on the denominator.
inline ScoreResult score_statistic(const TwoArmData& data, DifferenceConstraint constraint) {
  validate(data);
  validate(constraint);
  const ConstrainedMle mle = restricted_mle(data, constraint);
  ScoreResult r;
  r.numerator = data.diff() - constraint.delta;
  r.variance = mle.p_test * (1.0 - mle.p_test) / data.test.trials +
               mle.p_control * (1.0 - mle.p_control) / data.control.trials;
  if (r.variance > 0.0) {
    r.z = r.numerator / std::sqrt(r.variance);
  } else if (r.numerator > 0.0) {
    r.z = std::numeric_limits<double>::infinity();
  } else if (r.numerator < 0.0) {
    r.z = -std::numeric_limits<double>::infinity();
  } else {
    r.z = 0.0;
  }
  return r;
}

}  // namespace elscore
