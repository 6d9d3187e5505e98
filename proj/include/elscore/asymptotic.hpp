#pragma once

#include <algorithm>
#include <cmath>

#include "elscore/mle.hpp"
#include "elscore/normal.hpp"
#include "elscore/types.hpp"

namespace elscore {

namespace detail {

inline double clamp_diff(double x) { return std::clamp(x, -1.0, 1.0); }

inline ConfidenceInterval wald_interval(double p_t, int n_t, double p_c, int n_c, double level,
                                        double widen) {
  const double z = norm_quantile(0.5 + 0.5 * level);
  const double se = std::sqrt(p_t * (1.0 - p_t) / n_t + p_c * (1.0 - p_c) / n_c);
  const double d = p_t - p_c;
  return ConfidenceInterval{clamp_diff(d - (z * se + widen)), clamp_diff(d + (z * se + widen)),
                            level};
}

}  // namespace detail

inline ConfidenceInterval wald_ci(const TwoArmData& data, double level) {
  validate(data);
  validate_level(level);
  return detail::wald_interval(data.test.proportion(), data.test.trials,
                               data.control.proportion(), data.control.trials, level, 0.0);
}

// Wald formula after adding one success and one failure to each arm.
inline ConfidenceInterval agresti_caffo_ci(const TwoArmData& data, double level) {
  validate(data);
  validate_level(level);
  const double p_t = (data.test.successes + 1.0) / (data.test.trials + 2.0);
  const double p_c = (data.control.successes + 1.0) / (data.control.trials + 2.0);
  return detail::wald_interval(p_t, data.test.trials + 2, p_c, data.control.trials + 2, level,
                               0.0);
}

// Hauck-Anderson interval: the observed difference, a standard error with
// N - 1 denominators, and a continuity term of 1 / (2 min(N_T, N_C)) on each
// side. The N - 1 denominators are the method's original definition and are
// what the published reference values use.
inline ConfidenceInterval hauck_anderson_ci(const TwoArmData& data, double level) {
  validate(data);
  validate_level(level);
  const double z = norm_quantile(0.5 + 0.5 * level);
  const double p_t = data.test.proportion();
  const double p_c = data.control.proportion();
  // p(1-p) vanishes whenever trials == 1, so the clamped denominator is safe
  const double var = p_t * (1.0 - p_t) / std::max(1, data.test.trials - 1) +
                     p_c * (1.0 - p_c) / std::max(1, data.control.trials - 1);
  const double widen = 0.5 / std::min(data.test.trials, data.control.trials);
  const double half = z * std::sqrt(var) + widen;
  const double d = p_t - p_c;
  return ConfidenceInterval{detail::clamp_diff(d - half), detail::clamp_diff(d + half), level};
}

// Roots in p of |p - phat| = z sqrt(p(1-p)/n), in the standard stable form.
inline WilsonLimits wilson_limits(const BinomialArm& arm, double level) {
  validate(arm);
  validate_level(level);
  const double z = norm_quantile(0.5 + 0.5 * level);
  const double z2 = z * z;
  const double n = arm.trials;
  const double phat = arm.proportion();
  const double denom = 1.0 + z2 / n;
  const double center = (phat + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
  // p = 0 resp. p = 1 solve the score equation exactly at the boundary counts
  const double lower = arm.successes == 0 ? 0.0 : std::max(0.0, center - half);
  const double upper = arm.successes == arm.trials ? 1.0 : std::min(1.0, center + half);
  return WilsonLimits{lower, upper};
}

// Continuity-corrected Wilson limits: roots of |p - phat| - 1/(2n) = z sqrt(p(1-p)/n),
// i.e. the score quadratic with phat shifted by -1/(2n) for the lower branch and
// +1/(2n) for the upper. Conventions: lower = 0 at x = 0 and upper = 1 at x = n.
inline WilsonLimits wilson_cc_limits(const BinomialArm& arm, double level) {
  validate(arm);
  validate_level(level);
  const double z = norm_quantile(0.5 + 0.5 * level);
  const double z2 = z * z;
  const double n = arm.trials;
  const double x = arm.successes;
  const double denom = 2.0 * (n + z2);

  WilsonLimits w;
  if (arm.successes == 0) {
    w.lower = 0.0;
  } else {
    const double disc = z2 - 2.0 - 1.0 / n + 4.0 * (x / n) * (n - x + 1.0);
    w.lower = (2.0 * x + z2 - 1.0 - z * std::sqrt(std::max(0.0, disc))) / denom;
    w.lower = std::clamp(w.lower, 0.0, 1.0);
  }
  if (arm.successes == arm.trials) {
    w.upper = 1.0;
  } else {
    const double disc = z2 + 2.0 - 1.0 / n + 4.0 * (x / n) * (n - x - 1.0);
    w.upper = (2.0 * x + z2 + 1.0 + z * std::sqrt(std::max(0.0, disc))) / denom;
    w.upper = std::clamp(w.upper, 0.0, 1.0);
  }
  return w;
}

namespace detail {

inline ConfidenceInterval newcombe_from_limits(const TwoArmData& data, const WilsonLimits& wt,
                                               const WilsonLimits& wc, double level) {
  const double p_t = data.test.proportion();
  const double p_c = data.control.proportion();
  const double d = p_t - p_c;
  const double lo = d - std::sqrt((p_t - wt.lower) * (p_t - wt.lower) +
                                  (wc.upper - p_c) * (wc.upper - p_c));
  const double hi = d + std::sqrt((wt.upper - p_t) * (wt.upper - p_t) +
                                  (p_c - wc.lower) * (p_c - wc.lower));
  return ConfidenceInterval{clamp_diff(lo), clamp_diff(hi), level};
}

}  // namespace detail

// Newcombe hybrid score interval: per-arm Wilson limits combined around the
// observed difference.
inline ConfidenceInterval newcombe_ci(const TwoArmData& data, double level) {
  validate(data);
  validate_level(level);
  return detail::newcombe_from_limits(data, wilson_limits(data.test, level),
                                      wilson_limits(data.control, level), level);
}

inline ConfidenceInterval newcombe_cc_ci(const TwoArmData& data, double level) {
  validate(data);
  validate_level(level);
  return detail::newcombe_from_limits(data, wilson_cc_limits(data.test, level),
                                      wilson_cc_limits(data.control, level), level);
}

namespace detail {

inline double score_z_at(const TwoArmData& data, double delta) {
  return score_statistic(data, DifferenceConstraint{delta}).z;
}

// Root of z(delta) = target below (for the lower bound) or above (for the
// upper bound) the observed difference. z is decreasing in delta, so the
// bracket is grown geometrically away from the observed difference until the
// sign changes, then bisected. Returns the domain endpoint when no sign
// change exists inside (-1, 1).
inline double invert_score_bound(const TwoArmData& data, double target, bool below,
                                 double tol = 1e-8) {
  constexpr double kEdge = 1.0 - 1e-12;
  const double dhat = std::clamp(data.diff(), -kEdge, kEdge);
  auto f = [&](double delta) { return score_z_at(data, delta) - target; };

  // f moves from negative at dhat (below) resp. positive (above) toward the
  // domain edge; find a probe on the other side.
  double inner = dhat;
  double f_inner = f(inner);
  if (below && f_inner >= 0.0) return inner;  // degenerate data, z already past target
  if (!below && f_inner <= 0.0) return inner;

  double width = 0.015625;
  double outer = 0.0;
  bool bracketed = false;
  while (!bracketed) {
    outer = below ? dhat - width : dhat + width;
    if (outer <= -kEdge || outer >= kEdge) {
      outer = below ? -kEdge : kEdge;
      const double f_outer = f(outer);
      if ((below && f_outer < 0.0) || (!below && f_outer > 0.0))
        return below ? -1.0 : 1.0;  // no crossing inside the parameter space
      bracketed = true;
      break;
    }
    const double f_outer = f(outer);
    if ((below && f_outer >= 0.0) || (!below && f_outer <= 0.0)) {
      bracketed = true;
      break;
    }
    inner = outer;
    width *= 2.0;
  }

  double lo = below ? outer : inner;
  double hi = below ? inner : outer;
  // sign(f(lo)) >= 0 >= sign(f(hi)) since z decreases in delta
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) >= 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Asymptotic likelihood score interval: delta values where the score
// statistic crosses +/- z_{alpha/2}.
inline ConfidenceInterval als_ci(const TwoArmData& data, double level) {
  validate(data);
  validate_level(level);
  const double z = norm_quantile(0.5 + 0.5 * level);
  const double lo = detail::invert_score_bound(data, z, true);
  const double hi = detail::invert_score_bound(data, -z, false);
  return ConfidenceInterval{lo, hi, level};
}

// One-sided asymptotic score p-value for non-inferiority at the given margin.
inline double als_pvalue(const TwoArmData& data, double margin) {
  validate(data);
  validate_margin(margin);
  return 1.0 - norm_cdf(detail::score_z_at(data, -margin));
}

// Farrington-Manning style interval: Wald form with the standard error taken
// from the restricted MLE at the non-inferiority constraint. Margin-dependent,
// unlike the plain Wald interval.
inline ConfidenceInterval fm_ci(const TwoArmData& data, double margin, double level) {
  validate(data);
  validate_margin(margin);
  validate_level(level);
  const ConstrainedMle mle = restricted_mle(data, DifferenceConstraint{-margin});
  const double z = norm_quantile(0.5 + 0.5 * level);
  const double se = std::sqrt(mle.p_test * (1.0 - mle.p_test) / data.test.trials +
                              mle.p_control * (1.0 - mle.p_control) / data.control.trials);
  const double d = data.diff();
  return ConfidenceInterval{detail::clamp_diff(d - z * se), detail::clamp_diff(d + z * se),
                            level};
}

}  // namespace elscore
