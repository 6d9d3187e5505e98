#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "elscore/asymptotic.hpp"
#include "elscore/binomial.hpp"
#include "elscore/exact.hpp"
#include "elscore/mle.hpp"
#include "elscore/normal.hpp"
#include "elscore/parallel.hpp"
#include "elscore/types.hpp"

namespace elscore {

// One operating-characteristic scenario: the boundary null has
// p_test = p_control - margin.
struct OcScenario {
  int n_test = 0;
  int n_control = 0;
  double margin = 0.10;
  double p_control = 0.5;
  double one_sided_alpha = 0.025;
};

inline void validate(const OcScenario& s) {
  if (s.n_test < 1 || s.n_control < 1)
    throw std::invalid_argument("scenario: arm sizes must be >= 1");
  validate_margin(s.margin);
  if (!(s.p_control >= 0.0 && s.p_control <= 1.0))
    throw std::invalid_argument("scenario: p_control must be in [0, 1]");
  if (s.p_control - s.margin < 0.0 || s.p_control > 1.0)
    throw std::invalid_argument("scenario: null p_test = p_control - margin must be in [0, 1]");
  if (!(s.one_sided_alpha >= 0.0 && s.one_sided_alpha < 0.5))
    throw std::invalid_argument("scenario: one-sided alpha must be in [0, 0.5)");
}

// Rejecting outcomes of a one-sided level alpha/2 test over the full sample
// space, stored per test-arm count as the contiguous run of control counts
// [0, reject_j_hi[i]]. Rejecting cells past the first gap in a row (never
// seen in practice, but not assumed away) land in extra_cells.
struct RejectionRegion {
  int n_test = 0;
  int n_control = 0;
  std::vector<int> reject_j_hi;
  std::vector<std::pair<int, int>> extra_cells;

  bool contains(int i, int j) const {
    if (j <= reject_j_hi[i]) return true;
    for (const auto& cell : extra_cells)
      if (cell.first == i && cell.second == j) return true;
    return false;
  }
  long long cell_count() const {
    long long total = static_cast<long long>(extra_cells.size());
    for (int hi : reject_j_hi) total += hi + 1;
    return total;
  }
};

namespace detail {

template <class Member>
RejectionRegion region_from_predicate(int nt, int nc, Member&& member) {
  RejectionRegion region;
  region.n_test = nt;
  region.n_control = nc;
  region.reject_j_hi.assign(nt + 1, -1);
  for (int i = 0; i <= nt; ++i) {
    int run = -1;
    for (int j = 0; j <= nc; ++j) {
      if (!member(i, j)) continue;
      if (j == run + 1)
        run = j;
      else
        region.extra_cells.emplace_back(i, j);
    }
    region.reject_j_hi[i] = run;
  }
  return region;
}

// Lower confidence bounds for the closed-form interval methods, arranged so a
// row scan touches only O(1) work per cell.
struct LowerBoundScan {
  std::vector<double> p_t, p_c;        // per-count proportions (possibly shifted)
  std::vector<double> var_t, var_c;    // per-count variance contributions
  std::vector<double> wilson_l_t, wilson_u_c;
  double z = 0.0;
  double widen = 0.0;
  Method method;

  double lower(int i, int j) const {
    switch (method) {
      case Method::wald:
      case Method::agresti_caffo:
      case Method::hauck_anderson:
        return p_t[i] - p_c[j] - (z * std::sqrt(var_t[i] + var_c[j]) + widen);
      case Method::newcombe:
      case Method::newcombe_cc: {
        const double a = p_t[i] - wilson_l_t[i];
        const double b = wilson_u_c[j] - p_c[j];
        return p_t[i] - p_c[j] - std::sqrt(a * a + b * b);
      }
      default:
        return 0.0;
    }
  }
};

inline LowerBoundScan make_lower_bound_scan(Method m, int nt, int nc, double level) {
  LowerBoundScan s;
  s.method = m;
  s.z = norm_quantile(0.5 + 0.5 * level);
  s.p_t.resize(nt + 1);
  s.p_c.resize(nc + 1);
  s.var_t.resize(nt + 1);
  s.var_c.resize(nc + 1);
  const bool shifted = m == Method::agresti_caffo;
  const double dt = shifted ? nt + 2.0 : nt;
  const double dc = shifted ? nc + 2.0 : nc;
  // Hauck-Anderson uses N - 1 variance denominators, everything else N
  const double vt = m == Method::hauck_anderson ? std::max(1, nt - 1) : dt;
  const double vc = m == Method::hauck_anderson ? std::max(1, nc - 1) : dc;
  for (int i = 0; i <= nt; ++i) {
    s.p_t[i] = (i + (shifted ? 1.0 : 0.0)) / dt;
    s.var_t[i] = s.p_t[i] * (1.0 - s.p_t[i]) / vt;
  }
  for (int j = 0; j <= nc; ++j) {
    s.p_c[j] = (j + (shifted ? 1.0 : 0.0)) / dc;
    s.var_c[j] = s.p_c[j] * (1.0 - s.p_c[j]) / vc;
  }
  if (m == Method::hauck_anderson) s.widen = 0.5 / std::min(nt, nc);
  if (m == Method::newcombe || m == Method::newcombe_cc) {
    s.wilson_l_t.resize(nt + 1);
    s.wilson_u_c.resize(nc + 1);
    for (int i = 0; i <= nt; ++i) {
      const auto w = m == Method::newcombe ? wilson_limits({i, nt}, level)
                                           : wilson_cc_limits({i, nt}, level);
      s.wilson_l_t[i] = w.lower;
    }
    for (int j = 0; j <= nc; ++j) {
      const auto w = m == Method::newcombe ? wilson_limits({j, nc}, level)
                                           : wilson_cc_limits({j, nc}, level);
      s.wilson_u_c[j] = w.upper;
    }
  }
  return s;
}

inline RejectionRegion els_rejection_region(int nt, int nc, double margin, double a2) {
  const auto grid = table_grid_cached(nt, nc, -margin);
  auto pval = [&](int i, int j) {
    const double pt = grid->mle_p_test(i, j);
    const double pc = std::min(1.0, pt + margin);
    return tail_mass_at_least(*grid, grid->z(i, j) - kScoreTieBand, pt, pc);
  };
  if (!grid->rows_monotone())
    return region_from_predicate(nt, nc, [&](int i, int j) { return pval(i, j) <= a2; });

  RejectionRegion region;
  region.n_test = nt;
  region.n_control = nc;
  region.reject_j_hi.assign(nt + 1, -1);
  for (int i = 0; i <= nt; ++i) {
    // p(i, j) grows in j through the alpha/2 crossing; binary-search the
    // boundary, then spot-check off-boundary cells and fall back to a full
    // row scan when the shortcut is contradicted.
    if (pval(i, 0) > a2) {
      region.reject_j_hi[i] = -1;
      continue;
    }
    int lo = 0, hi = nc;
    while (lo < hi) {
      const int mid = lo + (hi - lo + 1) / 2;
      if (pval(i, mid) <= a2)
        lo = mid;
      else
        hi = mid - 1;
    }
    bool consistent = true;
    for (int probe : {lo / 2, lo / 4}) {
      if (probe < lo && pval(i, probe) > a2) { consistent = false; break; }
    }
    if (consistent && lo < nc) {
      for (int probe : {lo + 1 + (nc - lo - 1) / 2, nc}) {
        if (probe > lo && pval(i, probe) <= a2) { consistent = false; break; }
      }
    }
    if (consistent) {
      region.reject_j_hi[i] = lo;
    } else {
      int run = -1;
      for (int j = 0; j <= nc; ++j) {
        if (pval(i, j) > a2) continue;
        if (j == run + 1)
          run = j;
        else
          region.extra_cells.emplace_back(i, j);
      }
      region.reject_j_hi[i] = run;
    }
  }
  return region;
}

}  // namespace detail

// Variance convention for the ALS rejection cutoff. The published operating
// characteristics carry the small-sample correction N/(N-1) in the score
// denominator (the Miettinen-Nurminen form), so that is the default here;
// `plain` matches als_pvalue exactly. The correction rescales every score of
// a shape by the same factor, so the exact-method rankings never see it.
enum class AlsRegionScale { mn_corrected, plain };

// Rejection region of the one-sided level-alpha test at the given margin.
// Interval-backed methods reject when the lower confidence bound clears
// -margin; ALS rejects on the score exceeding the normal quantile; ELS and ES
// reject on their exact p-values.
inline RejectionRegion rejection_region(Method method, int n_test, int n_control, double margin,
                                        double one_sided_alpha,
                                        AlsRegionScale als_scale = AlsRegionScale::mn_corrected) {
  if (n_test < 1 || n_control < 1)
    throw std::invalid_argument("rejection_region: arm sizes must be >= 1");
  validate_margin(margin);
  if (one_sided_alpha <= 0.0) {
    RejectionRegion empty;
    empty.n_test = n_test;
    empty.n_control = n_control;
    empty.reject_j_hi.assign(n_test + 1, -1);
    return empty;
  }
  const double level = 1.0 - 2.0 * one_sided_alpha;
  switch (method) {
    case Method::wald:
    case Method::agresti_caffo:
    case Method::hauck_anderson:
    case Method::newcombe:
    case Method::newcombe_cc: {
      const auto scan = detail::make_lower_bound_scan(method, n_test, n_control, level);
      return detail::region_from_predicate(
          n_test, n_control, [&](int i, int j) { return scan.lower(i, j) > -margin; });
    }
    case Method::fm: {
      const auto grid = table_grid_cached(n_test, n_control, -margin);
      const double z = norm_quantile(1.0 - one_sided_alpha);
      return detail::region_from_predicate(n_test, n_control, [&](int i, int j) {
        const double pt = grid->mle_p_test(i, j);
        const double pc = pt + margin;
        const double se = std::sqrt(pt * (1.0 - pt) / n_test + pc * (1.0 - pc) / n_control);
        const double d = static_cast<double>(i) / n_test - static_cast<double>(j) / n_control;
        return d - z * se > -margin;
      });
    }
    case Method::als: {
      const auto grid = table_grid_cached(n_test, n_control, -margin);
      double z_crit = norm_quantile(1.0 - one_sided_alpha);
      if (als_scale == AlsRegionScale::mn_corrected)
        z_crit *= std::sqrt(static_cast<double>(n_test + n_control) /
                            (n_test + n_control - 1));
      if (grid->rows_monotone()) {
        RejectionRegion region;
        region.n_test = n_test;
        region.n_control = n_control;
        region.reject_j_hi.resize(n_test + 1);
        for (int i = 0; i <= n_test; ++i)
          region.reject_j_hi[i] = grid->last_j_with_z_at_least(i, z_crit);
        return region;
      }
      return detail::region_from_predicate(
          n_test, n_control, [&](int i, int j) { return grid->z(i, j) >= z_crit; });
    }
    case Method::els:
      return detail::els_rejection_region(n_test, n_control, margin, one_sided_alpha);
    case Method::es: {
      // per-cell maximized p-values; meant for small shapes
      return detail::region_from_predicate(n_test, n_control, [&](int i, int j) {
        const TwoArmData cell{{i, n_test}, {j, n_control}};
        return es_pvalue(cell, margin) <= one_sided_alpha;
      });
    }
  }
  throw std::invalid_argument("rejection_region: unknown method");
}

enum class Pruning { on, off };

// Probability mass of a rejection region under independent binomial arms.
inline double region_probability(const RejectionRegion& region, double p_test, double p_control,
                                 Pruning pruning = Pruning::on) {
  const int nt = region.n_test;
  const int nc = region.n_control;
  const auto row_t = binom_pmf_row(nt, p_test);
  const auto row_c = binom_pmf_row(nc, p_control);
  const auto pre_c = prefix_sums(row_c);
  IndexWindow w{0, nt, 0.0};
  if (pruning == Pruning::on) w = pmf_window(row_t, nt, p_test, 1e-12);
  KahanSum acc;
  for (int i = w.lo; i <= w.hi; ++i) {
    const int j_hi = region.reject_j_hi[i];
    if (j_hi >= 0) acc.add(row_t[i] * pre_c[j_hi]);
  }
  for (const auto& [i, j] : region.extra_cells)
    if (i >= w.lo && i <= w.hi) acc.add(row_t[i] * row_c[j]);
  return acc.value();
}

struct OcResult {
  OcScenario scenario;
  Method method = Method::els;
  double type1_error = 0.0;
};

// Exact type I error at the boundary null p_test = p_control - margin.
inline double exact_type1(Method method, const OcScenario& s, Pruning pruning = Pruning::on,
                          AlsRegionScale als_scale = AlsRegionScale::mn_corrected) {
  validate(s);
  const auto region =
      rejection_region(method, s.n_test, s.n_control, s.margin, s.one_sided_alpha, als_scale);
  return region_probability(region, s.p_control - s.margin, s.p_control, pruning);
}

// Exact power: the same region summed under an arbitrary alternative.
inline double exact_power(Method method, int n_test, int n_control, double margin,
                          double one_sided_alpha, double p_test, double p_control,
                          Pruning pruning = Pruning::on,
                          AlsRegionScale als_scale = AlsRegionScale::mn_corrected) {
  if (!(p_test >= 0.0 && p_test <= 1.0) || !(p_control >= 0.0 && p_control <= 1.0))
    throw std::invalid_argument("exact_power: probabilities must be in [0, 1]");
  const auto region =
      rejection_region(method, n_test, n_control, margin, one_sided_alpha, als_scale);
  return region_probability(region, p_test, p_control, pruning);
}

// Design inputs for a non-inferiority sample size.
struct SampleSizeSpec {
  double margin = 0.10;
  int ratio_test = 1;
  int ratio_control = 1;
  double p_control = 0.5;
  double p_test = 0.5;
  double power = 0.80;
  double one_sided_alpha = 0.025;
};

struct SampleSize {
  int n_test = 0;
  int n_control = 0;
};

inline void validate(const SampleSizeSpec& s) {
  validate_margin(s.margin);
  if (s.ratio_test < 1 || s.ratio_control < 1)
    throw std::invalid_argument("sample size: allocation ratio parts must be >= 1");
  if (!(s.p_control >= 0.0 && s.p_control <= 1.0) || !(s.p_test >= 0.0 && s.p_test <= 1.0))
    throw std::invalid_argument("sample size: proportions must be in [0, 1]");
  if (!(s.power > 0.0 && s.power < 1.0))
    throw std::invalid_argument("sample size: power must be in (0, 1)");
  if (!(s.one_sided_alpha > 0.0 && s.one_sided_alpha < 0.5))
    throw std::invalid_argument("sample size: one-sided alpha must be in (0, 0.5)");
  if (!(s.p_test - s.p_control > -s.margin))
    throw std::invalid_argument("sample size: alternative must satisfy p_test - p_control > -margin");
}

// Farrington-Manning approximate sample size: null variance at the restricted
// MLE of the design proportions, alternative variance at the design
// proportions themselves, both per unit of N_T.
inline SampleSize fm_sample_size(const SampleSizeSpec& s) {
  validate(s);
  const double r = static_cast<double>(s.ratio_control) / s.ratio_test;
  const double z_a = norm_quantile(1.0 - s.one_sided_alpha);
  const double z_b = norm_quantile(s.power);
  const ConstrainedMle mle = restricted_mle_weighted(s.p_test, 1.0, s.p_control, r, -s.margin);
  const double var_null =
      mle.p_test * (1.0 - mle.p_test) + mle.p_control * (1.0 - mle.p_control) / r;
  const double var_alt = s.p_test * (1.0 - s.p_test) + s.p_control * (1.0 - s.p_control) / r;
  const double effect = s.p_test - s.p_control + s.margin;
  const double raw = std::pow(z_a * std::sqrt(var_null) + z_b * std::sqrt(var_alt), 2) /
                     (effect * effect);
  SampleSize out;
  out.n_test = static_cast<int>(std::ceil(raw - 1e-9));
  out.n_control = static_cast<int>(std::ceil(out.n_test * r - 1e-9));
  return out;
}

// One row of an operating-characteristic sweep. Explicit sizes win when
// given; otherwise the row is sized by fm_sample_size at p_test = p_control.
struct SweepRow {
  double margin = 0.10;
  int ratio_test = 1;
  int ratio_control = 1;
  double p_control = 0.5;
  double power = 0.0;
  double alpha = 0.05;  // two-sided
  int n_test = 0;
  int n_control = 0;
};

struct SweepRowResult {
  SweepRow row;
  int n_test = 0;
  int n_control = 0;
  bool skipped = false;
  std::string note;
  std::vector<double> type1;  // per method, probability scale
};

// Distribution of type I errors across a sweep, per method, in percentage
// points against the per-row nominal level.
struct MethodSummary {
  int count = 0;
  double pct_above_nominal = 0.0;
  double mean_distance = 0.0;
  double min_value = 0.0;
  double max_value = 0.0;
  double range = 0.0;
  std::optional<double> mean_at_or_below;
  std::optional<double> mean_above;
};

struct SweepResult {
  std::vector<Method> methods;
  std::vector<SweepRowResult> rows;
  std::vector<MethodSummary> summary;
  int skipped_rows = 0;
};

inline SweepResult table_sweep(const std::vector<SweepRow>& rows,
                               const std::vector<Method>& methods, int threads = 1) {
  if (methods.empty()) throw std::invalid_argument("table_sweep: method set must not be empty");
  SweepResult result;
  result.methods = methods;
  result.rows.resize(rows.size());

  parallel_for(static_cast<int>(rows.size()), threads, [&](int k) {
    SweepRowResult& out = result.rows[k];
    out.row = rows[k];
    const SweepRow& row = rows[k];
    try {
      int nt = row.n_test, nc = row.n_control;
      if (nt <= 0 || nc <= 0) {
        const SampleSizeSpec spec{row.margin, row.ratio_test, row.ratio_control, row.p_control,
                                  row.p_control, row.power, 0.5 * row.alpha};
        const SampleSize n = fm_sample_size(spec);
        nt = n.n_test;
        nc = n.n_control;
      }
      out.n_test = nt;
      out.n_control = nc;
      const OcScenario scenario{nt, nc, row.margin, row.p_control, 0.5 * row.alpha};
      validate(scenario);
      out.type1.reserve(methods.size());
      for (Method m : methods) out.type1.push_back(exact_type1(m, scenario));
    } catch (const std::exception& e) {
      out.skipped = true;
      out.note = e.what();
      out.type1.clear();
    }
  });

  for (const auto& r : result.rows) result.skipped_rows += r.skipped ? 1 : 0;

  for (size_t m = 0; m < methods.size(); ++m) {
    MethodSummary s;
    KahanSum dist, below, above;
    int n_below = 0, n_above = 0;
    for (const auto& r : result.rows) {
      if (r.skipped) continue;
      const double nominal = 100.0 * 0.5 * r.row.alpha;
      const double value = 100.0 * r.type1[m];
      if (s.count == 0) {
        s.min_value = s.max_value = value;
      } else {
        s.min_value = std::min(s.min_value, value);
        s.max_value = std::max(s.max_value, value);
      }
      ++s.count;
      dist.add(std::fabs(value - nominal));
      if (value > nominal) {
        ++n_above;
        above.add(value);
      } else {
        ++n_below;
        below.add(value);
      }
    }
    if (s.count > 0) {
      s.pct_above_nominal = 100.0 * n_above / s.count;
      s.mean_distance = dist.value() / s.count;
      s.range = s.max_value - s.min_value;
      if (n_below > 0) s.mean_at_or_below = below.value() / n_below;
      if (n_above > 0) s.mean_above = above.value() / n_above;
    }
    result.summary.push_back(s);
  }
  return result;
}

}  // namespace elscore
