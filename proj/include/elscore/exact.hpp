#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "elscore/asymptotic.hpp"
#include "elscore/binomial.hpp"
#include "elscore/mle.hpp"
#include "elscore/types.hpp"

namespace elscore {

// Scores within this absolute band are treated as tied when a tail set is
// formed. Outcomes whose scores are equal in exact arithmetic (zero-numerator
// diagonals, symmetric configurations) come out of the constrained-MLE solve
// with ~1e-10 of noise and must land on the same side of the cut.
inline constexpr double kScoreTieBand = 1e-9;

// Score statistic and constrained MLE for every outcome of a fixed shape at a
// fixed constraint. Rows are checked once for the z-monotone-in-j property
// that the tail-sum and boundary-search shortcuts rely on; consumers fall back
// to explicit scans when it fails.
class TableGrid {
 public:
  TableGrid(int n_test, int n_control, double delta)
      : nt_(n_test), nc_(n_control), delta_(delta) {
    if (nt_ < 1 || nc_ < 1) throw std::invalid_argument("TableGrid: arm sizes must be >= 1");
    if (!(delta > -1.0 && delta < 1.0))
      throw std::invalid_argument("TableGrid: delta must be in (-1, 1)");
    const size_t cells = static_cast<size_t>(nt_ + 1) * (nc_ + 1);
    z_.resize(cells);
    mle_.resize(cells);
    for (int i = 0; i <= nt_; ++i) {
      const double pt_hat = static_cast<double>(i) / nt_;
      for (int j = 0; j <= nc_; ++j) {
        const double p = detail::constrained_mle_p_test(i, nt_, j, nc_, delta_);
        const double var = p * (1.0 - p) / nt_ + (p - delta_) * (1.0 - p + delta_) / nc_;
        const double num = pt_hat - static_cast<double>(j) / nc_ - delta_;
        double zval;
        if (var > 0.0)
          zval = num / std::sqrt(var);
        else
          zval = num > 0.0 ? std::numeric_limits<double>::infinity()
                           : (num < 0.0 ? -std::numeric_limits<double>::infinity() : 0.0);
        z_[idx(i, j)] = zval;
        mle_[idx(i, j)] = p;
      }
    }
    rows_monotone_ = true;
    for (int i = 0; i <= nt_ && rows_monotone_; ++i)
      for (int j = 0; j < nc_; ++j)
        if (z_[idx(i, j + 1)] > z_[idx(i, j)]) { rows_monotone_ = false; break; }
    order_.resize(cells);
    std::iota(order_.begin(), order_.end(), 0);
    std::sort(order_.begin(), order_.end(), [this](int a, int b) {
      if (z_[a] != z_[b]) return z_[a] > z_[b];
      return a < b;
    });
  }

  int n_test() const { return nt_; }
  int n_control() const { return nc_; }
  double delta() const { return delta_; }
  bool rows_monotone() const { return rows_monotone_; }

  double z(int i, int j) const { return z_[idx(i, j)]; }
  double mle_p_test(int i, int j) const { return mle_[idx(i, j)]; }

  // Largest j in row i with z >= t; -1 when the row has none.
  // Requires rows_monotone().
  int last_j_with_z_at_least(int i, double t) const {
    int lo = 0, hi = nc_;
    if (z_[idx(i, 0)] < t) return -1;
    while (lo < hi) {
      const int mid = lo + (hi - lo + 1) / 2;
      if (z_[idx(i, mid)] >= t)
        lo = mid;
      else
        hi = mid - 1;
    }
    return lo;
  }

  // Smallest j in row i with z <= t; n_control + 1 when the row has none.
  // Requires rows_monotone().
  int first_j_with_z_at_most(int i, double t) const {
    int lo = 0, hi = nc_;
    if (z_[idx(i, nc_)] > t) return nc_ + 1;
    while (lo < hi) {
      const int mid = lo + (hi - lo) / 2;
      if (z_[idx(i, mid)] <= t)
        hi = mid;
      else
        lo = mid + 1;
    }
    return lo;
  }

  // Cell indices i * (n_control + 1) + j ordered by descending z, index
  // ascending within exact ties.
  const std::vector<int>& descending_order() const { return order_; }

  size_t idx(int i, int j) const { return static_cast<size_t>(i) * (nc_ + 1) + j; }

 private:
  int nt_, nc_;
  double delta_;
  std::vector<double> z_;
  std::vector<double> mle_;
  std::vector<int> order_;
  bool rows_monotone_ = true;
};

namespace detail {

struct GridKey {
  int nt;
  int nc;
  std::uint64_t delta_bits;
  friend bool operator<(const GridKey& a, const GridKey& b) {
    if (a.nt != b.nt) return a.nt < b.nt;
    if (a.nc != b.nc) return a.nc < b.nc;
    return a.delta_bits < b.delta_bits;
  }
};

// Shared cache of grids keyed by (shape, constraint). Insertion is idempotent:
// a racing builder hands back whichever grid landed first. Bounded so sweeps
// over many shapes do not pile up memory.
class GridCache {
 public:
  static GridCache& instance() {
    static GridCache cache;
    return cache;
  }

  std::shared_ptr<const TableGrid> get(int nt, int nc, double delta) {
    const GridKey key{nt, nc, std::bit_cast<std::uint64_t>(delta)};
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = entries_.find(key);
      if (it != entries_.end()) {
        it->second.age = ++clock_;
        return it->second.grid;
      }
    }
    auto grid = std::make_shared<const TableGrid>(nt, nc, delta);
    std::lock_guard<std::mutex> lock(mutex_);
    auto [it, inserted] = entries_.try_emplace(key, Entry{grid, ++clock_});
    if (!inserted) it->second.age = ++clock_;
    while (entries_.size() > kCapacity) {
      auto oldest = entries_.begin();
      for (auto jt = entries_.begin(); jt != entries_.end(); ++jt)
        if (jt->second.age < oldest->second.age) oldest = jt;
      entries_.erase(oldest);
    }
    return it->second.grid;
  }

 private:
  struct Entry {
    std::shared_ptr<const TableGrid> grid;
    std::uint64_t age = 0;
  };
  static constexpr size_t kCapacity = 16;
  std::mutex mutex_;
  std::map<GridKey, Entry> entries_;
  std::uint64_t clock_ = 0;
};

}  // namespace detail

inline std::shared_ptr<const TableGrid> table_grid_cached(int n_test, int n_control,
                                                          double delta) {
  return detail::GridCache::instance().get(n_test, n_control, delta);
}

namespace detail {

// Sum of the joint pmf over { (i, j) : z(i, j) >= threshold } at arm
// probabilities (pt, pc). The test-arm index runs over a window whose omitted
// mass is certified below 5e-13; the control margin is folded in exactly
// through prefix sums.
inline double tail_mass_at_least(const TableGrid& g, double threshold, double pt, double pc) {
  const int nt = g.n_test();
  const int nc = g.n_control();
  const auto row_t = binom_pmf_row(nt, pt);
  const auto row_c = binom_pmf_row(nc, pc);
  const auto pre_c = prefix_sums(row_c);
  const auto w = pmf_window(row_t, nt, pt, 0.5e-12);
  KahanSum acc;
  if (g.rows_monotone()) {
    for (int i = w.lo; i <= w.hi; ++i) {
      const int j_hi = g.last_j_with_z_at_least(i, threshold);
      if (j_hi >= 0) acc.add(row_t[i] * pre_c[j_hi]);
    }
  } else {
    for (int i = w.lo; i <= w.hi; ++i)
      for (int j = 0; j <= nc; ++j)
        if (g.z(i, j) >= threshold) acc.add(row_t[i] * row_c[j]);
  }
  return acc.value();
}

inline double tail_mass_at_most(const TableGrid& g, double threshold, double pt, double pc) {
  const int nt = g.n_test();
  const int nc = g.n_control();
  const auto row_t = binom_pmf_row(nt, pt);
  const auto row_c = binom_pmf_row(nc, pc);
  const auto pre_c = prefix_sums(row_c);
  const auto w = pmf_window(row_t, nt, pt, 0.5e-12);
  KahanSum acc;
  if (g.rows_monotone()) {
    for (int i = w.lo; i <= w.hi; ++i) {
      const int j_lo = g.first_j_with_z_at_most(i, threshold);
      if (j_lo <= nc) {
        const double upper_mass = pre_c[nc] - (j_lo > 0 ? pre_c[j_lo - 1] : 0.0);
        acc.add(row_t[i] * upper_mass);
      }
    }
  } else {
    for (int i = w.lo; i <= w.hi; ++i)
      for (int j = 0; j <= nc; ++j)
        if (g.z(i, j) <= threshold) acc.add(row_t[i] * row_c[j]);
  }
  return acc.value();
}

}  // namespace detail

// Exact likelihood score p-value: outcomes at least as extreme as the
// observed table (by the score at the non-inferiority constraint), summed
// under the joint pmf at the restricted MLE.
inline double els_pvalue(const TwoArmData& data, double margin) {
  validate(data);
  validate_margin(margin);
  const auto grid = table_grid_cached(data.test.trials, data.control.trials, -margin);
  const ConstrainedMle mle = restricted_mle(data, DifferenceConstraint{-margin});
  const double z_obs = grid->z(data.test.successes, data.control.successes);
  const double p =
      detail::tail_mass_at_least(*grid, z_obs - kScoreTieBand, mle.p_test, mle.p_control);
  return std::min(p, 1.0);
}

// Exact score p-value: the same tail, maximized over the nuisance domain
// [0, 1 - margin] on an equally spaced grid. The restricted MLE is always
// included as a grid point, so es_pvalue >= els_pvalue holds exactly.
inline double es_pvalue(const TwoArmData& data, double margin, int grid_points = 1000) {
  validate(data);
  validate_margin(margin);
  if (grid_points < 2) throw std::invalid_argument("es_pvalue: grid_points must be >= 2");
  const int nt = data.test.trials;
  const int nc = data.control.trials;
  const auto grid = table_grid_cached(nt, nc, -margin);
  const double threshold = grid->z(data.test.successes, data.control.successes) - kScoreTieBand;

  std::vector<int> j_hi;
  if (grid->rows_monotone()) {
    j_hi.resize(nt + 1);
    for (int i = 0; i <= nt; ++i) j_hi[i] = grid->last_j_with_z_at_least(i, threshold);
  }
  auto tail_at = [&](double p) {
    const double pc = std::min(1.0, p + margin);
    if (j_hi.empty()) return detail::tail_mass_at_least(*grid, threshold, p, pc);
    const auto row_t = binom_pmf_row(nt, p);
    const auto pre_c = prefix_sums(binom_pmf_row(nc, pc));
    const auto w = pmf_window(row_t, nt, p, 0.5e-12);
    KahanSum acc;
    for (int i = w.lo; i <= w.hi; ++i)
      if (j_hi[i] >= 0) acc.add(row_t[i] * pre_c[j_hi[i]]);
    return acc.value();
  };

  double best = tail_at(restricted_mle(data, DifferenceConstraint{-margin}).p_test);
  const double domain_hi = 1.0 - margin;
  for (int k = 0; k < grid_points; ++k)
    best = std::max(best, tail_at(domain_hi * k / (grid_points - 1)));
  return std::min(best, 1.0);
}

// Whether the nuisance estimate is re-solved at every candidate difference
// while inverting the exact test, or frozen at the value from the asymptotic
// score bound (which makes the inverted tail probability a polynomial in the
// difference). Re-estimation reproduces the reference analyses and is the
// default.
enum class NuisancePolicy { reestimate, fixed };

struct ExactCiDiagnostics {
  double als_lower = 0.0;
  double als_upper = 0.0;
  bool lower_at_limit = false;
  bool upper_at_limit = false;
};

namespace detail {

// Root of g(delta) = target inside (-1, 1), seeded near the asymptotic bound.
// The bracket is grown geometrically from the seed until the sign changes,
// then bisected. `increasing` only steers which direction to grow first.
template <class G>
double solve_ci_bound(G&& g, double target, double seed, bool increasing, bool& at_limit,
                      double tol = 1e-9, int max_iter = 200) {
  constexpr double kEdge = 1.0 - 1e-9;
  at_limit = false;
  double b = std::clamp(seed, -kEdge, kEdge);
  double fb = g(b) - target;
  if (fb == 0.0) return b;

  const bool go_down = increasing ? (fb > 0.0) : (fb < 0.0);
  double lo, hi, flo;
  double step = 1.0 / 1024.0;
  for (;;) {
    double probe = go_down ? b - step : b + step;
    bool clipped = false;
    if (probe <= -kEdge) { probe = -kEdge; clipped = true; }
    if (probe >= kEdge) { probe = kEdge; clipped = true; }
    const double fp = g(probe) - target;
    if ((fp > 0.0) != (fb > 0.0) || fp == 0.0) {
      lo = std::min(b, probe);
      hi = std::max(b, probe);
      flo = lo == b ? fb : fp;
      break;
    }
    if (clipped) {
      at_limit = true;
      return go_down ? -1.0 : 1.0;
    }
    b = probe;
    fb = fp;
    step *= 2.0;
  }

  int it = 0;
  while (hi - lo > tol) {
    if (++it > max_iter)
      throw std::runtime_error("confidence bound bisection did not converge");
    const double mid = 0.5 * (lo + hi);
    const double fm = g(mid) - target;
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Test-based confidence interval for the exact likelihood score method. The
// rejection sets are frozen at the asymptotic score bounds; each bound then
// solves tail-probability = alpha/2 over the candidate difference.
inline ConfidenceInterval els_confidence_interval(const TwoArmData& data, double level,
                                                  NuisancePolicy policy = NuisancePolicy::reestimate,
                                                  ExactCiDiagnostics* diagnostics = nullptr) {
  validate(data);
  validate_level(level);
  const double target = 0.5 * (1.0 - level);
  const ConfidenceInterval als = als_ci(data, level);
  const int nt = data.test.trials, nc = data.control.trials;
  const int xt = data.test.successes, xc = data.control.successes;

  ExactCiDiagnostics local;
  ExactCiDiagnostics& diag = diagnostics ? *diagnostics : local;
  diag = ExactCiDiagnostics{};
  diag.als_lower = als.lower;
  diag.als_upper = als.upper;

  constexpr double kSeedEdge = 1.0 - 1e-9;
  const double seed_lo = std::clamp(als.lower, -kSeedEdge, kSeedEdge);
  const double seed_hi = std::clamp(als.upper, -kSeedEdge, kSeedEdge);

  const auto grid_lo = table_grid_cached(nt, nc, seed_lo);
  const auto grid_hi = table_grid_cached(nt, nc, seed_hi);
  const double cut_lo = grid_lo->z(xt, xc) - kScoreTieBand;
  const double cut_hi = grid_hi->z(xt, xc) + kScoreTieBand;
  const double frozen_lo = grid_lo->mle_p_test(xt, xc);
  const double frozen_hi = grid_hi->mle_p_test(xt, xc);

  auto nuisance_at = [&](double delta, double frozen) {
    if (policy == NuisancePolicy::reestimate)
      return detail::constrained_mle_p_test(xt, nt, xc, nc, delta);
    return frozen;
  };
  auto g_lower = [&](double delta) {
    const double pt = nuisance_at(delta, frozen_lo);
    const double pc = std::clamp(pt - delta, 0.0, 1.0);
    return detail::tail_mass_at_least(*grid_lo, cut_lo, pt, pc);
  };
  auto g_upper = [&](double delta) {
    const double pt = nuisance_at(delta, frozen_hi);
    const double pc = std::clamp(pt - delta, 0.0, 1.0);
    return detail::tail_mass_at_most(*grid_hi, cut_hi, pt, pc);
  };

  double lower = detail::solve_ci_bound(g_lower, target, seed_lo, /*increasing=*/true,
                                        diag.lower_at_limit);
  double upper = detail::solve_ci_bound(g_upper, target, seed_hi, /*increasing=*/false,
                                        diag.upper_at_limit);
  if (lower > upper) std::swap(lower, upper);
  return ConfidenceInterval{lower, upper, level};
}

}  // namespace elscore
