#pragma once

#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "elscore/types.hpp"

namespace elscore {

namespace detail {

// Process-wide ln(n!) table. Entries are lgamma evaluated in extended
// precision, each independently accurate to a few ulp, so no rounding error
// accumulates along the table. Storage is a fixed array of block pointers:
// published blocks never move, and the size counter is released only after
// the blocks it covers are visible, which makes reads safe without a lock.
class LogFactorialTable {
 public:
  static constexpr int kBlockBits = 12;
  static constexpr int kBlockSize = 1 << kBlockBits;
  static constexpr int kMaxBlocks = 4096;

  long double operator()(int n) {
    if (n >= size_.load(std::memory_order_acquire)) grow(n);
    return blocks_[n >> kBlockBits].load(std::memory_order_relaxed)[n & (kBlockSize - 1)];
  }

  static LogFactorialTable& instance() {
    static LogFactorialTable table;
    return table;
  }

 private:
  void grow(int n) {
    std::lock_guard<std::mutex> lock(grow_mutex_);
    int have = size_.load(std::memory_order_relaxed);
    if (n < have) return;
    const int want_blocks = (n >> kBlockBits) + 1;
    if (want_blocks > kMaxBlocks)
      throw std::invalid_argument("log_factorial: n out of supported range");
    for (int b = have >> kBlockBits; b < want_blocks; ++b) {
      if (blocks_[b].load(std::memory_order_relaxed) != nullptr) continue;
      auto* block = new long double[kBlockSize];
      for (int k = 0; k < kBlockSize; ++k) {
        const long double arg = static_cast<long double>(b) * kBlockSize + k + 1.0L;
        block[k] = std::lgamma(arg);
      }
      blocks_[b].store(block, std::memory_order_release);
    }
    size_.store(want_blocks << kBlockBits, std::memory_order_release);
  }

  std::array<std::atomic<const long double*>, kMaxBlocks> blocks_{};
  std::atomic<int> size_{0};
  std::mutex grow_mutex_;
};

}  // namespace detail

inline long double log_factorial(int n) {
  if (n < 0) throw std::invalid_argument("log_factorial: n must be >= 0");
  return detail::LogFactorialTable::instance()(n);
}

inline double log_binom_coef(int n, int k) {
  if (k < 0 || n < 0 || k > n) throw std::invalid_argument("log_binom_coef: need 0 <= k <= n");
  return static_cast<double>(log_factorial(n) - log_factorial(k) - log_factorial(n - k));
}

namespace detail {

// ln Binomial(n, p) pmf at k, in extended precision. Conventions 0^0 = 1 and
// ln 0 = -inf, so boundary p values are legal parameters.
inline long double binom_log_pmf_ld(int k, int n, double p) {
  const long double pl = p;
  long double acc = log_factorial(n) - log_factorial(k) - log_factorial(n - k);
  if (k > 0) {
    if (p == 0.0) return -std::numeric_limits<long double>::infinity();
    acc += k * std::log(pl);
  }
  if (n - k > 0) {
    if (p == 1.0) return -std::numeric_limits<long double>::infinity();
    acc += (n - k) * std::log(1.0L - pl);
  }
  return acc;
}

}  // namespace detail

// ln of the joint probability of observing (i, j) from independent
// Binomial(n_test, p_test) and Binomial(n_control, p_control) draws.
inline double joint_log_pmf(int i, int j, int n_test, int n_control, double p_test,
                            double p_control) {
  if (n_test < 1 || n_control < 1)
    throw std::invalid_argument("joint_log_pmf: arm sizes must be >= 1");
  if (i < 0 || i > n_test || j < 0 || j > n_control)
    throw std::invalid_argument("joint_log_pmf: outcome outside the sample space");
  if (!(p_test >= 0.0 && p_test <= 1.0) || !(p_control >= 0.0 && p_control <= 1.0))
    throw std::invalid_argument("joint_log_pmf: probabilities must be in [0, 1]");
  return static_cast<double>(detail::binom_log_pmf_ld(i, n_test, p_test) +
                             detail::binom_log_pmf_ld(j, n_control, p_control));
}

// Full Binomial(n, p) pmf vector. Anchored in log space at the mode, filled
// outward by the multiplicative recurrence, and re-anchored every 64 steps so
// the relative drift stays near machine precision across the whole row.
inline std::vector<double> binom_pmf_row(int n, double p) {
  if (n < 0) throw std::invalid_argument("binom_pmf_row: n must be >= 0");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("binom_pmf_row: p must be in [0, 1]");
  std::vector<double> row(static_cast<size_t>(n) + 1, 0.0);
  if (p == 0.0) { row[0] = 1.0; return row; }
  if (p == 1.0) { row[n] = 1.0; return row; }

  const double q = 1.0 - p;
  const double ratio = p / q;
  int mode = static_cast<int>((n + 1) * p);
  if (mode > n) mode = n;

  constexpr int kRefresh = 64;
  row[mode] = static_cast<double>(std::exp(detail::binom_log_pmf_ld(mode, n, p)));
  for (int k = mode + 1; k <= n; ++k) {
    if ((k - mode) % kRefresh == 0)
      row[k] = static_cast<double>(std::exp(detail::binom_log_pmf_ld(k, n, p)));
    else
      row[k] = row[k - 1] * ratio * (n - k + 1) / k;
  }
  for (int k = mode - 1; k >= 0; --k) {
    if ((mode - k) % kRefresh == 0)
      row[k] = static_cast<double>(std::exp(detail::binom_log_pmf_ld(k, n, p)));
    else
      row[k] = row[k + 1] * (k + 1) / (ratio * (n - k));
  }
  return row;
}

// Compensated (Kahan) accumulator for long streams of pmf terms.
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  double value() const { return sum; }
};

// Inclusive prefix sums with compensated accumulation.
inline std::vector<double> prefix_sums(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  KahanSum acc;
  for (size_t k = 0; k < v.size(); ++k) {
    acc.add(v[k]);
    out[k] = acc.value();
  }
  return out;
}

// Index window [lo, hi] of a pmf row whose complement carries certified mass
// at most max_omitted. Starts from a +/-10 standard deviation box around the
// mean and widens until the certificate holds.
struct IndexWindow {
  int lo = 0;
  int hi = -1;
  double omitted = 0.0;
};

inline IndexWindow pmf_window(const std::vector<double>& pmf, double mean, double sd,
                              double max_omitted = 1e-12) {
  const int n = static_cast<int>(pmf.size()) - 1;
  auto omitted_mass = [&](int lo, int hi) {
    KahanSum acc;
    for (int k = 0; k < lo; ++k) acc.add(pmf[k]);
    for (int k = hi + 1; k <= n; ++k) acc.add(pmf[k]);
    return acc.value();
  };
  double half = 10.0 * sd;
  IndexWindow w;
  for (;;) {
    w.lo = std::max(0, static_cast<int>(std::floor(mean - half)));
    w.hi = std::min(n, static_cast<int>(std::ceil(mean + half)));
    w.omitted = omitted_mass(w.lo, w.hi);
    if (w.omitted <= max_omitted || (w.lo == 0 && w.hi == n)) return w;
    half = half * 2.0 + 1.0;
  }
}

inline IndexWindow pmf_window(const std::vector<double>& pmf, int n, double p,
                              double max_omitted = 1e-12) {
  return pmf_window(pmf, n * p, std::sqrt(n * p * (1.0 - p)), max_omitted);
}

}  // namespace elscore
