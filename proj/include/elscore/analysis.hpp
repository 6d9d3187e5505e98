#pragma once

#include <chrono>
#include <optional>
#include <vector>

#include "elscore/asymptotic.hpp"
#include "elscore/exact.hpp"
#include "elscore/types.hpp"

namespace elscore {

struct AnalysisRequest {
  TwoArmData data;
  NoninfSpec spec;
  std::vector<Method> methods;
  bool allow_large_es = false;
  int es_grid_points = 1000;
};

struct MethodResult {
  Method method = Method::wald;
  std::optional<ConfidenceInterval> interval;
  std::optional<double> p_value;
  std::optional<bool> reject_by_interval;
  std::optional<bool> reject_by_pvalue;
  double seconds = 0.0;
  ExactCiDiagnostics diagnostics;
};

// ES over large shapes enumerates a substantial nuisance grid; callers must
// opt in explicitly past this arm size.
inline constexpr int kEsSizeGate = 150;

// Per-method non-inferiority analysis of one observed table. Interval methods
// decide by lower bound > -margin; p-value methods by p <= alpha/2; ELS and
// ALS report both.
inline std::vector<MethodResult> analyze(const AnalysisRequest& req) {
  validate(req.data);
  validate(req.spec);
  if (req.methods.empty()) throw std::invalid_argument("analysis: method set must not be empty");

  const double level = req.spec.two_sided_level;
  const double margin = req.spec.margin;
  const double a2 = req.spec.one_sided_alpha();

  std::vector<MethodResult> results;
  results.reserve(req.methods.size());
  for (Method m : req.methods) {
    MethodResult r;
    r.method = m;
    const auto start = std::chrono::steady_clock::now();
    switch (m) {
      case Method::wald: r.interval = wald_ci(req.data, level); break;
      case Method::agresti_caffo: r.interval = agresti_caffo_ci(req.data, level); break;
      case Method::hauck_anderson: r.interval = hauck_anderson_ci(req.data, level); break;
      case Method::newcombe: r.interval = newcombe_ci(req.data, level); break;
      case Method::newcombe_cc: r.interval = newcombe_cc_ci(req.data, level); break;
      case Method::fm: r.interval = fm_ci(req.data, margin, level); break;
      case Method::als:
        r.interval = als_ci(req.data, level);
        r.p_value = als_pvalue(req.data, margin);
        break;
      case Method::els:
        r.p_value = els_pvalue(req.data, margin);
        r.interval = els_confidence_interval(req.data, level, NuisancePolicy::reestimate,
                                             &r.diagnostics);
        break;
      case Method::es: {
        const int min_n = std::min(req.data.test.trials, req.data.control.trials);
        if (min_n > kEsSizeGate && !req.allow_large_es)
          throw std::invalid_argument(
              "es: smaller arm exceeds " + std::to_string(kEsSizeGate) +
              " subjects; pass the large-sample override to run it anyway");
        r.p_value = es_pvalue(req.data, margin, req.es_grid_points);
        break;
      }
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (r.interval) r.reject_by_interval = r.interval->lower > -margin;
    if (r.p_value) r.reject_by_pvalue = *r.p_value <= a2;
    results.push_back(std::move(r));
  }
  return results;
}

inline std::vector<Method> default_analysis_methods() {
  return {Method::wald,        Method::agresti_caffo, Method::hauck_anderson,
          Method::newcombe,    Method::newcombe_cc,   Method::als,
          Method::els};
}

}  // namespace elscore
