#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace elscore {

// One treatment arm: successes out of trials.
struct BinomialArm {
  int successes = 0;
  int trials = 0;

  double proportion() const { return static_cast<double>(successes) / trials; }
};

// Observed 2x2 outcome of a two-arm trial.
struct TwoArmData {
  BinomialArm test;
  BinomialArm control;

  double diff() const { return test.proportion() - control.proportion(); }
  TwoArmData swapped() const { return TwoArmData{control, test}; }
};

// Non-inferiority setup: margin delta0 and two-sided confidence level 1-alpha.
// The one-sided test runs at size alpha/2.
struct NoninfSpec {
  double margin = 0.10;
  double two_sided_level = 0.95;

  double alpha() const { return 1.0 - two_sided_level; }
  double one_sided_alpha() const { return 0.5 * (1.0 - two_sided_level); }
};

// Fixed difference p_test - p_control = delta imposed on the joint likelihood.
struct DifferenceConstraint {
  double delta = 0.0;
};

// Maximum likelihood estimates under a DifferenceConstraint. p_test lives in
// the nuisance domain [max(0, delta), min(1, 1 + delta)].
struct ConstrainedMle {
  double p_test = 0.0;
  double p_control = 0.0;
  DifferenceConstraint constraint;

  double domain_lo() const { return constraint.delta > 0.0 ? constraint.delta : 0.0; }
  double domain_hi() const { return constraint.delta < 0.0 ? 1.0 + constraint.delta : 1.0; }
};

// Score statistic (observed difference - delta) / sqrt(constrained-MLE variance).
// When the variance degenerates to zero, z is +/-infinity by the sign of the
// numerator, or 0 for a zero numerator, so every outcome stays comparable.
struct ScoreResult {
  double z = 0.0;
  double numerator = 0.0;
  double variance = 0.0;
};

struct ConfidenceInterval {
  double lower = -1.0;
  double upper = 1.0;
  double two_sided_level = 0.95;
};

// Wilson score limits for a single proportion.
struct WilsonLimits {
  double lower = 0.0;
  double upper = 1.0;
};

enum class Method {
  wald,
  agresti_caffo,
  hauck_anderson,
  newcombe,
  newcombe_cc,
  als,
  fm,
  els,
  es,
};

inline const char* method_name(Method m) {
  switch (m) {
    case Method::wald: return "Wald";
    case Method::agresti_caffo: return "AC";
    case Method::hauck_anderson: return "HA";
    case Method::newcombe: return "NC";
    case Method::newcombe_cc: return "NCC";
    case Method::als: return "ALS";
    case Method::fm: return "FM";
    case Method::els: return "ELS";
    case Method::es: return "ES";
  }
  return "?";
}

inline std::optional<Method> method_from_string(std::string_view s) {
  std::string key;
  key.reserve(s.size());
  for (char c : s) key.push_back(c >= 'A' && c <= 'Z' ? char(c - 'A' + 'a') : c);
  if (key == "wald") return Method::wald;
  if (key == "ac" || key == "agresti-caffo" || key == "agresti_caffo") return Method::agresti_caffo;
  if (key == "ha" || key == "hauck-anderson" || key == "hauck_anderson") return Method::hauck_anderson;
  if (key == "nc" || key == "newcombe") return Method::newcombe;
  if (key == "ncc" || key == "newcombe-cc" || key == "newcombe_cc") return Method::newcombe_cc;
  if (key == "als") return Method::als;
  if (key == "fm" || key == "farrington-manning") return Method::fm;
  if (key == "els") return Method::els;
  if (key == "es") return Method::es;
  return std::nullopt;
}

inline void validate(const BinomialArm& arm, const char* name = "arm") {
  if (arm.trials < 1)
    throw std::invalid_argument(std::string(name) + ": trials must be >= 1");
  if (arm.successes < 0 || arm.successes > arm.trials)
    throw std::invalid_argument(std::string(name) + ": successes must be in [0, trials], got " +
                                std::to_string(arm.successes) + "/" + std::to_string(arm.trials));
}

inline void validate(const TwoArmData& data) {
  validate(data.test, "test arm");
  validate(data.control, "control arm");
}

inline void validate(const NoninfSpec& spec) {
  if (!(spec.margin > 0.0 && spec.margin < 1.0))
    throw std::invalid_argument("margin must be in (0, 1)");
  if (!(spec.two_sided_level > 0.0 && spec.two_sided_level < 1.0))
    throw std::invalid_argument("two-sided level must be in (0, 1)");
}

inline void validate(const DifferenceConstraint& c) {
  if (!(c.delta > -1.0 && c.delta < 1.0))
    throw std::invalid_argument("constraint delta must be in (-1, 1)");
}

inline void validate_margin(double margin) {
  if (!(margin > 0.0 && margin < 1.0))
    throw std::invalid_argument("margin must be in (0, 1)");
}

inline void validate_level(double level) {
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("confidence level must be in (0, 1)");
}

}  // namespace elscore
