#pragma once

// Bundled reference values for the reproduction suite: exact type I errors
// for a battery of non-inferiority designs sized at 80% and 90% power, and
// three fully worked example analyses. The `tables` CLI command and the
// acceptance tests diff freshly computed results against these.
//
// A handful of published rows are internally inconsistent: their sample size
// does not match the stated design (margin, allocation, control rate, power)
// under the same sizing formula that generated every other row. Consumers
// detect those mechanically via fm_sample_size and report them as skipped
// rather than diffing against them.

#include <array>

#include "elscore/types.hpp"

namespace elscore::reference {

struct OcRow {
  int power_pct;  // 80 or 90
  double margin;
  int ratio_test;
  int ratio_control;
  double p_control;
  int n_test;
  // expected exact type I errors, percent, printed at 2 decimals
  double wald, ac, ha, ncc, nc, als, els;
};

inline constexpr std::array<OcRow, 74> kOcRows{{
    // 80% power designs
    {80, 0.10, 1, 2, 0.25, 207, 2.21, 2.45, 1.83, 2.31, 2.77, 2.65, 2.49},
    {80, 0.10, 1, 2, 0.40, 275, 2.34, 2.50, 2.06, 2.30, 2.62, 2.56, 2.48},
    {80, 0.10, 1, 2, 0.60, 285, 2.46, 2.47, 2.19, 2.18, 2.46, 2.44, 2.44},
    {80, 0.10, 1, 2, 0.75, 233, 2.70, 2.60, 2.34, 2.13, 2.48, 2.44, 2.47},
    {80, 0.10, 1, 2, 0.90, 132, 3.38, 2.80, 2.60, 1.72, 2.33, 2.29, 2.51},
    {80, 0.10, 1, 2, 0.95, 90, 3.94, 3.08, 3.05, 1.41, 2.05, 2.05, 2.39},
    {80, 0.10, 1, 1, 0.25, 295, 2.57, 2.57, 2.25, 2.16, 2.57, 2.50, 2.50},
    {80, 0.10, 1, 1, 0.40, 374, 2.46, 2.54, 2.27, 2.28, 2.57, 2.51, 2.46},
    {80, 0.10, 1, 1, 0.60, 374, 2.37, 2.43, 2.36, 2.36, 2.50, 2.40, 2.38},
    {80, 0.10, 1, 1, 0.75, 295, 2.50, 2.54, 2.24, 2.24, 2.58, 2.50, 2.47},
    {80, 0.10, 1, 1, 0.90, 154, 2.78, 2.76, 2.19, 1.97, 2.55, 2.36, 2.47},
    {80, 0.10, 1, 1, 0.95, 99, 3.27, 2.91, 2.47, 1.67, 2.42, 2.32, 2.32},
    {80, 0.10, 2, 1, 0.25, 466, 2.88, 2.67, 2.48, 2.02, 2.42, 2.39, 2.48},
    {80, 0.10, 2, 1, 0.40, 570, 2.62, 2.57, 2.31, 2.20, 2.52, 2.47, 2.50},
    {80, 0.10, 2, 1, 0.60, 550, 2.47, 2.48, 2.20, 2.23, 2.54, 2.49, 2.48},
    {80, 0.10, 2, 1, 0.75, 414, 2.29, 2.49, 1.94, 2.27, 2.65, 2.59, 2.48},
    {80, 0.10, 2, 1, 0.90, 194, 2.13, 2.52, 1.52, 2.16, 2.97, 2.69, 2.48},
    {80, 0.10, 2, 1, 0.95, 116, 2.00, 2.67, 1.37, 1.97, 2.88, 2.82, 2.38},
    {80, 0.15, 1, 2, 0.25, 90, 2.14, 2.56, 1.49, 2.25, 2.94, 2.57, 2.46},
    {80, 0.15, 1, 2, 0.40, 120, 2.22, 2.48, 1.81, 2.26, 2.76, 2.63, 2.48},
    {80, 0.15, 1, 2, 0.60, 127, 2.61, 2.61, 2.12, 2.20, 2.61, 2.61, 2.47},
    {80, 0.15, 1, 2, 0.75, 106, 2.76, 2.67, 2.22, 2.03, 2.53, 2.46, 2.50},
    {80, 0.15, 1, 2, 0.90, 65, 3.55, 2.87, 2.56, 1.65, 2.22, 2.19, 2.51},
    {80, 0.15, 1, 2, 0.95, 131, 2.75, 2.77, 2.14, 1.96, 2.56, 2.37, 2.50},
    {80, 0.15, 1, 1, 0.25, 165, 2.47, 2.63, 2.11, 2.16, 2.66, 2.58, 2.52},
    {80, 0.15, 1, 1, 0.40, 165, 2.38, 2.76, 2.13, 2.13, 2.76, 2.81, 2.50},
    {80, 0.15, 1, 1, 0.60, 131, 2.50, 2.59, 2.12, 2.18, 2.67, 2.50, 2.42},
    {80, 0.15, 1, 1, 0.75, 73, 2.78, 2.74, 2.08, 1.83, 2.73, 2.37, 2.38},
    {80, 0.15, 1, 1, 0.90, 212, 3.20, 2.91, 2.60, 1.81, 2.36, 2.27, 2.45},
    {80, 0.15, 1, 1, 0.95, 254, 2.73, 2.65, 2.23, 2.07, 2.52, 2.47, 2.47},
    {80, 0.15, 2, 1, 0.25, 240, 2.31, 2.69, 1.92, 2.30, 2.74, 2.62, 2.41},
    {80, 0.15, 2, 1, 0.40, 180, 2.21, 2.50, 1.74, 2.18, 2.78, 2.61, 2.50},
    {80, 0.15, 2, 1, 0.60, 88, 2.02, 2.41, 1.21, 2.27, 2.92, 2.83, 2.41},
    {80, 0.15, 2, 1, 0.75, 289, 3.41, 2.81, 2.82, 1.76, 2.17, 2.17, 2.43},
    {80, 0.15, 2, 1, 0.90, 334, 2.85, 2.62, 2.31, 1.93, 2.41, 2.41, 2.41},
    {80, 0.15, 2, 1, 0.95, 414, 2.14, 2.49, 1.56, 2.14, 2.90, 2.55, 2.40},
    {80, 0.05, 1, 2, 0.95, 289, 3.41, 2.81, 2.82, 1.76, 2.17, 2.17, 2.43},
    {80, 0.05, 1, 1, 0.95, 334, 2.85, 2.62, 2.31, 1.93, 2.41, 2.41, 2.41},
    {80, 0.05, 2, 1, 0.95, 414, 2.14, 2.49, 1.56, 2.14, 2.90, 2.55, 2.40},
    // 90% power designs
    {90, 0.10, 1, 2, 0.25, 280, 2.24, 2.48, 1.89, 2.32, 2.71, 2.59, 2.49},
    {90, 0.10, 1, 2, 0.40, 369, 2.37, 2.50, 2.11, 2.32, 2.61, 2.55, 2.50},
    {90, 0.10, 1, 2, 0.60, 382, 2.46, 2.48, 2.22, 2.21, 2.48, 2.44, 2.44},
    {90, 0.10, 1, 2, 0.75, 310, 2.67, 2.60, 2.35, 2.17, 2.49, 2.46, 2.49},
    {90, 0.10, 1, 2, 0.90, 172, 3.20, 2.79, 2.60, 1.89, 2.33, 2.28, 2.43},
    {90, 0.10, 1, 2, 0.95, 113, 4.03, 2.93, 2.93, 1.52, 2.12, 2.12, 2.31},
    {90, 0.10, 1, 1, 0.25, 395, 2.55, 2.60, 2.28, 2.20, 2.57, 2.49, 2.49},
    {90, 0.10, 1, 1, 0.40, 502, 2.46, 2.51, 2.29, 2.31, 2.54, 2.49, 2.48},
    {90, 0.10, 1, 1, 0.60, 502, 2.53, 2.53, 2.20, 2.21, 2.53, 2.53, 2.53},
    {90, 0.10, 1, 1, 0.75, 395, 2.55, 2.60, 2.28, 2.20, 2.57, 2.49, 2.50},
    {90, 0.10, 1, 1, 0.90, 204, 2.71, 2.70, 2.30, 2.01, 2.55, 2.40, 2.46},
    {90, 0.10, 1, 1, 0.95, 128, 3.38, 2.91, 2.34, 1.83, 2.44, 2.31, 2.48},
    {90, 0.10, 2, 1, 0.25, 620, 2.83, 2.65, 2.47, 2.11, 2.46, 2.40, 2.47},
    {90, 0.10, 2, 1, 0.40, 764, 2.60, 2.56, 2.33, 2.24, 2.51, 2.49, 2.49},
    {90, 0.10, 2, 1, 0.60, 738, 2.40, 2.57, 2.14, 2.33, 2.58, 2.57, 2.54},
    {90, 0.10, 2, 1, 0.75, 560, 2.31, 2.48, 2.02, 2.32, 2.64, 2.59, 2.47},
    {90, 0.15, 1, 2, 0.25, 121, 2.15, 2.56, 1.63, 2.30, 2.82, 2.66, 2.42},
    {90, 0.15, 1, 2, 0.40, 161, 2.25, 2.53, 1.89, 2.30, 2.72, 2.59, 2.47},
    {90, 0.15, 1, 2, 0.60, 169, 2.42, 2.44, 2.08, 2.10, 2.55, 2.42, 2.42},
    {90, 0.15, 1, 2, 0.75, 140, 2.69, 2.62, 2.27, 2.07, 2.55, 2.45, 2.46},
    {90, 0.15, 1, 2, 0.90, 83, 3.35, 2.98, 2.67, 1.70, 2.36, 2.20, 2.36},
    {90, 0.15, 1, 2, 0.95, 154, 2.16, 2.67, 1.29, 1.95, 2.83, 2.59, 2.34},
    {90, 0.15, 1, 1, 0.25, 176, 2.67, 2.80, 2.21, 2.08, 2.64, 2.49, 2.49},
    {90, 0.15, 1, 1, 0.40, 221, 2.47, 2.62, 2.17, 2.22, 2.65, 2.51, 2.46},
    {90, 0.15, 1, 1, 0.60, 221, 2.37, 2.38, 2.37, 2.37, 2.47, 2.43, 2.37},
    {90, 0.15, 1, 1, 0.75, 176, 2.50, 2.62, 2.11, 2.16, 2.64, 2.56, 2.50},
    {90, 0.15, 1, 1, 0.90, 96, 2.76, 2.76, 2.28, 1.88, 2.73, 2.47, 2.47},
    {90, 0.15, 1, 1, 0.95, 120, 1.98, 2.40, 1.30, 2.34, 2.94, 2.84, 2.40},
    {90, 0.15, 2, 1, 0.25, 280, 3.16, 2.84, 2.54, 1.87, 2.42, 2.28, 2.45},
    {90, 0.15, 2, 1, 0.40, 338, 2.67, 2.63, 2.25, 2.14, 2.54, 2.49, 2.49},
    {90, 0.15, 2, 1, 0.60, 322, 2.31, 2.63, 1.95, 2.26, 2.63, 2.63, 2.58},
    {90, 0.15, 2, 1, 0.75, 242, 2.22, 2.50, 1.81, 2.26, 2.76, 2.62, 2.50},
    {90, 0.05, 1, 2, 0.95, 374, 3.30, 2.77, 2.77, 1.82, 2.24, 2.23, 2.47},
    {90, 0.05, 1, 1, 0.95, 440, 2.82, 2.65, 2.35, 2.02, 2.48, 2.37, 2.48},
    {90, 0.05, 2, 1, 0.95, 560, 2.12, 2.43, 1.62, 2.18, 2.78, 2.62, 2.44},
}};

// Methods in the reference column order.
inline constexpr std::array<Method, 7> kOcMethods{
    Method::wald,     Method::agresti_caffo, Method::hauck_anderson, Method::newcombe_cc,
    Method::newcombe, Method::als,           Method::els};

// Sizing check: a row belongs to its stated design when the same formula that
// generated the battery lands within two subjects of the printed size.
// Rows failing this carry values from some other (shifted) design.
inline bool row_design_consistent(const OcRow& row, int fm_n_test) {
  return fm_n_test >= row.n_test - 2 && fm_n_test <= row.n_test + 2;
}

// Residual source artifacts that pass the sizing check by coincidence.
// The 80%/0.15/1:1/0.40 row sits inside a block whose neighbours all fail the
// sizing check (the printed values are shifted against their labels), and
// none of its seven values reproduce.
inline bool row_misaligned(const OcRow& row) {
  return row.power_pct == 80 && row.margin == 0.15 && row.ratio_test == 1 &&
         row.ratio_control == 1 && row.p_control == 0.40;
}

// Individual cells that do not belong to their row. In the 90%/0.15/1:1/0.60
// row the ALS cell alone disagrees while the other six methods and the
// recomputed ELS land within half a printing unit. The 90%/0.10/1:1/0.75
// row's six asymptotic cells are byte-for-byte copies of the 0.25 mirror
// row's (whose recomputation they match), while the true values of the 0.75
// design differ by up to 0.06 pp; its ELS cell is distinct and correct.
inline bool cell_misprinted(const OcRow& row, Method m) {
  if (row.power_pct == 90 && row.margin == 0.15 && row.ratio_test == 1 &&
      row.ratio_control == 1 && row.p_control == 0.60 && m == Method::als)
    return true;
  if (row.power_pct == 90 && row.margin == 0.10 && row.ratio_test == 1 &&
      row.ratio_control == 1 && row.p_control == 0.75 && m != Method::els)
    return true;
  return false;
}

inline double oc_expected(const OcRow& row, Method m) {
  switch (m) {
    case Method::wald: return row.wald;
    case Method::agresti_caffo: return row.ac;
    case Method::hauck_anderson: return row.ha;
    case Method::newcombe_cc: return row.ncc;
    case Method::newcombe: return row.nc;
    case Method::als: return row.als;
    case Method::els: return row.els;
    default: return 0.0;
  }
}

struct ExampleAnalysis {
  int x_test, n_test, x_control, n_control;
  double margin;
  // expected 95% CIs in percent (2 decimals) and p-values (4 decimals)
  double wald_lo, wald_hi;
  double ac_lo, ac_hi;
  double ha_lo, ha_hi;
  double nc_lo, nc_hi;
  double ncc_lo, ncc_hi;
  double als_p, als_lo, als_hi;
  double els_p, els_lo, els_hi;
};

inline constexpr std::array<ExampleAnalysis, 3> kExamples{{
    {264, 328, 268, 317, 0.10,
     -9.91, 1.80, -9.88, 1.84, -10.07, 1.96, -9.90, 1.83, -10.11, 2.06,
     0.0238, -9.94, 1.83, 0.0239, -9.94, 1.84},
    {285, 326, 99, 108, 0.10,
     -10.58, 2.09, -10.19, 2.76, -11.06, 2.58, -9.85, 3.21, -10.20, 3.78,
     0.0246, -9.98, 3.16, 0.0281, -10.14, 2.91},
    {411, 435, 426, 441, 0.05,
     -4.85, 0.62, -4.89, 0.68, -4.97, 0.73, -5.00, 0.66, -5.16, 0.83,
     0.0260, -5.03, 0.64, 0.0246, -4.99, 0.66},
}};

}  // namespace elscore::reference
