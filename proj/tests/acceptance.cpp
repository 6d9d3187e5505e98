// Acceptance suite: one line per criterion, nonzero exit on any failure.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "elscore/elscore.hpp"
#include "elscore/reproduction.hpp"

#include "oracles.hpp"

using namespace elscore;

namespace {

int g_failures = 0;

struct Check {
  bool ok = true;
  std::string detail;

  void fail(const std::string& why) {
    ok = false;
    if (!detail.empty()) detail += "; ";
    detail += why;
  }
  void expect(bool cond, const std::string& why) {
    if (!cond) fail(why);
  }
};

void criterion(int number, const std::string& name, const std::function<void(Check&)>& body) {
  Check check;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(check);
  } catch (const std::exception& e) {
    check.fail(std::string("exception: ") + e.what());
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("criterion %d [%s] %s (%.1fs)%s%s\n", number, check.ok ? "PASS" : "FAIL",
              name.c_str(), secs, check.detail.empty() ? "" : " -- ",
              check.detail.c_str());
  if (!check.ok) ++g_failures;
  std::fflush(stdout);
}

std::string run_command(const std::string& cmd, int& exit_code) {
  std::string out;
  FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
  if (!pipe) {
    exit_code = -1;
    return out;
  }
  std::array<char, 4096> buf;
  while (size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
  const int status = pclose(pipe);
  exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return out;
}

// ---------------------------------------------------------------------------

void criterion1_examples(Check& check) {
  const auto outcomes = reproduction::run_reference_examples();
  for (size_t e = 0; e < outcomes.size(); ++e) {
    const auto& o = outcomes[e];
    char buf[160];
    if (!o.ok) {
      std::snprintf(buf, sizeof buf, "example %zu: CI diff %.4f pp, p diffs %.5f/%.5f", e + 1,
                    o.worst_ci_diff_pp, o.als_p_diff, o.els_p_diff);
      check.fail(buf);
    }
    if (o.els_seconds > 60.0) {
      std::snprintf(buf, sizeof buf, "example %zu: ELS took %.1fs (budget 60s)", e + 1,
                    o.els_seconds);
      check.fail(buf);
    }
    if (o.asymptotic_seconds > 0.010 * 5) {
      std::snprintf(buf, sizeof buf, "example %zu: asymptotic methods took %.4fs", e + 1,
                    o.asymptotic_seconds);
      check.fail(buf);
    }
  }
}

void criterion2_spot(Check& check) {
  const auto report = reproduction::run_reference_battery(350, false, 2);
  check.expect(report.checked >= 24, "fewer than 24 scenarios checked: " +
                                         std::to_string(report.checked));
  for (const auto& row : report.rows) {
    if (row.status != reproduction::RowStatus::checked || row.ok) continue;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%d%% d0=%.2f %d:%d pc=%.2f n=%d off by %.4f pp (%s)",
                  row.row.power_pct, row.row.margin, row.row.ratio_test, row.row.ratio_control,
                  row.row.p_control, row.row.n_test, row.worst_diff_pp,
                  method_name(row.worst_method));
    check.fail(buf);
  }
  check.detail = std::to_string(report.checked) + " rows diffed, " +
                 std::to_string(report.skipped) + " source rows skipped (logged by `tables`)" +
                 (check.ok ? "" : "; " + check.detail);
}

void criterion3_full(Check& check) {
  const auto report = reproduction::run_reference_battery(350, true, 2);
  for (const auto& row : report.rows) {
    if (row.status != reproduction::RowStatus::checked || row.ok) continue;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%d%% d0=%.2f %d:%d pc=%.2f n=%d off by %.4f pp (%s)",
                  row.row.power_pct, row.row.margin, row.row.ratio_test, row.row.ratio_control,
                  row.row.p_control, row.row.n_test, row.worst_diff_pp,
                  method_name(row.worst_method));
    check.fail(buf);
  }
  for (const auto& s : report.summaries) {
    if (s.ok) continue;
    check.fail(std::string(method_name(s.method)) + " summary off by " +
               std::to_string(s.worst_diff));
  }
  if (check.ok)
    check.detail = std::to_string(report.checked) + " rows plus ALS/ELS summaries";
}

void criterion4_oracles(Check& check) {
  long long cells_checked = 0;

  // exact p-values, rejection regions, exact type I error: every shape
  for (int nt = 1; nt <= 12 && check.ok; ++nt) {
    for (int nc = 1; nc <= 12 && check.ok; ++nc) {
      for (double margin : {0.1, 0.2}) {
        const oracle::Grid& og = oracle::grid(nt, nc, -margin);
        for (int xt = 0; xt <= nt; ++xt)
          for (int xc = 0; xc <= nc; ++xc) {
            const TwoArmData d{{xt, nt}, {xc, nc}};
            const double mine = els_pvalue(d, margin);
            const double ptil = og.mle_at(xt, xc);
            const double ref =
                std::min(1.0, oracle::tail_mass(og, og.at(xt, xc), ptil, ptil + margin));
            if (std::fabs(mine - ref) > 1e-10) {
              check.fail("els_pvalue mismatch at " + std::to_string(xt) + "/" +
                         std::to_string(nt) + " vs " + std::to_string(xc) + "/" +
                         std::to_string(nc));
              break;
            }
            ++cells_checked;
          }

        // regions and type I error per method
        const double a2 = 0.025;
        const double z = oracle::kZ975;
        const double p_null = 0.5 - margin, p_ctrl = 0.5;
        for (Method m : {Method::wald, Method::agresti_caffo, Method::hauck_anderson,
                         Method::newcombe, Method::newcombe_cc, Method::fm, Method::als,
                         Method::els}) {
          const auto scale = AlsRegionScale::plain;
          const auto region = rejection_region(m, nt, nc, margin, a2, scale);
          double ref_mass = 0.0;
          bool region_ok = true;
          for (int i = 0; i <= nt && region_ok; ++i)
            for (int j = 0; j <= nc; ++j) {
              bool want = false;
              switch (m) {
                case Method::wald: want = oracle::wald_ci(i, nt, j, nc, z).lower > -margin; break;
                case Method::agresti_caffo:
                  want = oracle::agresti_caffo_ci(i, nt, j, nc, z).lower > -margin;
                  break;
                case Method::hauck_anderson:
                  want = oracle::hauck_anderson_ci(i, nt, j, nc, z).lower > -margin;
                  break;
                case Method::newcombe:
                  want = oracle::newcombe_ci(i, nt, j, nc, z).lower > -margin;
                  break;
                case Method::newcombe_cc:
                  want = oracle::newcombe_cc_ci(i, nt, j, nc, z).lower > -margin;
                  break;
                case Method::fm:
                  want = oracle::fm_ci(i, nt, j, nc, margin, z).lower > -margin;
                  break;
                case Method::als: want = og.at(i, j) >= z; break;
                case Method::els: {
                  const double p = og.mle_at(i, j);
                  want = oracle::tail_mass(og, og.at(i, j), p, p + margin) <= a2;
                  break;
                }
                default: break;
              }
              if (region.contains(i, j) != want) {
                check.fail("region mismatch " + std::string(method_name(m)) + " at shape " +
                           std::to_string(nt) + "x" + std::to_string(nc));
                region_ok = false;
                break;
              }
              if (want) ref_mass += oracle::joint_pmf(i, j, nt, nc, p_null, p_ctrl);
            }
          if (!region_ok) break;
          const OcScenario s{nt, nc, margin, p_ctrl, a2};
          const double mine = exact_type1(m, s, Pruning::on, scale);
          if (std::fabs(mine - ref_mass) > 1e-10) {
            check.fail("exact_type1 mismatch " + std::string(method_name(m)));
            break;
          }
        }
      }

      // intervals at the 95% level: every closed form plus the score inversion
      for (int xt = 0; xt <= nt; ++xt)
        for (int xc = 0; xc <= nc; ++xc) {
          const TwoArmData d{{xt, nt}, {xc, nc}};
          const double z = oracle::kZ975;
          const struct {
            const char* name;
            ConfidenceInterval got;
            oracle::Interval want;
          } pairs[] = {
              {"wald", wald_ci(d, 0.95), oracle::wald_ci(xt, nt, xc, nc, z)},
              {"ac", agresti_caffo_ci(d, 0.95), oracle::agresti_caffo_ci(xt, nt, xc, nc, z)},
              {"ha", hauck_anderson_ci(d, 0.95), oracle::hauck_anderson_ci(xt, nt, xc, nc, z)},
              {"nc", newcombe_ci(d, 0.95), oracle::newcombe_ci(xt, nt, xc, nc, z)},
              {"ncc", newcombe_cc_ci(d, 0.95), oracle::newcombe_cc_ci(xt, nt, xc, nc, z)},
              {"fm", fm_ci(d, 0.1, 0.95), oracle::fm_ci(xt, nt, xc, nc, 0.1, z)},
              {"als", als_ci(d, 0.95), oracle::als_ci(xt, nt, xc, nc, z)},
          };
          for (const auto& p : pairs) {
            if (std::fabs(p.got.lower - p.want.lower) > 1e-8 ||
                std::fabs(p.got.upper - p.want.upper) > 1e-8) {
              check.fail(std::string(p.name) + " interval mismatch at shape " +
                         std::to_string(nt) + "x" + std::to_string(nc));
              break;
            }
          }
          if (!check.ok) break;
        }
    }
  }

  // exact score p-value: full cells over a shape subset (the oracle grid max
  // is quadratic in the sample space, so the subset keeps this bounded)
  for (const auto& [nt, nc] : {std::pair{6, 6}, std::pair{8, 5}, std::pair{12, 12}}) {
    if (!check.ok) break;
    for (double margin : {0.1, 0.2})
      for (int xt = 0; xt <= nt; ++xt)
        for (int xc = 0; xc <= nc; ++xc) {
          const double mine = es_pvalue({{xt, nt}, {xc, nc}}, margin);
          const double ref = oracle::es_pvalue(xt, nt, xc, nc, margin);
          if (std::fabs(mine - ref) > 1e-10) {
            check.fail("es_pvalue mismatch at shape " + std::to_string(nt) + "x" +
                       std::to_string(nc));
            break;
          }
        }
  }

  // exact-method confidence interval against an independent re-derivation:
  // oracle score bounds seed oracle tail cuts, bisected to 1e-10
  for (const auto& [nt, nc] :
       {std::pair{4, 4}, std::pair{8, 8}, std::pair{12, 12}, std::pair{5, 9}, std::pair{12, 7}}) {
    if (!check.ok) break;
    for (int xt = 0; xt <= nt; ++xt)
      for (int xc = 0; xc <= nc; ++xc) {
        const TwoArmData d{{xt, nt}, {xc, nc}};
        const auto mine = els_confidence_interval(d, 0.95);

        const auto oals = oracle::als_ci(xt, nt, xc, nc, oracle::kZ975);
        auto solve = [&](bool lower_side) {
          const double edge = 1.0 - 1e-9;
          const double seed =
              std::clamp(lower_side ? oals.lower : oals.upper, -edge, edge);
          const oracle::Grid& g = oracle::grid(nt, nc, seed);
          const double zcut = g.at(xt, xc);
          auto gfun = [&](double delta) {
            const double pt = oracle::restricted_mle(xt, nt, xc, nc, delta);
            const double pc = std::clamp(pt - delta, 0.0, 1.0);
            double total = 0.0;
            for (int i = 0; i <= nt; ++i)
              for (int j = 0; j <= nc; ++j) {
                const bool in_tail = lower_side
                                         ? g.at(i, j) >= zcut - oracle::kScoreTieBand
                                         : g.at(i, j) <= zcut + oracle::kScoreTieBand;
                if (in_tail) total += oracle::joint_pmf(i, j, nt, nc, pt, pc);
              }
            return total - 0.025;
          };
          double b = seed, fb = gfun(b);
          if (fb == 0.0) return b;
          const bool go_down = lower_side ? fb > 0.0 : fb < 0.0;
          double step = 1.0 / 1024.0, lo = 0, hi = 0, flo = 0;
          for (;;) {
            double probe = go_down ? b - step : b + step;
            bool clipped = false;
            if (probe <= -edge) { probe = -edge; clipped = true; }
            if (probe >= edge) { probe = edge; clipped = true; }
            const double fp = gfun(probe);
            if ((fp > 0.0) != (fb > 0.0) || fp == 0.0) {
              lo = std::min(b, probe);
              hi = std::max(b, probe);
              flo = lo == b ? fb : fp;
              break;
            }
            if (clipped) return go_down ? -1.0 : 1.0;
            b = probe;
            fb = fp;
            step *= 2.0;
          }
          while (hi - lo > 1e-10) {
            const double mid = 0.5 * (lo + hi);
            const double fm = gfun(mid);
            if ((fm > 0.0) == (flo > 0.0)) {
              lo = mid;
              flo = fm;
            } else {
              hi = mid;
            }
          }
          return 0.5 * (lo + hi);
        };
        const double want_lo = solve(true);
        const double want_hi = solve(false);
        if (std::fabs(mine.lower - want_lo) > 1e-8 || std::fabs(mine.upper - want_hi) > 1e-8) {
          check.fail("els interval mismatch at " + std::to_string(xt) + "/" +
                     std::to_string(nt) + " vs " + std::to_string(xc) + "/" +
                     std::to_string(nc));
          break;
        }
      }
  }

  if (check.ok)
    check.detail = "p-values, regions, type I errors, and intervals across " +
                   std::to_string(cells_checked) + "+ outcomes";
}

void criterion5_properties(Check& check) {
  // pmf normalization
  for (const auto& [nt, nc] : {std::pair{37, 81}, std::pair{150, 150}, std::pair{200, 23}}) {
    KahanSum acc;
    for (int i = 0; i <= nt; ++i)
      for (int j = 0; j <= nc; ++j) acc.add(std::exp(joint_log_pmf(i, j, nt, nc, 0.37, 0.82)));
    check.expect(std::fabs(acc.value() - 1.0) <= 1e-12, "pmf normalization");
  }

  // restricted MLE constraint and local optimality
  for (int xt = 0; xt <= 20; xt += 4)
    for (int xc = 0; xc <= 20; xc += 5)
      for (double delta : {-0.3, 0.0, 0.45}) {
        const auto m = restricted_mle({{xt, 20}, {xc, 20}}, {delta});
        check.expect(std::fabs(m.p_test - m.p_control - delta) <= 1e-12, "constraint");
        const double center = oracle::loglik(xt, 20, xc, 20, delta, m.p_test);
        for (double step : {1e-6, -1e-6}) {
          const double probe = std::clamp(m.p_test + step, m.domain_lo(), m.domain_hi());
          check.expect(center >= oracle::loglik(xt, 20, xc, 20, delta, probe) - 1e-9,
                       "local optimality");
        }
      }

  // arm-swap symmetries
  for (int xt = 0; xt <= 15; xt += 3)
    for (int xc = 0; xc <= 10; xc += 2) {
      const TwoArmData d{{xt, 15}, {xc, 10}};
      const double z = score_statistic(d, {-0.2}).z;
      const double zs = score_statistic(d.swapped(), {0.2}).z;
      check.expect(std::isinf(z) ? zs == -z : std::fabs(zs + z) <= 1e-10, "score arm swap");
      const auto a = als_ci(d, 0.95);
      const auto b = als_ci(d.swapped(), 0.95);
      check.expect(std::fabs(a.lower + b.upper) <= 1e-8 && std::fabs(a.upper + b.lower) <= 1e-8,
                   "als arm swap");
    }

  // es dominates els
  for (int xt = 0; xt <= 8; ++xt)
    for (int xc = 0; xc <= 8; ++xc) {
      const TwoArmData d{{xt, 8}, {xc, 8}};
      check.expect(es_pvalue(d, 0.2) >= els_pvalue(d, 0.2), "es >= els");
    }

  // interval containments
  for (int xt = 0; xt <= 18; xt += 2)
    for (int xc = 0; xc <= 14; xc += 2) {
      const TwoArmData d{{xt, 18}, {xc, 14}};
      const auto wald = wald_ci(d, 0.95);
      const auto ha = hauck_anderson_ci(d, 0.95);
      check.expect(ha.lower <= wald.lower + 1e-14 && ha.upper >= wald.upper - 1e-14,
                   "HA contains Wald");
      const auto nc_ci = newcombe_ci(d, 0.95);
      const auto ncc_ci = newcombe_cc_ci(d, 0.95);
      check.expect(ncc_ci.lower <= nc_ci.lower + 1e-12 && ncc_ci.upper >= nc_ci.upper - 1e-12,
                   "NCC contains NC");
    }

  // ALS p-value vs interval decision, exhaustive small grid
  for (double margin : {0.05, 0.10, 0.15})
    for (int nt = 1; nt <= 25 && check.ok; ++nt)
      for (int nc = 1; nc <= 25; ++nc)
        for (int xt = 0; xt <= nt; ++xt)
          for (int xc = 0; xc <= nc; ++xc) {
            const TwoArmData d{{xt, nt}, {xc, nc}};
            const double p = als_pvalue(d, margin);
            if (std::fabs(p - 0.025) < 1e-7) continue;
            const auto ci = als_ci(d, 0.95);
            if (std::fabs(ci.lower + margin) < 1e-7) continue;
            if ((p < 0.025) != (ci.lower > -margin)) {
              check.fail("als decision mismatch at " + std::to_string(xt) + "/" +
                         std::to_string(nt) + " vs " + std::to_string(xc) + "/" +
                         std::to_string(nc));
              break;
            }
          }

  // ELS p-value vs interval decision: reference examples and diagonal grid
  auto els_consistent = [&](const TwoArmData& d, double margin) {
    const double p = els_pvalue(d, margin);
    if (std::fabs(p - 0.025) < 1e-6) return;
    const auto ci = els_confidence_interval(d, 0.95);
    if (std::fabs(ci.lower + margin) < 1e-6) return;
    if ((p < 0.025) != (ci.lower > -margin))
      check.fail("els decision mismatch at " + std::to_string(d.test.successes) + "/" +
                 std::to_string(d.test.trials) + " vs " + std::to_string(d.control.successes) +
                 "/" + std::to_string(d.control.trials));
  };
  els_consistent({{264, 328}, {268, 317}}, 0.10);
  els_consistent({{285, 326}, {99, 108}}, 0.10);
  els_consistent({{411, 435}, {426, 441}}, 0.05);
  for (double margin : {0.1, 0.2})
    for (int n = 1; n <= 20 && check.ok; ++n)
      for (int xt = 0; xt <= n; ++xt)
        for (int xc = 0; xc <= n; ++xc) els_consistent({{xt, n}, {xc, n}}, margin);
}

void criterion6_sample_sizes(Check& check) {
  using namespace reference;
  int rows = 0, excluded = 0;
  for (const OcRow& row : kOcRows) {
    if (row.ratio_test != 1 || row.ratio_control != 1) continue;
    const SampleSizeSpec spec{row.margin,    row.ratio_test, row.ratio_control, row.p_control,
                              row.p_control, row.power_pct / 100.0, 0.025};
    const SampleSize n = fm_sample_size(spec);
    if (!row_design_consistent(row, n.n_test) || row_misaligned(row)) {
      ++excluded;  // source row does not carry its stated design; logged by `tables`
      continue;
    }
    ++rows;
    if (std::abs(n.n_test - row.n_test) > 2) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "%d%% d0=%.2f pc=%.2f: size %d vs printed %d",
                    row.power_pct, row.margin, row.p_control, n.n_test, row.n_test);
      check.fail(buf);
    }
    const double power = exact_power(Method::als, n.n_test, n.n_control, row.margin, 0.025,
                                     row.p_control, row.p_control);
    if (power < row.power_pct / 100.0 - 0.01) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "%d%% d0=%.2f pc=%.2f: exact power %.4f below target",
                    row.power_pct, row.margin, row.p_control, power);
      check.fail(buf);
    }
  }
  if (check.ok)
    check.detail = std::to_string(rows) + " designs sized and power-checked, " +
                   std::to_string(excluded) + " inconsistent source rows excluded";
}

void criterion7_determinism(Check& check) {
  const std::string dir = ELSCORE_TEST_TMPDIR;
  const std::string config = dir + "/acceptance_sweep.csv";
  {
    std::ofstream out(config);
    out << "delta0,ratio_t,ratio_c,p_control,power,alpha,n_test,n_control\n";
    for (double pc : {0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.82, 0.9})
      out << "0.2,1,1," << pc << ",0,0.05,15,15\n";
    out << "0.15,2,1,0.5,0,0.05,18,9\n";
    out << "0.15,1,2,0.6,0,0.05,12,24\n";
  }
  const std::string cli = ELSCORE_CLI_PATH;
  int code1 = 0, code8 = 0;
  const std::string out1 = run_command(
      cli + " type1 --config " + config + " --out " + dir + "/acc_out1.csv --threads 1", code1);
  const std::string out8 = run_command(
      cli + " type1 --config " + config + " --out " + dir + "/acc_out8.csv --threads 8", code8);
  check.expect(code1 == 0 && code8 == 0, "type1 runs failed");
  auto slurp = [](const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string csv1 = slurp(dir + "/acc_out1.csv");
  check.expect(!csv1.empty(), "empty output");
  check.expect(csv1 == slurp(dir + "/acc_out8.csv"), "CSV differs across thread counts");
  check.expect(out1 == out8, "summary differs across thread counts");
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  criterion(1, "reference example analyses reproduce within tolerance and budget",
            criterion1_examples);
  criterion(2, "battery spot tier (n_test <= 350) reproduces within 0.01 pp",
            criterion2_spot);
  criterion(3, "battery full tier plus distribution summaries", criterion3_full);
  criterion(4, "brute-force oracle equivalence on shapes up to 12x12", criterion4_oracles);
  criterion(5, "property suites", criterion5_properties);
  criterion(6, "sample sizes match the published designs with adequate exact power",
            criterion6_sample_sizes);
  criterion(7, "sweep output byte-identical across thread counts", criterion7_determinism);
  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all acceptance criteria passed\n");
  return 0;
}
