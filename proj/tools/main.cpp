// elscore: non-inferiority tests and confidence intervals for the difference
// of two binomial proportions, with exact operating characteristics.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "elscore/elscore.hpp"
#include "elscore/reproduction.hpp"

namespace {

using namespace elscore;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitReproDiff = 3;

// presentation rounding: half away from zero at the given number of decimals
double round_half_up(double v, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return (v < 0 ? -1.0 : 1.0) * std::floor(std::fabs(v) * scale + 0.5) / scale;
}

std::string format_pct(double proportion) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", round_half_up(100.0 * proportion, 2));
  return buf;
}

std::string format_pvalue(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", round_half_up(p, 4));
  return buf;
}

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<Method> out;
  for (const auto& entry : names) {
    std::stringstream ss(entry);
    std::string token;
    while (std::getline(ss, token, ',')) {
      if (token.empty()) continue;
      const auto m = method_from_string(token);
      if (!m) throw std::invalid_argument("--methods: unknown method '" + token + "'");
      if (std::find(out.begin(), out.end(), *m) == out.end()) out.push_back(*m);
    }
  }
  return out;
}

bool parse_ratio(const std::string& text, int& ratio_test, int& ratio_control) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) return false;
  try {
    ratio_test = std::stoi(text.substr(0, colon));
    ratio_control = std::stoi(text.substr(colon + 1));
  } catch (...) {
    return false;
  }
  return ratio_test >= 1 && ratio_control >= 1;
}

void validate_counts(int xt, int nt, int xc, int nc) {
  if (nt < 1) throw std::invalid_argument("--nt: trials must be >= 1, got " + std::to_string(nt));
  if (nc < 1) throw std::invalid_argument("--nc: trials must be >= 1, got " + std::to_string(nc));
  if (xt < 0 || xt > nt)
    throw std::invalid_argument("--xt: must be in [0, --nt], got " + std::to_string(xt) + "/" +
                                std::to_string(nt));
  if (xc < 0 || xc > nc)
    throw std::invalid_argument("--xc: must be in [0, --nc], got " + std::to_string(xc) + "/" +
                                std::to_string(nc));
}

std::string decision_string(const MethodResult& r) {
  if (r.reject_by_interval && r.reject_by_pvalue) {
    if (*r.reject_by_interval == *r.reject_by_pvalue)
      return *r.reject_by_interval ? "reject" : "fail-to-reject";
    return std::string(*r.reject_by_interval ? "reject" : "fail-to-reject") + "(ci)/" +
           (*r.reject_by_pvalue ? "reject" : "fail-to-reject") + "(p)";
  }
  if (r.reject_by_interval) return *r.reject_by_interval ? "reject" : "fail-to-reject";
  if (r.reject_by_pvalue) return *r.reject_by_pvalue ? "reject" : "fail-to-reject";
  return "-";
}

json result_to_json(const MethodResult& r) {
  json o;
  o["method"] = method_name(r.method);
  if (r.interval) {
    o["ci_lower"] = r.interval->lower;
    o["ci_upper"] = r.interval->upper;
  }
  if (r.p_value) o["p_value"] = *r.p_value;
  if (r.reject_by_interval) o["reject_by_interval"] = *r.reject_by_interval;
  if (r.reject_by_pvalue) o["reject_by_pvalue"] = *r.reject_by_pvalue;
  o["seconds"] = r.seconds;
  return o;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeArgs {
  int xt = 0, nt = 0, xc = 0, nc = 0;
  double margin = 0.10;
  double level = 0.95;
  std::vector<std::string> method_names;
  bool emit_json = false;
  bool full_precision = false;
  bool allow_large_es = false;
};

int cmd_analyze(const AnalyzeArgs& args) {
  validate_counts(args.xt, args.nt, args.xc, args.nc);
  AnalysisRequest req;
  req.data = TwoArmData{{args.xt, args.nt}, {args.xc, args.nc}};
  req.spec = NoninfSpec{args.margin, args.level};
  validate(req.spec);
  req.methods = args.method_names.empty() ? default_analysis_methods()
                                          : parse_methods(args.method_names);
  req.allow_large_es = args.allow_large_es;
  if (req.methods.empty()) throw std::invalid_argument("--methods: method set must not be empty");

  const auto results = analyze(req);

  if (args.emit_json) {
    json doc;
    doc["schema"] = "elscore/1";
    doc["command"] = "analyze";
    doc["inputs"] = {{"x_test", args.xt},     {"n_test", args.nt},  {"x_control", args.xc},
                     {"n_control", args.nc},  {"margin", args.margin},
                     {"two_sided_level", args.level}};
    doc["results"] = json::array();
    for (const auto& r : results) doc["results"].push_back(result_to_json(r));
    std::cout << doc.dump(2) << "\n";
    return kExitOk;
  }

  std::printf("non-inferiority analysis: %d/%d vs %d/%d, margin %s%%, %g%% CI\n", args.xt,
              args.nt, args.xc, args.nc, format_pct(args.margin).c_str(), 100.0 * args.level);
  std::printf("%-6s %10s %22s %22s %10s\n", "method", "p-value", "CI (%)", "decision", "time");
  for (const auto& r : results) {
    std::string p = r.p_value ? format_pvalue(*r.p_value) : "--";
    std::string ci = "--";
    if (r.interval) {
      if (args.full_precision)
        ci = "(" + format_full(r.interval->lower) + ", " + format_full(r.interval->upper) + ")";
      else
        ci = "(" + format_pct(r.interval->lower) + ", " + format_pct(r.interval->upper) + ")";
    }
    if (args.full_precision && r.p_value) p = format_full(*r.p_value);
    std::string timing;
    if (r.method == Method::els || r.method == Method::es) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.2fs", r.seconds);
      timing = buf;
    }
    std::printf("%-6s %10s %22s %22s %10s\n", method_name(r.method), p.c_str(), ci.c_str(),
                decision_string(r).c_str(), timing.c_str());
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// type1

struct SweepFile {
  std::vector<SweepRow> rows;
};

// Sweep CSV: header delta0,ratio_t,ratio_c,p_control,power,alpha with
// optional trailing n_test,n_control columns that override the power sizing.
SweepFile read_sweep_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("--config: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("--config: empty file");
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      while (!tok.empty() && (tok.back() == '\r' || tok.back() == ' ')) tok.pop_back();
      while (!tok.empty() && tok.front() == ' ') tok.erase(tok.begin());
      out.push_back(tok);
    }
    return out;
  };
  const auto header = split(line);
  const std::vector<std::string> base{"delta0", "ratio_t", "ratio_c", "p_control", "power",
                                      "alpha"};
  if (header.size() < base.size() ||
      !std::equal(base.begin(), base.end(), header.begin()))
    throw std::invalid_argument(
        "--config: header must start with delta0,ratio_t,ratio_c,p_control,power,alpha");
  const bool has_sizes = header.size() >= 8 && header[6] == "n_test" && header[7] == "n_control";

  SweepFile file;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    if (cells.size() < base.size())
      throw std::invalid_argument("--config: line " + std::to_string(line_no) +
                                  " has too few columns");
    SweepRow row;
    try {
      row.margin = std::stod(cells[0]);
      row.ratio_test = std::stoi(cells[1]);
      row.ratio_control = std::stoi(cells[2]);
      row.p_control = std::stod(cells[3]);
      row.power = std::stod(cells[4]);
      row.alpha = std::stod(cells[5]);
      if (has_sizes && cells.size() >= 8 && !cells[6].empty() && !cells[7].empty()) {
        row.n_test = std::stoi(cells[6]);
        row.n_control = std::stoi(cells[7]);
      }
    } catch (const std::exception&) {
      throw std::invalid_argument("--config: line " + std::to_string(line_no) +
                                  " is not numeric");
    }
    file.rows.push_back(row);
  }
  return file;
}

struct Type1Args {
  std::string config_path;
  std::string out_path;
  std::vector<std::string> method_names;
  int threads = 2;
  bool emit_json = false;
  std::string als_scale = "mn";
};

void print_summary(const SweepResult& result, std::FILE* out) {
  std::fprintf(out, "summary over %d scenario(s):\n",
               result.summary.empty() ? 0 : result.summary.front().count);
  std::fprintf(out, "%-24s", "statistic");
  for (Method m : result.methods) std::fprintf(out, " %8s", method_name(m));
  std::fprintf(out, "\n");
  auto emit_row = [&](const char* label, auto getter) {
    std::fprintf(out, "%-24s", label);
    for (const auto& s : result.summary) {
      const auto v = getter(s);
      if (v.has_value())
        std::fprintf(out, " %8.2f", round_half_up(*v, 2));
      else
        std::fprintf(out, " %8s", "--");
    }
    std::fprintf(out, "\n");
  };
  using OD = std::optional<double>;
  emit_row("% above nominal", [](const MethodSummary& s) { return OD{s.pct_above_nominal}; });
  emit_row("mean |dist| from nominal",
           [](const MethodSummary& s) { return OD{s.mean_distance}; });
  emit_row("range", [](const MethodSummary& s) { return OD{s.range}; });
  emit_row("min", [](const MethodSummary& s) { return OD{s.min_value}; });
  emit_row("max", [](const MethodSummary& s) { return OD{s.max_value}; });
  emit_row("mean of those <= nominal",
           [](const MethodSummary& s) { return s.mean_at_or_below; });
  emit_row("mean of those > nominal", [](const MethodSummary& s) { return s.mean_above; });
}

int cmd_type1(const Type1Args& args) {
  const auto file = read_sweep_csv(args.config_path);
  auto methods = args.method_names.empty()
                     ? std::vector<Method>(reference::kOcMethods.begin(),
                                           reference::kOcMethods.end())
                     : parse_methods(args.method_names);
  if (methods.empty()) throw std::invalid_argument("--methods: method set must not be empty");
  if (file.rows.empty()) throw std::invalid_argument("--config: no scenario rows");

  const auto result = table_sweep(file.rows, methods, args.threads);

  std::ofstream out(args.out_path);
  if (!out) throw std::invalid_argument("--out: cannot open '" + args.out_path + "'");
  out << "delta0,ratio,p_control,n_test,n_control";
  for (Method m : methods) out << "," << method_name(m);
  out << "\n";
  for (const auto& r : result.rows) {
    if (r.skipped) continue;
    char prefix[128];
    std::snprintf(prefix, sizeof prefix, "%g,%d:%d,%g,%d,%d", r.row.margin, r.row.ratio_test,
                  r.row.ratio_control, r.row.p_control, r.n_test, r.n_control);
    out << prefix;
    for (double t : r.type1) out << "," << format_pct(t);
    out << "\n";
  }
  out.close();

  for (const auto& r : result.rows)
    if (r.skipped)
      std::fprintf(stderr, "warning: skipped row (delta0=%g, %d:%d, p_control=%g): %s\n",
                   r.row.margin, r.row.ratio_test, r.row.ratio_control, r.row.p_control,
                   r.note.c_str());

  if (args.emit_json) {
    json doc;
    doc["schema"] = "elscore/1";
    doc["command"] = "type1";
    doc["methods"] = json::array();
    for (Method m : methods) doc["methods"].push_back(method_name(m));
    doc["rows"] = json::array();
    for (const auto& r : result.rows) {
      json o{{"delta0", r.row.margin},
             {"ratio_test", r.row.ratio_test},
             {"ratio_control", r.row.ratio_control},
             {"p_control", r.row.p_control},
             {"skipped", r.skipped}};
      if (!r.skipped) {
        o["n_test"] = r.n_test;
        o["n_control"] = r.n_control;
        o["type1"] = r.type1;
      } else {
        o["note"] = r.note;
      }
      doc["rows"].push_back(o);
    }
    std::cout << doc.dump(2) << "\n";
  } else {
    print_summary(result, stdout);
  }
  return result.skipped_rows > 0 ? kExitValidation : kExitOk;
}

// ---------------------------------------------------------------------------
// power

struct PowerArgs {
  int nt = 0, nc = 0;
  double margin = 0.10, p_test = 0.5, p_control = 0.5, level = 0.95;
  std::vector<std::string> method_names;
  bool emit_json = false;
};

int cmd_power(const PowerArgs& args) {
  if (args.nt < 1) throw std::invalid_argument("--nt: trials must be >= 1");
  if (args.nc < 1) throw std::invalid_argument("--nc: trials must be >= 1");
  validate_margin(args.margin);
  validate_level(args.level);
  auto methods = args.method_names.empty() ? std::vector<Method>{Method::als, Method::els}
                                           : parse_methods(args.method_names);
  if (methods.empty()) throw std::invalid_argument("--methods: method set must not be empty");
  const double a2 = 0.5 * (1.0 - args.level);

  json results = json::array();
  std::printf("exact power at N=%d/%d, margin %s%%, p_test=%g, p_control=%g\n", args.nt, args.nc,
              format_pct(args.margin).c_str(), args.p_test, args.p_control);
  for (Method m : methods) {
    const double power =
        exact_power(m, args.nt, args.nc, args.margin, a2, args.p_test, args.p_control);
    std::printf("%-6s %.4f\n", method_name(m), power);
    results.push_back({{"method", method_name(m)}, {"power", power}});
  }
  if (args.emit_json) {
    json doc{{"schema", "elscore/1"}, {"command", "power"}, {"results", results}};
    std::cout << doc.dump(2) << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// samplesize

struct SampleSizeArgs {
  double margin = 0.10;
  std::string ratio = "1:1";
  double p_control = 0.5;
  double p_test = -1.0;  // defaults to p_control
  double power = 0.80;
  double level = 0.95;
  bool emit_json = false;
};

int cmd_samplesize(const SampleSizeArgs& args) {
  SampleSizeSpec spec;
  spec.margin = args.margin;
  if (!parse_ratio(args.ratio, spec.ratio_test, spec.ratio_control))
    throw std::invalid_argument("--ratio: expected T:C with positive integers, got '" +
                                args.ratio + "'");
  spec.p_control = args.p_control;
  spec.p_test = args.p_test < 0.0 ? args.p_control : args.p_test;
  spec.power = args.power;
  spec.one_sided_alpha = 0.5 * (1.0 - args.level);
  validate(spec);  // rejects alternatives inside the null

  const SampleSize n = fm_sample_size(spec);
  const double als_power = exact_power(Method::als, n.n_test, n.n_control, spec.margin,
                                       spec.one_sided_alpha, spec.p_test, spec.p_control);
  const double els_power = exact_power(Method::els, n.n_test, n.n_control, spec.margin,
                                       spec.one_sided_alpha, spec.p_test, spec.p_control);

  if (args.emit_json) {
    json doc{{"schema", "elscore/1"},
             {"command", "samplesize"},
             {"n_test", n.n_test},
             {"n_control", n.n_control},
             {"exact_power_als", als_power},
             {"exact_power_els", els_power}};
    std::cout << doc.dump(2) << "\n";
    return kExitOk;
  }
  std::printf("sample size (margin %s%%, ratio %s, p_control=%g, p_test=%g, power %g%%):\n",
              format_pct(spec.margin).c_str(), args.ratio.c_str(), spec.p_control, spec.p_test,
              100.0 * spec.power);
  std::printf("  n_test=%d n_control=%d\n", n.n_test, n.n_control);
  std::printf("  exact power at that size: ALS %.4f, ELS %.4f\n", als_power, els_power);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// tables: reproduction suite against the bundled reference values

struct TablesArgs {
  int max_n = 350;
  bool full = false;
  int threads = 2;
};

int cmd_tables(const TablesArgs& args) {
  using namespace elscore::reproduction;
  int failures = 0;

  std::printf("== example analyses ==\n");
  const auto examples = run_reference_examples();
  for (size_t e = 0; e < examples.size(); ++e) {
    const ExampleOutcome& o = examples[e];
    if (!o.ok) ++failures;
    std::printf("example %zu (%d/%d vs %d/%d, margin %s%%): worst CI diff %.4f pp, "
                "p diffs %.5f/%.5f  [%s]  ELS %.2fs\n",
                e + 1, o.spec.x_test, o.spec.n_test, o.spec.x_control, o.spec.n_control,
                format_pct(o.spec.margin).c_str(), o.worst_ci_diff_pp, o.als_p_diff,
                o.els_p_diff, o.ok ? "ok" : "DIFF", o.els_seconds);
  }

  std::printf("== operating characteristic battery (n_test <= %d%s) ==\n", args.max_n,
              args.full ? ", full tier" : "");
  const auto report = run_reference_battery(args.max_n, args.full, args.threads);
  for (const RowOutcome& out : report.rows) {
    char label[96];
    std::snprintf(label, sizeof label, "%d%% d0=%.2f %d:%d p_c=%.2f n=%d", out.row.power_pct,
                  out.row.margin, out.row.ratio_test, out.row.ratio_control, out.row.p_control,
                  out.row.n_test);
    switch (out.status) {
      case RowStatus::skipped_size:
        std::printf("row %-38s skipped: printed size %d does not match design size %d\n", label,
                    out.row.n_test, out.fm_n);
        break;
      case RowStatus::skipped_misaligned:
        std::printf("row %-38s skipped: printed values misaligned with the design label\n",
                    label);
        break;
      case RowStatus::checked: {
        std::string note;
        if (cell_misprinted(out.row, Method::als)) note += " (misprinted cell(s) excluded)";
        if (out.tie_resolved) note += " (within boundary-tie bracket)";
        std::printf("row %-38s worst diff %.4f pp (%s)%s  [%s]\n", label, out.worst_diff_pp,
                    method_name(out.worst_method), note.c_str(), out.ok ? "ok" : "DIFF");
        break;
      }
      case RowStatus::not_selected:
        break;
    }
  }
  std::printf("battery: %d row(s) diffed, %d skipped, worst |diff| %.4f pp\n", report.checked,
              report.skipped, report.worst_diff_pp);

  for (const SummaryOutcome& s : report.summaries)
    std::printf("summary %s over %d rows: %%>2.5 %.1f (ref %.1f), mean dist %.3f (ref %.3f), "
                "min %.2f (ref %.2f), max %.2f (ref %.2f)  [%s]\n",
                method_name(s.method), s.rows, s.pct_above, s.ref_pct_above, s.mean_dist,
                s.ref_mean_dist, s.min_value, s.ref_min, s.max_value, s.ref_max,
                s.ok ? "ok" : "DIFF");

  failures += report.failures;
  if (failures > 0) {
    std::printf("reproduction failures: %d\n", failures);
    return kExitReproDiff;
  }
  std::printf("all reproduction checks passed\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"non-inferiority inference for the difference of two binomial proportions"};
  app.require_subcommand(1);

  AnalyzeArgs analyze_args;
  auto* analyze_cmd =
      app.add_subcommand("analyze", "analyze one observed table with all requested methods");
  analyze_cmd->add_option("--xt", analyze_args.xt, "test arm successes")->required();
  analyze_cmd->add_option("--nt", analyze_args.nt, "test arm size")->required();
  analyze_cmd->add_option("--xc", analyze_args.xc, "control arm successes")->required();
  analyze_cmd->add_option("--nc", analyze_args.nc, "control arm size")->required();
  analyze_cmd->add_option("--margin", analyze_args.margin, "non-inferiority margin in (0,1)")
      ->required();
  analyze_cmd->add_option("--level", analyze_args.level, "two-sided confidence level");
  analyze_cmd->add_option("--methods", analyze_args.method_names,
                          "comma-separated subset of wald,ac,ha,nc,ncc,als,fm,els,es");
  analyze_cmd->add_flag("--json", analyze_args.emit_json, "machine-readable output");
  analyze_cmd->add_flag("--precision-full", analyze_args.full_precision,
                        "12 significant digits instead of presentation rounding");
  analyze_cmd->add_flag("--allow-large-es", analyze_args.allow_large_es,
                        "run ES even when min(N) > 150");

  Type1Args type1_args;
  auto* type1_cmd = app.add_subcommand("type1", "exact type I errors for a scenario sweep");
  type1_cmd->add_option("--config", type1_args.config_path, "sweep CSV")->required();
  type1_cmd->add_option("--out", type1_args.out_path, "results CSV")->required();
  type1_cmd->add_option("--methods", type1_args.method_names, "method subset");
  type1_cmd->add_option("--threads", type1_args.threads, "worker threads");
  type1_cmd->add_flag("--json", type1_args.emit_json, "machine-readable output");

  PowerArgs power_args;
  auto* power_cmd = app.add_subcommand("power", "exact power at a fixed design");
  power_cmd->add_option("--nt", power_args.nt, "test arm size")->required();
  power_cmd->add_option("--nc", power_args.nc, "control arm size")->required();
  power_cmd->add_option("--margin", power_args.margin, "non-inferiority margin")->required();
  power_cmd->add_option("--pt", power_args.p_test, "test arm rate under the alternative")
      ->required();
  power_cmd->add_option("--pc", power_args.p_control, "control arm rate")->required();
  power_cmd->add_option("--level", power_args.level, "two-sided confidence level");
  power_cmd->add_option("--methods", power_args.method_names, "method subset");
  power_cmd->add_flag("--json", power_args.emit_json, "machine-readable output");

  SampleSizeArgs size_args;
  auto* size_cmd = app.add_subcommand("samplesize", "approximate sample size plus exact power");
  size_cmd->add_option("--margin", size_args.margin, "non-inferiority margin")->required();
  size_cmd->add_option("--ratio", size_args.ratio, "allocation ratio T:C");
  size_cmd->add_option("--p-control", size_args.p_control, "control arm rate")->required();
  size_cmd->add_option("--p-test", size_args.p_test, "test arm rate (default: p-control)");
  size_cmd->add_option("--power", size_args.power, "target power in (0,1)")->required();
  size_cmd->add_option("--level", size_args.level, "two-sided confidence level");
  size_cmd->add_flag("--json", size_args.emit_json, "machine-readable output");

  TablesArgs tables_args;
  auto* tables_cmd =
      app.add_subcommand("tables", "reproduce the bundled reference batteries and diff");
  tables_cmd->add_option("--max-n", tables_args.max_n, "largest n_test in the spot tier");
  tables_cmd->add_flag("--full", tables_args.full, "run every row plus distribution summaries");
  tables_cmd->add_option("--threads", tables_args.threads, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (app.got_subcommand(analyze_cmd)) return cmd_analyze(analyze_args);
    if (app.got_subcommand(type1_cmd)) return cmd_type1(type1_args);
    if (app.got_subcommand(power_cmd)) return cmd_power(power_args);
    if (app.got_subcommand(size_cmd)) return cmd_samplesize(size_args);
    if (app.got_subcommand(tables_cmd)) return cmd_tables(tables_args);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::runtime_error& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kExitNumerical;
  }
  return kExitValidation;
}
