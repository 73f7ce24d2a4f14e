#pragma once

// The curveflow subcommands. Each returns a process exit status.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "curveflow/analysis.hpp"
#include "curveflow/curve_geometry.hpp"
#include "curveflow/flow_solver.hpp"
#include "curveflow/io.hpp"

namespace curveflow {

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitSolver = 2,
  kExitTolerance = 3,
};

inline FlowProblem build_problem(const SimulationConfig& c) {
  auto initial = resolve_curve(c.initial, c.n, c.base_dir, "initial_curve");
  auto target = resolve_curve(c.target, c.n, c.base_dir, "target_curve");
  SupportProfile target_support =
      target.support ? *target.support
                     : support_from_radius(target.rho, std::nullopt, c.solver.closure_tolerance);
  return FlowProblem(std::move(initial.rho), std::move(target.rho), std::move(target_support),
                     std::move(initial.support), c.solver.closure_tolerance);
}

/// Zero-padded time label; lexical order equals temporal order for t <= t_end.
inline std::string time_label(double t, double t_end) {
  int digits = 1;
  for (double x = std::floor(t_end); x >= 10.0; x /= 10.0) ++digits;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%0*.4f", digits + 5, t);
  return buf;
}

namespace detail {

inline SvgStyle style_for(const OutputConfig& o, const std::string& title) {
  SvgStyle s;
  s.width = s.height = o.svg_size;
  s.stroke = o.svg_stroke;
  s.stroke_width = o.svg_stroke_width;
  s.title = title;
  return s;
}

// Writes snapshot CSVs and SVG frames as they arrive; returns the frame list.
class SnapshotWriter {
public:
  SnapshotWriter(const SimulationConfig& c, const FlowProblem& problem, std::filesystem::path dir)
      : config_(c), problem_(problem), dir_(std::move(dir)) {}

  void operator()(const Snapshot& s) {
    const std::string label = time_label(s.state.t, config_.solver.t_end);
    write_snapshot_csv(dir_ / ("snapshot_t" + label + ".csv"), s.state.rho,
                       problem_.target_support(), config_.solver.closure_tolerance);
    if (config_.outputs.svg) {
      const auto p = support_from_radius(s.state.rho, problem_.target_support(),
                                         config_.solver.closure_tolerance);
      std::ofstream out(dir_ / ("frame_t" + label + ".svg"));
      out << render_svg(curve_from_support(p), style_for(config_.outputs, "t = " + label));
      frames_.push_back("frame_t" + label + ".svg");
    }
    states_.push_back(s.state);
  }

  const std::vector<std::string>& frames() const { return frames_; }
  const std::vector<FlowState>& states() const { return states_; }

private:
  const SimulationConfig& config_;
  const FlowProblem& problem_;
  std::filesystem::path dir_;
  std::vector<std::string> frames_;
  std::vector<FlowState> states_;
};

inline std::filesystem::path prepare_dir(const SimulationConfig& c) {
  std::filesystem::path dir(c.outputs.dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw ValidationError("outputs.dir: cannot create " + dir.string());
  }
  return dir;
}

inline double sup_distance(const RadiusProfile& a, const RadiusProfile& b) {
  return max_abs_difference(a.values(), b.values());
}

inline double max_drift(std::span<const StepDiagnostics> diagnostics) {
  double out = 0.0;
  const double e0 = diagnostics.front().energy;
  for (const auto& d : diagnostics) out = std::max(out, std::abs(d.energy - e0) / e0);
  return out;
}

template <class Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const SolverError& e) {
    err << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ClosureError& e) {
    err << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NoRootError& e) {
    err << "analysis error: " << e.what() << '\n';
    return kExitSolver;
  }
}

}  // namespace detail

inline int cmd_simulate(const SimulationConfig& c, std::ostream& out = std::cout,
                        std::ostream& err = std::cerr) {
  return detail::guarded(err, [&] {
    validate_config(c);
    const auto problem = build_problem(c);
    const auto dir = detail::prepare_dir(c);
    detail::SnapshotWriter writer(c, problem, dir);
    const auto result = run(problem, c.solver, std::ref(writer));
    write_metrics_csv(dir / c.outputs.metrics, result.diagnostics);
    out << "simulate: t_end=" << result.final_state.t << " steps=" << result.final_state.step_count
        << " scheme=" << to_string(c.solver.scheme) << '\n'
        << "  snapshots written: " << writer.states().size() << " (svg frames: "
        << writer.frames().size() << ")\n"
        << "  max relative energy drift: " << detail::max_drift(result.diagnostics) << '\n'
        << "  final sup|rho - rho~|: "
        << detail::sup_distance(result.final_state.rho, problem.target()) << '\n'
        << "  final f: " << result.final_state.f << '\n';
    return kExitOk;
  });
}

inline TableRow table_row(double t, const RadiusProfile& rho) {
  const auto s = summarize(rho);
  return {t, s.length / rho.grid().total_angle(), s.rho_min, s.rho_max, s.elastic_energy};
}

/// The t = +inf row: rho~ + c0 with c0 fixed by the conserved energy.
inline TableRow predicted_limit_row(const FlowProblem& problem) {
  const double energy = elastic_energy(problem.initial());
  const double c0 = limit_constant(problem.target(), energy);
  const auto& target = problem.target();
  return {std::numeric_limits<double>::infinity(),
          (length(target) + c0 * target.grid().total_angle()) / target.grid().total_angle(),
          target.min() + c0, target.max() + c0, shifted_energy(target, c0)};
}

struct CellDeviation {
  double t;
  std::string column;
  double value;
  double reference;
  double relative;
};

/// Relative deviation of every cell that has a reference row at the same t.
inline std::vector<CellDeviation> compare_table(const std::vector<TableRow>& rows,
                                                const std::vector<TableRow>& reference) {
  std::vector<CellDeviation> out;
  for (const auto& ref : reference) {
    for (const auto& row : rows) {
      const bool match = std::isinf(ref.t) ? std::isinf(row.t) : std::abs(row.t - ref.t) < 1e-6;
      if (!match) continue;
      auto cell = [&](const char* name, double v, double r) {
        const double rel = std::abs(v - r) / std::max(std::abs(r), 1e-300);
        out.push_back({ref.t, name, v, r, rel});
      };
      cell("length_ratio", row.length_ratio, ref.length_ratio);
      cell("rho_min", row.rho_min, ref.rho_min);
      cell("rho_max", row.rho_max, ref.rho_max);
      cell("energy", row.energy, ref.energy);
      break;
    }
  }
  return out;
}

struct TableResult {
  std::vector<TableRow> rows;  ///< finite-time rows then the predicted limit row
  std::vector<CellDeviation> deviations;
};

inline TableResult compute_table(const SimulationConfig& c) {
  const auto problem = build_problem(c);
  SolverConfig solver = c.solver;
  solver.snapshot_times = c.table.times.empty() ? c.solver.snapshot_times : c.table.times;
  std::sort(solver.snapshot_times.begin(), solver.snapshot_times.end());
  TableResult result;
  run(problem, solver, [&](const Snapshot& s) {
    result.rows.push_back(table_row(s.requested_t, s.state.rho));
  });
  result.rows.push_back(predicted_limit_row(problem));
  result.deviations = compare_table(result.rows, c.table.reference);
  return result;
}

inline int cmd_table(const SimulationConfig& c, std::ostream& out = std::cout,
                     std::ostream& err = std::cerr) {
  return detail::guarded(err, [&] {
    validate_config(c);
    const int m = c.initial.winding;
    const auto result = compute_table(c);
    const auto dir = detail::prepare_dir(c);

    std::ofstream csv(dir / "table.csv");
    csv << "t,length_ratio,rho_min,rho_max,energy\n";
    const std::string lcol = "L/" + std::to_string(2 * m) + "pi";
    out << std::setw(8) << "t" << std::setw(14) << lcol << std::setw(12) << "rho_min"
        << std::setw(12) << "rho_max" << std::setw(12) << "energy" << '\n';
    for (const auto& r : result.rows) {
      csv << format_number(r.t) << ',' << format_number(r.length_ratio) << ','
          << format_number(r.rho_min) << ',' << format_number(r.rho_max) << ','
          << format_number(r.energy) << '\n';
      std::ostringstream t;
      if (std::isinf(r.t)) t << "+inf"; else t << r.t;
      out << std::setw(8) << t.str() << std::fixed << std::setprecision(5) << std::setw(14)
          << r.length_ratio << std::setprecision(4) << std::setw(12) << r.rho_min << std::setw(12)
          << r.rho_max << std::setw(12) << r.energy << '\n'
          << std::defaultfloat;
    }
    if (c.table.reference.empty()) return kExitOk;

    int failures = 0;
    double worst = 0.0;
    for (const auto& d : result.deviations) {
      worst = std::max(worst, d.relative);
      if (d.relative > c.table.tolerance) {
        ++failures;
        out << "  FAIL t=" << d.t << ' ' << d.column << ": " << d.value << " vs reference "
            << d.reference << " (relative deviation " << d.relative << ")\n";
      }
    }
    out << "compared " << result.deviations.size() << " cells against the reference, worst "
        << "relative deviation " << worst << ", tolerance " << c.table.tolerance << '\n';
    if (failures > 0) {
      out << failures << " cell(s) outside tolerance\n";
      return kExitTolerance;
    }
    return kExitOk;
  });
}

inline int cmd_homotopy(const SimulationConfig& c, std::ostream& out = std::cout,
                        std::ostream& err = std::cerr) {
  return detail::guarded(err, [&] {
    validate_config(c);
    const auto base = build_problem(c);
    const double energy = elastic_energy(base.initial());
    const auto rescaled = rescale_to_match_energy(base.target(), energy);
    std::vector<double> scaled_support(base.target_support().values().begin(),
                                       base.target_support().values().end());
    for (double& v : scaled_support) v *= rescaled.scale;
    const FlowProblem problem(base.initial(), rescaled.profile,
                              SupportProfile(base.grid(), std::move(scaled_support)),
                              base.initial_support(), c.solver.closure_tolerance);

    const auto dir = detail::prepare_dir(c);
    detail::SnapshotWriter writer(c, problem, dir);
    const auto result = run(problem, c.solver, std::ref(writer));
    write_metrics_csv(dir / c.outputs.metrics, result.diagnostics);
    std::ofstream list(dir / "homotopy_frames.txt");
    for (const auto& f : writer.frames()) list << f << '\n';

    out << "homotopy: target rescaled by lambda = " << std::setprecision(10) << rescaled.scale
        << " to elastic energy " << energy << '\n'
        << "  frames: " << writer.states().size() << '\n'
        << "  min rho over run: ";
    double rho_min = std::numeric_limits<double>::infinity();
    for (const auto& d : result.diagnostics) rho_min = std::min(rho_min, d.rho_min);
    out << rho_min << '\n'
        << "  final sup|rho - lambda rho~|: "
        << detail::sup_distance(result.final_state.rho, problem.target()) << '\n'
        << std::defaultfloat;
    return kExitOk;
  });
}

inline int cmd_analyze(const SimulationConfig& c, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
  return detail::guarded(err, [&] {
    validate_config(c);
    const auto problem = build_problem(c);
    const auto result = run(problem, c.solver);
    const auto report = build_report(problem, result.diagnostics, result.final_state);
    const auto balance = length_balance(result.diagnostics, length(problem.target()),
                                        problem.grid().m());
    const auto dir = detail::prepare_dir(c);
    const std::string text = report_key_values(report);
    std::ofstream(dir / "report.txt") << text;
    std::ofstream(dir / "report.csv") << report_csv(report);
    write_metrics_csv(dir / c.outputs.metrics, result.diagnostics);
    out << text << "length_rate_residual_2pim = " << format_number(balance.residual_mfold) << '\n'
        << "length_rate_residual_2pi = " << format_number(balance.residual_single) << '\n';
    return report.bounds_violations.empty() ? kExitOk : kExitTolerance;
  });
}

// --- verify ------------------------------------------------------------------

struct PropertyResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace detail {

template <class Body>
PropertyResult property(const std::string& name, Body&& body) {
  PropertyResult r{name, false, ""};
  try {
    std::ostringstream detail;
    detail << std::setprecision(4);
    r.passed = body(detail);
    r.detail = detail.str();
  } catch (const std::exception& e) {
    r.detail = std::string("error: ") + e.what();
  }
  return r;
}

inline FlowProblem with_initial(const FlowProblem& base, RadiusProfile initial) {
  return FlowProblem(std::move(initial), base.target(), base.target_support());
}

inline RadiusProfile shifted(const RadiusProfile& rho, double c) {
  std::vector<double> v(rho.values().begin(), rho.values().end());
  for (double& x : v) x += c;
  return RadiusProfile(rho.grid(), std::move(v));
}

}  // namespace detail

/// Stationary family: rho~ + c stays put under the configured scheme.
inline PropertyResult verify_stationary_family(const FlowProblem& base, const SolverConfig& cfg,
                                               long steps = 10000) {
  return detail::property("stationary_family", [&](std::ostream& msg) {
    bool ok = true;
    for (double c : {-0.5, 0.0, 0.5, 1.0}) {
      if (base.target().min() + c <= 0.0) continue;
      const auto problem = detail::with_initial(base, detail::shifted(base.target(), c));
      SolverConfig s = cfg;
      s.snapshot_times.clear();
      s.t_end = static_cast<double>(steps) * s.dt;
      const auto result = run(problem, s);
      const double dev = detail::sup_distance(result.final_state.rho, problem.initial());
      msg << "c=" << c << ": " << dev << "; ";
      ok = ok && dev <= 1e-9;
    }
    return ok;
  });
}

/// Energy drift at dt and dt/2: max drift <= 1e-6 and a reduction of at least 4x.
inline PropertyResult verify_energy_conservation(const FlowProblem& problem,
                                                 const SolverConfig& cfg) {
  return detail::property("energy_conservation", [&](std::ostream& msg) {
    SolverConfig s = cfg;
    s.snapshot_times.clear();
    const double coarse = detail::max_drift(run(problem, s).diagnostics);
    s.dt = cfg.dt / 2;
    const double fine = detail::max_drift(run(problem, s).diagnostics);
    const double ratio = fine > 0.0 ? coarse / fine : std::numeric_limits<double>::infinity();
    msg << "drift(dt)=" << coarse << " drift(dt/2)=" << fine << " ratio=" << ratio;
    return coarse <= 1e-6 && ratio >= 4.0;
  });
}

/// Closure and theoretical bounds over every diagnostic step of one run.
inline std::vector<PropertyResult> verify_run_invariants(const FlowProblem& problem,
                                                         const SolverConfig& cfg) {
  std::vector<PropertyResult> out;
  std::optional<RunResult> result;
  std::string failure;
  try {
    SolverConfig s = cfg;
    s.snapshot_times.clear();
    result = run(problem, s);
  } catch (const std::exception& e) {
    failure = e.what();
  }
  out.push_back(detail::property("closure_preservation", [&](std::ostream& msg) {
    if (!result) throw Error(failure);
    const double c0 = result->diagnostics.front().closure_defect;
    double worst = 0.0;
    for (const auto& d : result->diagnostics) worst = std::max(worst, d.closure_defect);
    msg << "initial " << c0 << ", max " << worst;
    return worst <= c0 + 1e-9;
  }));
  out.push_back(detail::property("bound_sweep", [&](std::ostream& msg) {
    if (!result) throw Error(failure);
    const auto violations = check_bounds(result->diagnostics, problem, cfg.closure_tolerance);
    msg << violations.size() << " violation(s) over " << result->diagnostics.size() << " steps";
    for (const auto& v : violations) {
      msg << "; " << v.bound << " at t=" << v.t;
      break;
    }
    return violations.empty();
  }));
  return out;
}

/// Support-form and radius-form integrations agree at t = min(1, t_end).
inline PropertyResult verify_dual_formulation(const FlowProblem& problem, const SolverConfig& cfg) {
  return detail::property("dual_formulation", [&](std::ostream& msg) {
    SolverConfig s = cfg;
    s.snapshot_times.clear();
    s.t_end = std::min(1.0, cfg.t_end);
    const auto radius_run = run(problem, s);
    const auto p = evolve_support(problem, s);
    const double dev = max_abs_difference(radius_from_support(p).values(),
                                          radius_run.final_state.rho.values());
    msg << "t=" << s.t_end << " sup difference " << dev;
    return dev <= 1e-6;
  });
}

/// etd2 and imex_cn at dt = 1e-3 against rk4 at dt = 1e-5, t = 0.1, n = 256.
inline PropertyResult verify_scheme_equivalence(const SimulationConfig& c) {
  return detail::property("scheme_equivalence", [&](std::ostream& msg) {
    SimulationConfig coarse = c;
    coarse.n = 256;
    const auto problem = build_problem(coarse);
    SolverConfig s = c.solver;
    s.snapshot_times.clear();
    s.t_end = 0.1;
    s.scheme = Scheme::rk4_explicit;
    s.dt = 1e-5;
    const auto oracle = run(problem, s).final_state.rho;
    bool ok = true;
    for (Scheme scheme : {Scheme::etd2, Scheme::imex_cn}) {
      s.scheme = scheme;
      s.dt = 1e-3;
      const double dev = detail::sup_distance(run(problem, s).final_state.rho, oracle);
      msg << to_string(scheme) << ": " << dev << "; ";
      ok = ok && dev <= 1e-6;
    }
    return ok;
  });
}

inline std::vector<PropertyResult> verify_all(const SimulationConfig& c) {
  validate_config(c);
  const auto problem = build_problem(c);
  std::vector<PropertyResult> results;
  results.push_back(verify_stationary_family(problem, c.solver));
  results.push_back(verify_energy_conservation(problem, c.solver));
  for (auto& r : verify_run_invariants(problem, c.solver)) results.push_back(std::move(r));
  results.push_back(verify_dual_formulation(problem, c.solver));
  results.push_back(verify_scheme_equivalence(c));
  return results;
}

inline int cmd_verify(const SimulationConfig& c, std::ostream& out = std::cout,
                      std::ostream& err = std::cerr) {
  return detail::guarded(err, [&] {
    const auto results = verify_all(c);
    int failed = 0;
    for (const auto& r : results) {
      out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
      failed += r.passed ? 0 : 1;
    }
    out << (results.size() - static_cast<std::size_t>(failed)) << "/" << results.size()
        << " properties passed\n";
    return failed == 0 ? kExitOk : kExitTolerance;
  });
}

inline int dispatch(const SimulationConfig& c, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  switch (c.mode) {
    case Mode::simulate: return cmd_simulate(c, out, err);
    case Mode::table: return cmd_table(c, out, err);
    case Mode::homotopy: return cmd_homotopy(c, out, err);
    case Mode::verify: return cmd_verify(c, out, err);
    case Mode::analyze: return cmd_analyze(c, out, err);
  }
  return kExitValidation;
}

}  // namespace curveflow
