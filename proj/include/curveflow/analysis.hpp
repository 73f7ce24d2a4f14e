#pragma once

// Post-hoc checks of a completed flow against the convergence theory: the
// limit constant c0, exponential decay of u_theta, the Harnack bound and the
// curve-to-curve distance modulo translation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "curveflow/curve_geometry.hpp"
#include "curveflow/errors.hpp"
#include "curveflow/flow_solver.hpp"

namespace curveflow {

struct BoundViolation {
  double t = 0.0;
  std::string bound;
  double margin = 0.0;  ///< how far past the bound, in the bound's own units
};

struct ConvergenceReport {
  double c0_predicted = 0.0;
  double c0_observed = 0.0;
  double sup_distance_to_limit = 0.0;
  double decay_slope_fit = 0.0;
  bool decay_fit_truncated = false;
  double f_terminal = 0.0;
  double energy_drift = 0.0;
  double harnack_bound = 0.0;
  std::vector<BoundViolation> bounds_violations;
};

/// Energy of the shifted profile rho~ + c: integral dtheta / (rho~ + c).
inline double shifted_energy(const RadiusProfile& target, double c) {
  double sum = 0.0;
  for (double v : target.values()) sum += 1.0 / (v + c);
  return target.grid().spacing() * sum;
}

/// Solves energy = integral dtheta / (rho~ + c0) for c0 by bisection. The
/// right side decreases strictly in c on (-min rho~, inf).
inline double limit_constant(const RadiusProfile& target, double energy) {
  if (!(energy > 0.0) || !std::isfinite(energy)) {
    throw NoRootError("limit_constant: energy must be positive and finite");
  }
  const double rho_min = target.min();
  const double delta = 1e-9 * rho_min;
  double lo = -rho_min + delta;
  auto residual = [&](double c) { return shifted_energy(target, c) - energy; };
  if (residual(lo) <= 0.0) {
    std::ostringstream msg;
    msg << "limit_constant: energy " << energy << " exceeds the attainable maximum "
        << shifted_energy(target, lo);
    throw NoRootError(msg.str());
  }
  double hi = std::max(1.0, std::abs(lo));
  int expansions = 0;
  while (residual(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (++expansions > 2000) throw NoRootError("limit_constant: bracket expansion failed");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (residual(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::abs(residual(lo)) < std::abs(residual(hi)) ? lo : hi;
}

struct DecayFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t points = 0;
  bool truncated = false;  ///< sup|u_theta| underflowed; only the prefix was fitted
};

/// Least-squares slope of log sup|u_theta| against t over t >= t_min.
inline DecayFit decay_fit(std::span<const StepDiagnostics> diagnostics, double t_min = 1.0) {
  DecayFit fit;
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  for (const auto& d : diagnostics) {
    if (d.t < t_min) continue;
    if (!(d.sup_u_theta > std::numeric_limits<double>::min())) {
      fit.truncated = true;
      break;
    }
    const double y = std::log(d.sup_u_theta);
    st += d.t;
    sy += y;
    stt += d.t * d.t;
    sty += d.t * y;
    ++fit.points;
  }
  if (fit.points < 2) {
    throw ValidationError("decay_fit: fewer than two usable diagnostics at t >= t_min");
  }
  const double n = static_cast<double>(fit.points);
  const double denom = n * stt - st * st;
  fit.slope = (n * sty - st * sy) / denom;
  fit.intercept = (sy - fit.slope * st) / n;
  return fit;
}

/// M1 = sup|rho~'| + sup|u'(., 0)|, evaluated on the grid.
inline double harnack_constant(const FlowProblem& problem) {
  const auto& g = problem.grid();
  const auto target_t = derivative(g, problem.target().values(), 1);
  std::vector<double> u(g.size());
  for (std::size_t j = 0; j < u.size(); ++j) u[j] = problem.initial()[j] - problem.target()[j];
  return max_abs(target_t) + max_abs(derivative(g, u, 1));
}

/// H = exp(M1 * E): a time-uniform bound on rho_max / rho_min.
inline double theoretical_harnack_bound(const FlowProblem& problem) {
  return std::exp(harnack_constant(problem) * elastic_energy(problem.initial()));
}

namespace detail {

struct Circle {
  Point2 center;
  double radius = 0.0;
};

inline bool contains(const Circle& c, Point2 p) {
  return norm(p - c.center) <= c.radius * (1.0 + 1e-12) + 1e-300;
}

inline Circle circle_from(Point2 a, Point2 b) {
  const Point2 c = 0.5 * (a + b);
  return {c, norm(a - c)};
}

inline Circle circle_from(Point2 a, Point2 b, Point2 c) {
  const double bx = b.x - a.x, by = b.y - a.y;
  const double cx = c.x - a.x, cy = c.y - a.y;
  const double d = 2.0 * (bx * cy - by * cx);
  if (std::abs(d) < 1e-300) {
    // Collinear: the widest pair spans the circle.
    Circle best = circle_from(a, b);
    for (const auto& cand : {circle_from(a, c), circle_from(b, c)}) {
      if (cand.radius > best.radius) best = cand;
    }
    return best;
  }
  const double b2 = bx * bx + by * by, c2 = cx * cx + cy * cy;
  const Point2 center{a.x + (cy * b2 - by * c2) / d, a.y + (bx * c2 - cx * b2) / d};
  return {center, norm(a - center)};
}

/// Smallest enclosing circle (Welzl, iterative). Deterministic shuffle.
inline Circle min_enclosing_circle(std::vector<Point2> pts) {
  std::mt19937 rng(12345);
  std::shuffle(pts.begin(), pts.end(), rng);
  Circle c{pts.front(), 0.0};
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (contains(c, pts[i])) continue;
    c = {pts[i], 0.0};
    for (std::size_t j = 0; j < i; ++j) {
      if (contains(c, pts[j])) continue;
      c = circle_from(pts[i], pts[j]);
      for (std::size_t k = 0; k < j; ++k) {
        if (!contains(c, pts[k])) c = circle_from(pts[i], pts[j], pts[k]);
      }
    }
  }
  return c;
}

}  // namespace detail

/// min over translations v of max_j |a_j - b_j - v|. The centroid shift is the
/// starting guess; the Chebyshev center of the differences is the optimum.
inline double curve_distance_mod_translation(const PlaneCurve& a, const PlaneCurve& b) {
  require_same_grid(a.grid(), b.grid(), "curve_distance_mod_translation");
  std::vector<Point2> diff(a.points().size());
  Point2 centroid;
  for (std::size_t j = 0; j < diff.size(); ++j) {
    diff[j] = a[j] - b[j];
    centroid = centroid + diff[j];
  }
  centroid = (1.0 / static_cast<double>(diff.size())) * centroid;
  double from_centroid = 0.0;
  for (const auto& d : diff) from_centroid = std::max(from_centroid, norm(d - centroid));
  const auto circle = detail::min_enclosing_circle(diff);
  return std::min(from_centroid, circle.radius);
}

/// Residuals of dL/dt = -L + L~ - (2 pi m) f and of the variant with 2 pi,
/// estimated by centred differences along the diagnostics.
struct LengthBalance {
  double residual_mfold = 0.0;
  double residual_single = 0.0;
};

inline LengthBalance length_balance(std::span<const StepDiagnostics> diagnostics,
                                    double target_length, int m) {
  LengthBalance out;
  for (std::size_t i = 1; i + 1 < diagnostics.size(); ++i) {
    const auto& prev = diagnostics[i - 1];
    const auto& next = diagnostics[i + 1];
    const auto& d = diagnostics[i];
    const double rate = (next.length - prev.length) / (next.t - prev.t);
    const double base = -d.length + target_length;
    out.residual_mfold =
        std::max(out.residual_mfold, std::abs(rate - (base - kTwoPi * m * d.f_value)));
    out.residual_single = std::max(out.residual_single, std::abs(rate - (base - kTwoPi * d.f_value)));
  }
  return out;
}

/// Sweeps every diagnostic row against the Harnack bound, the energy
/// sandwich rho_min <= 2 pi m / E <= rho_max, the positivity lower bound
/// 2 pi m / (E H) and the closure tolerance.
inline std::vector<BoundViolation> check_bounds(std::span<const StepDiagnostics> diagnostics,
                                                const FlowProblem& problem,
                                                double closure_tolerance = kDefaultClosureTolerance) {
  const double harnack = theoretical_harnack_bound(problem);
  const double energy0 = elastic_energy(problem.initial());
  const double total_angle = problem.grid().total_angle();
  const double positivity_floor = total_angle / (energy0 * harnack);
  std::vector<BoundViolation> out;
  for (const auto& d : diagnostics) {
    if (d.harnack_ratio > harnack) out.push_back({d.t, "harnack", d.harnack_ratio - harnack});
    const double mean_radius = total_angle / d.energy;
    // Round-off allowance for the sandwich, which is tight for circles.
    const double slack = 1e-12 * mean_radius;
    if (d.rho_min > mean_radius + slack) {
      out.push_back({d.t, "energy_sandwich_lower", d.rho_min - mean_radius});
    }
    if (d.rho_max < mean_radius - slack) {
      out.push_back({d.t, "energy_sandwich_upper", mean_radius - d.rho_max});
    }
    if (!(d.rho_min > 0.0) || d.rho_min < positivity_floor) {
      out.push_back({d.t, "positivity", positivity_floor - d.rho_min});
    }
    if (d.closure_defect > closure_tolerance) {
      out.push_back({d.t, "closure", d.closure_defect - closure_tolerance});
    }
  }
  return out;
}

inline ConvergenceReport build_report(const FlowProblem& problem,
                                      std::span<const StepDiagnostics> diagnostics,
                                      const FlowState& final_state, double decay_t_min = 1.0) {
  ConvergenceReport report;
  const auto& target = problem.target();
  report.c0_predicted = limit_constant(target, elastic_energy(problem.initial()));
  const std::size_t n = target.grid().size();
  double mean = 0.0, sup = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double diff = final_state.rho[j] - target[j];
    mean += diff;
    sup = std::max(sup, std::abs(diff - report.c0_predicted));
  }
  report.c0_observed = mean / static_cast<double>(n);
  report.sup_distance_to_limit = sup;
  report.f_terminal = final_state.f;
  report.harnack_bound = theoretical_harnack_bound(problem);

  if (!diagnostics.empty()) {
    const double e0 = diagnostics.front().energy;
    for (const auto& d : diagnostics) {
      report.energy_drift = std::max(report.energy_drift, std::abs(d.energy - e0) / e0);
    }
    // Short runs fit over their second half; stationary runs have nothing to fit.
    const double t_min = std::min(decay_t_min, 0.5 * diagnostics.back().t);
    try {
      const auto fit = decay_fit(diagnostics, t_min);
      report.decay_slope_fit = fit.slope;
      report.decay_fit_truncated = fit.truncated;
    } catch (const ValidationError&) {
      report.decay_slope_fit = 0.0;
      report.decay_fit_truncated = true;
    }
  }
  report.bounds_violations = check_bounds(diagnostics, problem);
  return report;
}

}  // namespace curveflow
