#pragma once

// Time integration of the elastic-energy-preserving flow in tangent-angle
// form:
//
//   rho_t = rho'' - rho~'' - rho + rho~ - f(t),
//   f = [ int k^2 (rho'' - rho~'') - int k^2 (rho - rho~) ] / int k^2,  k = 1/rho.
//
// With u = rho - rho~ this is u_t = L u - f(t), where L = d^2 - 1 is diagonal
// in Fourier space (L_q = -(1 + (q/m)^2)) and f only forces the mean mode.
// All schemes below advance the Fourier coefficients of u.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "curveflow/curve_geometry.hpp"
#include "curveflow/errors.hpp"
#include "curveflow/spectral.hpp"

namespace curveflow {

enum class Scheme {
  etd2,          ///< exponential midpoint rule, default
  imex_cn,       ///< Crank-Nicolson on L, trapezoidal predictor-corrector on f
  rk4_explicit,  ///< classical RK4 on the full right-hand side; oracle use only
};

inline const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::etd2: return "etd2";
    case Scheme::imex_cn: return "imex_cn";
    case Scheme::rk4_explicit: return "rk4_explicit";
  }
  return "unknown";
}

inline std::optional<Scheme> scheme_from_string(const std::string& s) {
  if (s == "etd2") return Scheme::etd2;
  if (s == "imex_cn") return Scheme::imex_cn;
  if (s == "rk4_explicit") return Scheme::rk4_explicit;
  return std::nullopt;
}

struct SolverConfig {
  double dt = 1e-4;
  double t_end = 4.0;
  Scheme scheme = Scheme::etd2;
  std::vector<double> snapshot_times;
  double energy_drift_abort = 1e-4;
  double positivity_floor = 1e-8;
  double closure_tolerance = kDefaultClosureTolerance;
  /// Debug only: integrates with -f in place of f.
  bool flip_nonlocal_sign = false;

  void validate() const {
    auto fail = [](const std::string& what) { throw ValidationError("solver." + what); };
    if (!(dt > 0.0) || !std::isfinite(dt)) fail("dt: must be positive");
    if (!(t_end > 0.0) || !std::isfinite(t_end)) fail("t_end: must be positive");
    if (dt > t_end) fail("dt: must not exceed t_end");
    if (!std::is_sorted(snapshot_times.begin(), snapshot_times.end())) {
      fail("snapshot_times: must be sorted");
    }
    for (double t : snapshot_times) {
      if (!(t >= 0.0) || t > t_end) fail("snapshot_times: must lie in [0, t_end]");
    }
    if (!(energy_drift_abort > 0.0)) fail("energy_drift_abort: must be positive");
    if (!(positivity_floor > 0.0)) fail("positivity_floor: must be positive");
    if (!(closure_tolerance > 0.0)) fail("closure_tolerance: must be positive");
  }

  bool operator==(const SolverConfig&) const = default;
};

/// Initial and target curves on a shared grid, plus the target support function.
class FlowProblem {
public:
  FlowProblem(RadiusProfile initial, RadiusProfile target, SupportProfile target_support,
              std::optional<SupportProfile> initial_support = {},
              double closure_tolerance = kDefaultClosureTolerance)
      : initial_(std::move(initial)),
        target_(std::move(target)),
        target_support_(std::move(target_support)),
        initial_support_(std::move(initial_support)) {
    require_same_grid(initial_.grid(), target_.grid(), "flow problem (initial vs target)");
    require_same_grid(target_.grid(), target_support_.grid(), "flow problem (target support)");
    for (const auto* rho : {&initial_, &target_}) {
      if (const double d = closure_defect(*rho); d > closure_tolerance) {
        std::ostringstream msg;
        msg << "flow problem: curve does not close (defect " << d << ")";
        throw ClosureError(msg.str(), d);
      }
    }
    check_consistent(target_support_, target_, "target");
    if (initial_support_) {
      require_same_grid(initial_.grid(), initial_support_->grid(), "flow problem (initial support)");
      check_consistent(*initial_support_, initial_, "initial");
    }
  }

  static FlowProblem from_supports(const SupportProfile& initial, const SupportProfile& target) {
    return FlowProblem(radius_from_support(initial), radius_from_support(target), target,
                       initial);
  }

  const TangentAngleGrid& grid() const noexcept { return target_.grid(); }
  const RadiusProfile& initial() const noexcept { return initial_; }
  const RadiusProfile& target() const noexcept { return target_; }
  const SupportProfile& target_support() const noexcept { return target_support_; }
  const std::optional<SupportProfile>& initial_support() const noexcept { return initial_support_; }

private:
  static void check_consistent(const SupportProfile& p, const RadiusProfile& rho,
                               const char* which) {
    const auto induced = radius_from_support(p);
    if (const double err = max_abs_difference(induced.values(), rho.values()); err > 1e-8) {
      std::ostringstream msg;
      msg << "flow problem: " << which << " support does not induce the " << which
          << " radius (max deviation " << err << ")";
      throw ValidationError(msg.str());
    }
  }

  RadiusProfile initial_;
  RadiusProfile target_;
  SupportProfile target_support_;
  std::optional<SupportProfile> initial_support_;
};

struct FlowState {
  double t = 0.0;
  RadiusProfile rho;
  double f = 0.0;  ///< nonlocal term evaluated at rho
  long step_count = 0;
};

struct StepDiagnostics {
  double t = 0.0;
  double f_value = 0.0;
  double energy = 0.0;
  double length = 0.0;
  double rho_min = 0.0;
  double rho_max = 0.0;
  double harnack_ratio = 0.0;
  double closure_defect = 0.0;
  double sup_u = 0.0;
  double sup_u_theta = 0.0;

  bool finite() const {
    for (double v : {t, f_value, energy, length, rho_min, rho_max, harnack_ratio, closure_defect,
                     sup_u, sup_u_theta}) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }
};

enum class SolverFailure { positivity, energy_drift, numerical, closure };

inline const char* to_string(SolverFailure k) {
  switch (k) {
    case SolverFailure::positivity: return "positivity violation";
    case SolverFailure::energy_drift: return "energy drift abort";
    case SolverFailure::numerical: return "numerical failure";
    case SolverFailure::closure: return "closure violation";
  }
  return "unknown";
}

/// Failure during integration; carries the offending time and diagnostics.
class SolverError : public Error {
public:
  SolverError(SolverFailure kind, const std::string& detail, StepDiagnostics diagnostics)
      : Error(format(kind, detail, diagnostics)), kind_(kind), diagnostics_(diagnostics) {}

  SolverFailure kind() const noexcept { return kind_; }
  double t() const noexcept { return diagnostics_.t; }
  const StepDiagnostics& diagnostics() const noexcept { return diagnostics_; }

private:
  static std::string format(SolverFailure kind, const std::string& detail,
                            const StepDiagnostics& d) {
    std::ostringstream msg;
    msg << to_string(kind) << " at t=" << d.t << ": " << detail << " (rho_min=" << d.rho_min
        << ", rho_max=" << d.rho_max << ", energy=" << d.energy << ", f=" << d.f_value << ")";
    return msg.str();
  }

  SolverFailure kind_;
  StepDiagnostics diagnostics_;
};

namespace detail {

/// f from the perturbation u = rho - rho~ and its second derivative.
inline double nonlocal_from_perturbation(std::span<const double> rho, std::span<const double> u,
                                         std::span<const double> u_tt) {
  double weighted_tt = 0.0, weighted_u = 0.0, weight = 0.0;
  for (std::size_t j = 0; j < rho.size(); ++j) {
    const double k2 = 1.0 / (rho[j] * rho[j]);
    weighted_tt += k2 * u_tt[j];
    weighted_u += k2 * u[j];
    weight += k2;
  }
  // The grid spacing cancels between numerator and denominator.
  return (weighted_tt - weighted_u) / weight;
}

// Spectral workspace shared by the radius and support formulations: both
// evolve with the same diagonal operator and forcing.
class FlowKernel {
public:
  explicit FlowKernel(const RadiusProfile& target)
      : grid_(target.grid()),
        target_(target.values().begin(), target.values().end()),
        omega2_(grid_.size() / 2 + 1),
        linear_(grid_.size() / 2 + 1) {
    for (std::size_t q = 0; q < omega2_.size(); ++q) {
      const double w = grid_.frequency(static_cast<int>(q));
      omega2_[q] = w * w;
      linear_[q] = -(1.0 + w * w);
    }
  }

  const TangentAngleGrid& grid() const noexcept { return grid_; }
  std::span<const double> target() const noexcept { return target_; }
  std::span<const double> linear() const noexcept { return linear_; }
  std::size_t modes() const noexcept { return linear_.size(); }

  /// f for the perturbation with Fourier coefficients `u_hat`.
  double nonlocal(std::span<const Complex> u_hat, std::vector<double>* rho_out = nullptr) const {
    const std::size_t n = grid_.size();
    std::vector<Complex> tt(u_hat.begin(), u_hat.end());
    for (std::size_t q = 0; q < tt.size(); ++q) tt[q] *= -omega2_[q];
    const auto u = irfft(u_hat, n);
    const auto u_tt = irfft(tt, n);
    std::vector<double> rho(n);
    for (std::size_t j = 0; j < n; ++j) rho[j] = target_[j] + u[j];
    const double f = nonlocal_from_perturbation(rho, u, u_tt);
    if (rho_out) *rho_out = std::move(rho);
    return f;
  }

  /// Advances u_hat by dt under u_t = L u - sign*f(u), where `nonlocal_of`
  /// maps the advanced coefficients to f.
  template <class NonlocalFn>
  std::vector<Complex> advance(std::span<const Complex> c, double dt, Scheme scheme,
                               NonlocalFn&& nonlocal_of) const {
    const double n = static_cast<double>(grid_.size());
    // Forcing -f acts on the mean only; in unnormalized DFT units it is -f*n.
    auto forcing = [&](std::span<const Complex> state) { return -nonlocal_of(state) * n; };
    std::vector<Complex> out(c.begin(), c.end());

    switch (scheme) {
      case Scheme::etd2: {
        const double f0 = forcing(c);
        std::vector<Complex> half(c.begin(), c.end());
        for (std::size_t q = 0; q < half.size(); ++q) half[q] *= std::exp(linear_[q] * dt / 2);
        half[0] += 0.5 * dt * phi1(linear_[0] * dt / 2) * f0;
        const double fm = forcing(half);
        for (std::size_t q = 0; q < out.size(); ++q) out[q] *= std::exp(linear_[q] * dt);
        out[0] += dt * phi1(linear_[0] * dt) * fm;
        break;
      }
      case Scheme::imex_cn: {
        const double f0 = forcing(c);
        std::vector<Complex> base(c.size());
        for (std::size_t q = 0; q < c.size(); ++q) {
          base[q] = c[q] * (1.0 + 0.5 * dt * linear_[q]) / (1.0 - 0.5 * dt * linear_[q]);
        }
        const double b0 = dt / (1.0 - 0.5 * dt * linear_[0]);
        std::vector<Complex> predicted = base;
        predicted[0] += b0 * f0;
        const double f1 = forcing(predicted);
        out = std::move(base);
        out[0] += b0 * 0.5 * (f0 + f1);
        break;
      }
      case Scheme::rk4_explicit: {
        auto rhs = [&](std::span<const Complex> state) {
          std::vector<Complex> d(state.size());
          for (std::size_t q = 0; q < state.size(); ++q) d[q] = linear_[q] * state[q];
          d[0] += forcing(state);
          return d;
        };
        auto axpy = [](std::span<const Complex> x, double a, const std::vector<Complex>& y) {
          std::vector<Complex> r(x.begin(), x.end());
          for (std::size_t q = 0; q < r.size(); ++q) r[q] += a * y[q];
          return r;
        };
        const auto k1 = rhs(c);
        const auto k2 = rhs(axpy(c, dt / 2, k1));
        const auto k3 = rhs(axpy(c, dt / 2, k2));
        const auto k4 = rhs(axpy(c, dt, k3));
        for (std::size_t q = 0; q < out.size(); ++q) {
          out[q] += dt / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]);
        }
        break;
      }
    }
    return out;
  }

  static double phi1(double z) {
    if (std::abs(z) < 1e-8) return 1.0 + z / 2.0;
    return std::expm1(z) / z;
  }

private:
  TangentAngleGrid grid_;
  std::vector<double> target_;
  std::vector<double> omega2_;
  std::vector<double> linear_;
};

inline StepDiagnostics diagnose_values(double t, double f, std::span<const double> rho,
                                       const TangentAngleGrid& grid,
                                       std::span<const double> target) {
  StepDiagnostics d;
  d.t = t;
  d.f_value = f;
  const std::size_t n = rho.size();
  std::vector<double> u(n);
  double inv = 0.0, sum = 0.0;
  d.rho_min = std::numeric_limits<double>::infinity();
  d.rho_max = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    u[j] = rho[j] - target[j];
    inv += 1.0 / rho[j];
    sum += rho[j];
    d.rho_min = std::min(d.rho_min, rho[j]);
    d.rho_max = std::max(d.rho_max, rho[j]);
  }
  d.energy = grid.spacing() * inv;
  d.length = grid.spacing() * sum;
  d.harnack_ratio = d.rho_max / d.rho_min;
  d.sup_u = max_abs(u);
  d.sup_u_theta = max_abs(derivative(grid, u, 1));
  // Closure integrals are the frequency-1 Fourier mode of rho.
  const auto coeffs = rfft(rho);
  d.closure_defect = grid.spacing() * std::abs(coeffs[static_cast<std::size_t>(grid.m())]);
  return d;
}

}  // namespace detail

/// The nonlocal term f for the current radius against the target.
inline double nonlocal_term(const RadiusProfile& rho, const RadiusProfile& target) {
  require_same_grid(rho.grid(), target.grid(), "nonlocal_term");
  const auto& g = rho.grid();
  const auto rho_tt = derivative(g, rho.values(), 2);
  const auto target_tt = derivative(g, target.values(), 2);
  std::vector<double> u(g.size()), u_tt(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) {
    u[j] = rho[j] - target[j];
    u_tt[j] = rho_tt[j] - target_tt[j];
  }
  return detail::nonlocal_from_perturbation(rho.values(), u, u_tt);
}

/// Right-hand side rho'' - rho~'' - rho + rho~ - f, node-wise.
inline std::vector<double> velocity(const RadiusProfile& rho, const RadiusProfile& target,
                                    double f) {
  require_same_grid(rho.grid(), target.grid(), "velocity");
  const auto& g = rho.grid();
  const auto rho_tt = derivative(g, rho.values(), 2);
  const auto target_tt = derivative(g, target.values(), 2);
  std::vector<double> out(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) {
    out[j] = rho_tt[j] - target_tt[j] - rho[j] + target[j] - f;
  }
  return out;
}

inline FlowState initial_state(const FlowProblem& problem) {
  return {0.0, problem.initial(), nonlocal_term(problem.initial(), problem.target()), 0};
}

inline StepDiagnostics diagnose(const FlowState& state, const FlowProblem& problem) {
  return detail::diagnose_values(state.t, state.f, state.rho.values(), problem.grid(),
                                 problem.target().values());
}

namespace detail {

inline FlowState step_with(const FlowKernel& kernel, const FlowState& state,
                           const SolverConfig& config) {
  const auto& g = kernel.grid();
  const std::size_t n = g.size();
  std::vector<double> u(n);
  for (std::size_t j = 0; j < n; ++j) u[j] = state.rho[j] - kernel.target()[j];
  const double sign = config.flip_nonlocal_sign ? -1.0 : 1.0;
  auto f_of = [&](std::span<const Complex> c) { return sign * kernel.nonlocal(c); };
  const auto advanced = kernel.advance(rfft(u), config.dt, config.scheme, f_of);

  std::vector<double> rho;
  const double f = kernel.nonlocal(advanced, &rho);
  const long steps = state.step_count + 1;
  const double t = static_cast<double>(steps) * config.dt;

  bool finite = std::isfinite(f);
  for (double v : rho) finite = finite && std::isfinite(v);
  const double rho_min = *std::min_element(rho.begin(), rho.end());
  if (!finite || rho_min <= config.positivity_floor) {
    auto d = diagnose_values(t, f, rho, g, kernel.target());
    if (!finite) throw SolverError(SolverFailure::numerical, "non-finite state", d);
    std::ostringstream msg;
    msg << "rho_min " << rho_min << " fell below floor " << config.positivity_floor;
    throw SolverError(SolverFailure::positivity, msg.str(), d);
  }
  return {t, RadiusProfile(g, std::move(rho)), f, steps};
}

}  // namespace detail

/// Advances the state by one time step of the configured scheme.
inline FlowState step(const FlowState& state, const FlowProblem& problem,
                      const SolverConfig& config) {
  require_same_grid(state.rho.grid(), problem.grid(), "step");
  detail::FlowKernel kernel(problem.target());
  return detail::step_with(kernel, state, config);
}

struct Snapshot {
  double requested_t = 0.0;
  FlowState state;
};

using SnapshotSink = std::function<void(const Snapshot&)>;

struct RunResult {
  FlowState final_state;
  std::vector<StepDiagnostics> diagnostics;
};

inline long step_count_for(const SolverConfig& config) {
  const double ratio = config.t_end / config.dt;
  const long rounded = std::lround(ratio);
  if (std::abs(ratio - static_cast<double>(rounded)) < 1e-9 * std::max(1.0, ratio)) {
    return rounded;
  }
  return static_cast<long>(std::ceil(ratio));
}

/// Integrates from t = 0 to t_end. Diagnostics are recorded for the initial
/// state and every accepted step; snapshots go to `sink` at the first step
/// with t >= each requested time.
inline RunResult run(const FlowProblem& problem, const SolverConfig& config,
                     const SnapshotSink& sink = {}) {
  config.validate();
  detail::FlowKernel kernel(problem.target());
  FlowState state = initial_state(problem);
  RunResult result{state, {}};
  const long total = step_count_for(config);
  result.diagnostics.reserve(static_cast<std::size_t>(total) + 1);

  std::size_t next_snapshot = 0;
  const double slack = 1e-9 * config.dt;
  auto emit_snapshots = [&](const FlowState& s) {
    while (next_snapshot < config.snapshot_times.size() &&
           s.t >= config.snapshot_times[next_snapshot] - slack) {
      if (sink) sink(Snapshot{config.snapshot_times[next_snapshot], s});
      ++next_snapshot;
    }
  };

  auto accept = [&](const FlowState& s, double energy0) {
    auto d = diagnose(s, problem);
    if (!d.finite()) throw SolverError(SolverFailure::numerical, "non-finite diagnostics", d);
    if (energy0 > 0.0) {
      const double drift = std::abs(d.energy - energy0) / energy0;
      if (drift > config.energy_drift_abort) {
        std::ostringstream msg;
        msg << "relative energy drift " << drift << " exceeds " << config.energy_drift_abort;
        throw SolverError(SolverFailure::energy_drift, msg.str(), d);
      }
    }
    if (d.closure_defect > config.closure_tolerance) {
      std::ostringstream msg;
      msg << "closure defect " << d.closure_defect << " exceeds " << config.closure_tolerance;
      throw SolverError(SolverFailure::closure, msg.str(), d);
    }
    result.diagnostics.push_back(d);
    emit_snapshots(s);
  };

  accept(state, 0.0);
  const double energy0 = result.diagnostics.front().energy;
  for (long k = 0; k < total; ++k) {
    state = detail::step_with(kernel, state, config);
    accept(state, energy0);
  }
  result.final_state = std::move(state);
  return result;
}

/// Integrates the support-function form p_t = p'' - p + 2p~ - rho~ - f with
/// the same scheme; f is computed from rho = p + p''.
inline SupportProfile evolve_support(const FlowProblem& problem, const SolverConfig& config) {
  config.validate();
  const auto& g = problem.grid();
  const std::size_t n = g.size();
  const SupportProfile p0 =
      problem.initial_support() ? *problem.initial_support()
                                : support_from_radius(problem.initial(), std::nullopt,
                                                      config.closure_tolerance);
  const auto& pt = problem.target_support();

  // w = p - p~ obeys w_t = w'' - w - f, and u = w + w''.
  std::vector<double> w(n);
  for (std::size_t j = 0; j < n; ++j) w[j] = p0[j] - pt[j];
  auto w_hat = rfft(w);

  detail::FlowKernel kernel(problem.target());
  std::vector<double> to_radius(kernel.modes());
  for (std::size_t q = 0; q < to_radius.size(); ++q) {
    const double om = g.frequency(static_cast<int>(q));
    to_radius[q] = 1.0 - om * om;
  }
  const double sign = config.flip_nonlocal_sign ? -1.0 : 1.0;
  auto f_of = [&](std::span<const Complex> c) {
    std::vector<Complex> u_hat(c.begin(), c.end());
    for (std::size_t q = 0; q < u_hat.size(); ++q) u_hat[q] *= to_radius[q];
    return sign * kernel.nonlocal(u_hat);
  };

  const long total = step_count_for(config);
  for (long k = 0; k < total; ++k) {
    w_hat = kernel.advance(w_hat, config.dt, config.scheme, f_of);
    std::vector<Complex> u_hat(w_hat);
    for (std::size_t q = 0; q < u_hat.size(); ++q) u_hat[q] *= to_radius[q];
    std::vector<double> rho;
    const double f = kernel.nonlocal(u_hat, &rho);
    const double rho_min = *std::min_element(rho.begin(), rho.end());
    if (!std::isfinite(f) || !std::isfinite(rho_min) || rho_min <= config.positivity_floor) {
      const double t = static_cast<double>(k + 1) * config.dt;
      auto d = detail::diagnose_values(t, f, rho, g, kernel.target());
      throw SolverError(std::isfinite(rho_min) ? SolverFailure::positivity
                                               : SolverFailure::numerical,
                        "support-form integration", d);
    }
  }
  auto p = irfft(w_hat, n);
  for (std::size_t j = 0; j < n; ++j) p[j] += pt[j];
  return SupportProfile(g, std::move(p));
}

/// Normal speed beta = 2p - rho - 2p~ + rho~ + f, with p gauged against p~.
inline std::vector<double> normal_velocity_diagnostic(const FlowState& state,
                                                      const FlowProblem& problem) {
  require_same_grid(state.rho.grid(), problem.grid(), "normal_velocity_diagnostic");
  const auto p = support_from_radius(state.rho, problem.target_support());
  const auto& pt = problem.target_support();
  const auto& rt = problem.target();
  const double f = nonlocal_term(state.rho, rt);
  std::vector<double> beta(problem.grid().size());
  for (std::size_t j = 0; j < beta.size(); ++j) {
    beta[j] = 2.0 * p[j] - state.rho[j] - 2.0 * pt[j] + rt[j] + f;
  }
  return beta;
}

}  // namespace curveflow
