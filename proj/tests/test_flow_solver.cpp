#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "curveflow/analysis.hpp"
#include "curveflow/flow_solver.hpp"
#include "test_support.hpp"

using namespace curveflow;
using curveflow::oracle::TrigOracle;
using curveflow::oracle::sample;
using curveflow::oracle::reference_problem;

namespace {

RadiusProfile shifted(const RadiusProfile& rho, double c) {
  std::vector<double> v(rho.values().begin(), rho.values().end());
  for (double& x : v) x += c;
  return RadiusProfile(rho.grid(), std::move(v));
}

FlowProblem with_initial(const FlowProblem& base, RadiusProfile initial) {
  return FlowProblem(std::move(initial), base.target(), base.target_support());
}

SolverConfig config(double dt, double t_end, Scheme scheme = Scheme::etd2) {
  SolverConfig c;
  c.dt = dt;
  c.t_end = t_end;
  c.scheme = scheme;
  return c;
}

}  // namespace

// --- nonlocal term -------------------------------------------------------------

TEST(NonlocalTerm, VanishesAtTarget) {
  const auto problem = reference_problem(256);
  EXPECT_NEAR(nonlocal_term(problem.target(), problem.target()), 0.0, 1e-14);
}

TEST(NonlocalTerm, ConstantShiftGivesMinusShift) {
  const auto problem = reference_problem(256);
  for (double c : {-1.0, 0.5, 3.0}) {
    EXPECT_NEAR(nonlocal_term(shifted(problem.target(), c), problem.target()), -c, 1e-12);
  }
}

TEST(NonlocalTerm, ReferenceProblemMatchesFineQuadratureOracle) {
  const auto problem = reference_problem(512);
  const TrigOracle initial{oracle::reference_initial_spec(), 3};
  const TrigOracle target{oracle::reference_target_spec(), 3};
  const double expected = oracle::nonlocal_oracle(initial, target, 8192);
  EXPECT_NEAR(nonlocal_term(problem.initial(), problem.target()), expected, 1e-9);
}

// --- velocity --------------------------------------------------------------------

TEST(Velocity, FixedPointFamily) {
  const auto problem = reference_problem(256);
  EXPECT_LT(max_abs(velocity(problem.target(), problem.target(), 0.0)), 1e-11);
  const auto up = shifted(problem.target(), 0.75);
  EXPECT_LT(max_abs(velocity(up, problem.target(), -0.75)), 1e-11);
}

TEST(Velocity, LinearizationOfSingleMode) {
  const auto problem = reference_problem(256);
  const auto& g = problem.grid();
  const int k = 4, m = 3;
  auto perturbed = [&](double eps) {
    auto v = sample(g, [&](double t) { return eps * std::sin(k * t / m); });
    for (std::size_t j = 0; j < v.size(); ++j) v[j] += problem.target()[j];
    RadiusProfile rho(g, std::move(v));
    return velocity(rho, problem.target(), nonlocal_term(rho, problem.target()));
  };
  const double eps = 1e-4;
  const auto plus = perturbed(eps);
  const auto minus = perturbed(-eps);
  // Project the centred difference quotient onto sin(k theta / m).
  double coeff = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    coeff += (plus[j] - minus[j]) / (2 * eps) * std::sin(k * g.node(j) / m);
  }
  coeff *= 2.0 / static_cast<double>(g.size());
  EXPECT_NEAR(coeff, -(1.0 + 16.0 / 9.0), 1e-6);
}

// --- step --------------------------------------------------------------------------

TEST(Step, TargetIsFixedForEveryScheme) {
  const auto base = reference_problem(256);
  const auto problem = with_initial(base, base.target());
  for (Scheme s : {Scheme::etd2, Scheme::imex_cn, Scheme::rk4_explicit}) {
    const auto next = step(initial_state(problem), problem, config(1e-4, 1.0, s));
    EXPECT_LT(max_abs_difference(next.rho.values(), problem.target().values()), 1e-12)
        << to_string(s);
    EXPECT_DOUBLE_EQ(next.t, 1e-4);
    EXPECT_EQ(next.step_count, 1);
  }
}

TEST(Step, Etd2AgreesWithFineRk4) {
  const auto problem = reference_problem(512);
  const double dt = 1e-3;
  const auto coarse = step(initial_state(problem), problem, config(dt, 1.0));
  FlowState fine = initial_state(problem);
  const auto rk = config(dt / 100, 1.0, Scheme::rk4_explicit);
  for (int i = 0; i < 100; ++i) fine = step(fine, problem, rk);
  EXPECT_LT(max_abs_difference(coarse.rho.values(), fine.rho.values()), 1e-8);
}

TEST(Step, Etd2LocalErrorIsThirdOrder) {
  const auto problem = reference_problem(512);
  auto error = [&](double dt) {
    const auto coarse = step(initial_state(problem), problem, config(dt, 1.0));
    FlowState fine = initial_state(problem);
    const auto rk = config(dt / 100, 1.0, Scheme::rk4_explicit);
    for (int i = 0; i < 100; ++i) fine = step(fine, problem, rk);
    return max_abs_difference(coarse.rho.values(), fine.rho.values());
  };
  const double ratio = error(2e-3) / error(1e-3);
  EXPECT_GT(ratio, 7.0);
  EXPECT_LT(ratio, 9.0);
}

TEST(Step, PerStepEnergyErrorIsThirdOrder) {
  const auto problem = reference_problem(512);
  const double e0 = elastic_energy(problem.initial());
  auto drift = [&](double dt) {
    const auto next = step(initial_state(problem), problem, config(dt, 1.0));
    return std::abs(elastic_energy(next.rho) - e0);
  };
  const double ratio = drift(1e-2) / drift(5e-3);
  EXPECT_GT(ratio, 6.0);
  EXPECT_LT(ratio, 10.0);
}

TEST(Step, PositivityGuardRaises) {
  const auto problem = reference_problem(256);
  auto c = config(1e-3, 1.0);
  c.positivity_floor = 2.0;
  try {
    (void)step(initial_state(problem), problem, c);
    FAIL() << "expected a positivity violation";
  } catch (const SolverError& e) {
    EXPECT_EQ(e.kind(), SolverFailure::positivity);
    EXPECT_DOUBLE_EQ(e.t(), 1e-3);
  }
}

TEST(Step, UnstableExplicitSchemeIsReported) {
  const auto problem = reference_problem(512);
  FlowState s = initial_state(problem);
  const auto c = config(1e-2, 1.0, Scheme::rk4_explicit);
  EXPECT_THROW(
      {
        for (int i = 0; i < 200; ++i) s = step(s, problem, c);
      },
      SolverError);
}

// --- run ---------------------------------------------------------------------------

TEST(Run, StationaryInitialKeepsEverySnapshot) {
  const auto base = reference_problem(256);
  for (double c : {0.0, 0.5}) {
    const auto problem = with_initial(base, shifted(base.target(), c));
    auto cfg = config(1e-3, 1.0);
    cfg.snapshot_times = {0.0, 0.25, 0.5, 1.0};
    int snapshots = 0;
    run(problem, cfg, [&](const Snapshot& s) {
      ++snapshots;
      EXPECT_LT(max_abs_difference(s.state.rho.values(), problem.initial().values()), 1e-9);
    });
    EXPECT_EQ(snapshots, 4);
  }
}

TEST(Run, SnapshotsUseFirstStepAtOrAfterRequest) {
  const auto problem = reference_problem(256);
  auto cfg = config(0.03, 0.3);
  cfg.energy_drift_abort = 1.0;
  cfg.snapshot_times = {0.0, 0.05, 0.1, 0.3};
  std::vector<double> actual;
  const auto result = run(problem, cfg, [&](const Snapshot& s) { actual.push_back(s.state.t); });
  ASSERT_EQ(actual.size(), 4u);
  EXPECT_DOUBLE_EQ(actual[0], 0.0);
  EXPECT_NEAR(actual[1], 0.06, 1e-12);
  EXPECT_NEAR(actual[2], 0.12, 1e-12);
  EXPECT_NEAR(actual[3], 0.3, 1e-12);
  EXPECT_EQ(result.diagnostics.size(), 11u);
  EXPECT_EQ(result.final_state.step_count, 10);
}

TEST(Run, DiagnosticsAreConsistent) {
  const auto problem = reference_problem(256);
  const auto result = run(problem, config(1e-3, 0.2));
  for (const auto& d : result.diagnostics) {
    EXPECT_TRUE(d.finite());
    EXPECT_NEAR(d.harnack_ratio, d.rho_max / d.rho_min, 1e-12);
    EXPECT_LT(d.closure_defect, 1e-9);
  }
  const auto final_diag = diagnose(result.final_state, problem);
  EXPECT_DOUBLE_EQ(final_diag.energy, result.diagnostics.back().energy);
}

TEST(Run, ReproducesEarlyTableRows) {
  const auto problem = reference_problem(512);
  auto cfg = config(1e-4, 0.2);
  cfg.snapshot_times = {0.01, 0.05, 0.1, 0.2};
  const double expected[4][3] = {{11.44718, 1.7148, 21.1187},
                                 {10.69347, 1.5713, 19.5224},
                                 {9.9949, 1.5175, 17.9135},
                                 {9.0992, 1.5865, 15.6041}};
  int row = 0;
  run(problem, cfg, [&](const Snapshot& s) {
    const auto sum = summarize(s.state.rho);
    EXPECT_NEAR(sum.length / (6 * std::numbers::pi) / expected[row][0], 1.0, 5e-3);
    EXPECT_NEAR(sum.rho_min / expected[row][1], 1.0, 5e-3);
    EXPECT_NEAR(sum.rho_max / expected[row][2], 1.0, 5e-3);
    ++row;
  });
  EXPECT_EQ(row, 4);
}

TEST(Run, FlippedNonlocalSignTripsEnergyAbort) {
  const auto problem = reference_problem(256);
  auto cfg = config(1e-3, 1.0);
  cfg.flip_nonlocal_sign = true;
  try {
    run(problem, cfg);
    FAIL() << "expected energy drift abort";
  } catch (const SolverError& e) {
    EXPECT_EQ(e.kind(), SolverFailure::energy_drift);
    EXPECT_GT(e.t(), 0.0);
  }
}

TEST(Run, ClosureIsPreserved) {
  const auto problem = reference_problem(256);
  const auto result = run(problem, config(1e-3, 1.0));
  const double c0 = result.diagnostics.front().closure_defect;
  for (const auto& d : result.diagnostics) EXPECT_LE(d.closure_defect, c0 + 1e-9);
}

TEST(Run, RejectsInvalidConfig) {
  const auto problem = reference_problem(256);
  EXPECT_THROW(run(problem, config(0.0, 1.0)), ValidationError);
  EXPECT_THROW(run(problem, config(2.0, 1.0)), ValidationError);
  auto c = config(1e-3, 1.0);
  c.snapshot_times = {0.5, 0.2};
  EXPECT_THROW(run(problem, c), ValidationError);
}

// --- support form and beta --------------------------------------------------------

TEST(EvolveSupport, TargetSupportIsStationary) {
  const auto base = reference_problem(256);
  const FlowProblem problem(base.target(), base.target(), base.target_support(),
                            base.target_support());
  const auto p = evolve_support(problem, config(1e-3, 0.5));
  EXPECT_LT(max_abs_difference(p.values(), base.target_support().values()), 1e-10);
}

TEST(EvolveSupport, AgreesWithRadiusForm) {
  const auto problem = reference_problem(512);
  const auto cfg = config(1e-4, 0.3);
  const auto p = evolve_support(problem, cfg);
  const auto rho = run(problem, cfg).final_state.rho;
  EXPECT_LT(max_abs_difference(radius_from_support(p).values(), rho.values()), 1e-6);
}

TEST(EvolveSupport, ApproachesShiftedTargetSupport) {
  const auto problem = reference_problem(256);
  const double c0 = limit_constant(problem.target(), elastic_energy(problem.initial()));
  auto distance = [&](const SupportProfile& p) {
    double out = 0.0;
    for (std::size_t j = 0; j < p.values().size(); ++j) {
      out = std::max(out, std::abs(p[j] - problem.target_support()[j] - c0));
    }
    return out;
  };
  const double d0 = distance(*problem.initial_support());
  const double d1 = distance(evolve_support(problem, config(1e-3, 1.0)));
  const double d4 = distance(evolve_support(problem, config(1e-3, 4.0)));
  EXPECT_LT(d1, d0);
  EXPECT_LT(d4, d1);
  EXPECT_LT(d4, 0.05 * d0);
}

TEST(NormalVelocity, ZeroAtTarget) {
  const auto base = reference_problem(256);
  const auto problem = with_initial(base, base.target());
  EXPECT_LT(max_abs(normal_velocity_diagnostic(initial_state(problem), problem)), 1e-11);
}

TEST(NormalVelocity, MatchesAnalyticBracketAtStart) {
  const auto problem = reference_problem(512);
  const TrigOracle p0{oracle::reference_initial_spec(), 3};
  const TrigOracle pt{oracle::reference_target_spec(), 3};
  const double f0 = oracle::nonlocal_oracle(p0, pt, 8192);
  const auto beta = normal_velocity_diagnostic(initial_state(problem), problem);
  const auto& g = problem.grid();
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double t = g.node(j);
    const double expected = 2 * p0.p(t) - p0.rho(t) - 2 * pt.p(t) + pt.rho(t) + f0;
    EXPECT_NEAR(beta[j], expected, 1e-8);
  }
}

TEST(NormalVelocity, DecaysByTimeFour) {
  const auto problem = reference_problem(512);
  const auto result = run(problem, config(1e-4, 4.0));
  EXPECT_LE(max_abs(normal_velocity_diagnostic(result.final_state, problem)), 0.05);
}

TEST(FlowProblem, Validation) {
  const auto base = reference_problem(256);
  TangentAngleGrid other(3, 128);
  const auto p = eval_trig_support(oracle::reference_target_spec(), other);
  EXPECT_THROW(FlowProblem(base.initial(), radius_from_support(p), p), GridMismatchError);
  // Support inconsistent with the target radius.
  EXPECT_THROW(FlowProblem(base.initial(), base.target(), *base.initial_support()),
               ValidationError);
  TangentAngleGrid g1(1, 64);
  const auto open = RadiusProfile(g1, sample(g1, [](double t) { return 1.0 + 0.1 * std::cos(t); }));
  const auto circle = SupportProfile(g1, std::vector<double>(64, 1.0));
  EXPECT_THROW(FlowProblem(open, radius_from_support(circle), circle), ClosureError);
}
