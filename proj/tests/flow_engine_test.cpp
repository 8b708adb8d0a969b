#include "ckrf/errors.hpp"
#include "ckrf/flow_engine.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace ckrf;

namespace {

KEProblem product_problem(int n, double eps) { return make_problem(FibrationModel{}, Grid(n), eps); }

KEProblem identity_problem(int n, double eps) {
    KEProblem p = product_problem(n, eps);
    p.F.log_F = p.bg.q_r.map([&](double q) { return (1.0 - p.beta) * std::log(q + eps * eps); });
    return p;
}

FlowState at(const ScalarField& phi, const KEProblem& p, double dt) { return {phi, 0.0, p.epsilon, dt}; }

Mask q_mask(const KEProblem& p, double threshold) {
    Mask m(p.bg.grid);
    for (std::size_t k = 0; k < m.on.size(); ++k) m.on[k] = p.bg.q_r[k] >= threshold;
    return m;
}

// Backward Euler from phi = 0 to t = 0.1 with `steps` steps.
ScalarField be_to(const KEProblem& p, int steps) {
    FlowState s = at(ScalarField(p.bg.grid), p, 0.1 / steps);
    for (int k = 0; k < steps; ++k) s = step(s, p, Scheme::backward_euler_newton);
    return s.phi;
}

} // namespace

TEST(ReducedRhs, VanishesAtKESolution) {
    const KEProblem p = product_problem(64, 0.1);
    const KESolution sol = newton_solve(p, ScalarField(p.bg.grid));
    EXPECT_LE(reduced_rhs(at(sol.phi, p, 0.05), p).sup_norm(), 1e-8);
}

TEST(ReducedRhs, ConstantShiftLowersRhsByTheShift) {
    const KEProblem p = product_problem(64, 0.1);
    const ScalarField phi = ScalarField::from_function(p.bg.grid, [](Point s) { return 0.05 * std::sin(2 * std::numbers::pi * s.x); });
    const ScalarField r0 = reduced_rhs(at(phi, p, 0.05), p);
    const ScalarField r1 = reduced_rhs(at(phi + 0.3, p, 0.05), p);
    EXPECT_LE((r0 - r1 + (-0.3)).sup_norm(), 1e-11);
}

TEST(ReducedRhs, IdentityCaseFormula) {
    const KEProblem p = identity_problem(64, 0.1);
    const ScalarField chi = cone_potential(p);
    ScalarField expected = log(laplacian(chi).map([&](double l) { return 1.0 + l / (2.0 * p.bg.A); })) - chi;
    EXPECT_LE((reduced_rhs(at(ScalarField(p.bg.grid), p, 0.05), p) - expected).sup_norm(), 1e-12);
}

TEST(ReducedRhs, RejectsNonpositiveDensity) {
    const KEProblem p = product_problem(32, 0.1);
    const ScalarField bad = ScalarField::from_function(p.bg.grid, [](Point s) { return 10.0 * std::cos(2 * std::numbers::pi * s.x); });
    EXPECT_THROW(reduced_rhs(at(bad, p, 0.05), p), PositivityError);
}

TEST(Step, StationaryStateIsFixed) {
    const KEProblem p = product_problem(64, 0.1);
    const KESolution sol = newton_solve(p, ScalarField(p.bg.grid));
    for (Scheme sc : {Scheme::backward_euler_newton}) {
        const FlowState next = step(at(sol.phi, p, 0.1), p, sc);
        EXPECT_LE((next.phi - sol.phi).sup_norm(), 1e-8);
    }
}

TEST(Step, BackwardEulerMatchesRk4AtGuardLimit) {
    // The guard caps dt near 0.2 h^2 min rho, so the cross-check runs at the largest admissible step.
    const KEProblem p = product_problem(64, 0.1);
    const FlowState s0 = at(ScalarField(p.bg.grid), p, 0.0);
    FlowState s = s0;
    s.dt = rk4_stable_dt(s0, p);
    ASSERT_GT(s.dt, 0.0);
    const FlowState be = step(s, p, Scheme::backward_euler_newton);
    const FlowState rk = step(s, p, Scheme::rk4_explicit);
    EXPECT_LE((be.phi - rk.phi).sup_norm(), 1e-6);
    EXPECT_NEAR(be.t, s.dt, 1e-15);
}

TEST(Step, Rk4GuardRejectsLargeSteps) {
    const KEProblem p = product_problem(32, 0.1);
    FlowState s = at(ScalarField(p.bg.grid), p, 1e-3);
    ASSERT_GT(s.dt, rk4_stable_dt(s, p));
    EXPECT_THROW(step(s, p, Scheme::rk4_explicit), StabilityError);
    RunOptions o;
    o.T = 1.0;
    o.dt = 1e-3;
    o.scheme = Scheme::rk4_explicit;
    try {
        run(p, o);
        FAIL() << "run accepted a step above the guard";
    } catch (const StabilityError& e) {
        EXPECT_NE(std::string(e.what()).find("rk4 stability guard"), std::string::npos);
    }
}

TEST(Step, BackwardEulerIsFirstOrder) {
    const KEProblem p = product_problem(32, 0.1);
    const ScalarField ref = be_to(p, 320);
    const double e1 = (be_to(p, 5) - ref).sup_norm();
    const double e2 = (be_to(p, 10) - ref).sup_norm();
    EXPECT_NEAR(e1 / e2, 2.0, 0.25);
}

TEST(Run, DecaysAtUnitRateTowardTheSolution) {
    const KEProblem p = product_problem(64, 0.1);
    const KESolution sol = newton_solve(p, ScalarField(p.bg.grid));
    RunOptions o;
    o.T = 12.0;
    o.dt = 0.05;
    o.masks.push_back({"q>=0.1", q_mask(p, 0.1)});
    o.target = sol.phi;
    const RunResult r = run(p, o);
    ASSERT_EQ(r.decay.size(), 1u);
    EXPECT_GE(r.decay[0].slope, -1.15);
    EXPECT_LE(r.decay[0].slope, -0.85);
    for (const auto& s : r.trajectory.samples) EXPECT_GT(s.min_density, 0.0);
    for (std::size_t k = 1; k < r.trajectory.samples.size(); ++k) {
        const auto& a = r.trajectory.samples[k - 1];
        const auto& b = r.trajectory.samples[k];
        EXPECT_GT(b.t, a.t);
        if (a.t >= 2.0) {
            EXPECT_LT(b.gaps[0], a.gaps[0]) << "t = " << b.t;
        }
    }
}

TEST(Run, LongRunReachesKESolution) {
    const KEProblem p = product_problem(64, 0.1);
    const KESolution sol = newton_solve(p, ScalarField(p.bg.grid));
    RunOptions o;
    o.T = 30.0;
    o.dt = 0.05;
    const RunResult r = run(p, o);
    EXPECT_LE((r.state.phi - sol.phi).sup_norm(), 1e-7);
    // d/dt phi decays like e^{-t}; allow e^{-0.8 t} with a generous constant.
    for (const auto& s : r.trajectory.samples)
        if (s.t >= 5.0) {
            EXPECT_LE(s.sup_dpsi_dt, 10.0 * std::exp(-0.8 * s.t)) << "t = " << s.t;
        }
}

TEST(Run, ConstantShiftDecaysLinearly) {
    const KEProblem p = product_problem(64, 0.1);
    const KESolution sol = newton_solve(p, ScalarField(p.bg.grid));
    const double c = 1e-4;
    RunOptions o;
    o.T = 1.0;
    o.dt = 0.01;
    o.phi0 = sol.phi + c;
    const RunResult r = run(p, o);
    const ScalarField d = r.state.phi - sol.phi;
    EXPECT_NEAR(d.max() / (c * std::exp(-1.0)), 1.0, 0.1);
    EXPECT_NEAR(d.min() / (c * std::exp(-1.0)), 1.0, 0.1);
}

TEST(Run, SnapshotsAndValidation) {
    const KEProblem p = product_problem(32, 0.1);
    RunOptions o;
    o.T = 1.0;
    o.dt = 0.1;
    o.snapshot_times = {0.5, 1.0};
    const RunResult r = run(p, o);
    ASSERT_EQ(r.trajectory.snapshots.size(), 2u);
    EXPECT_NEAR(r.trajectory.snapshots[0].t, 0.5, 1e-12);
    EXPECT_EQ(r.trajectory.samples.size(), 11u);
    o.T = 60.0;
    EXPECT_THROW(run(p, o), ConfigError);
}

TEST(FitDecay, SyntheticExponential) {
    Trajectory t;
    t.mask_names = {"m"};
    for (int k = 0; k <= 200; ++k) {
        TrajectorySample s;
        s.t = 0.1 * k;
        s.gaps = {0.5 * std::exp(-0.9 * s.t)};
        t.samples.push_back(s);
    }
    const DecayFit f = fit_decay(t, 0);
    EXPECT_NEAR(f.slope, -0.9, 1e-10);
    EXPECT_NEAR(f.intercept, std::log(0.5), 1e-9);
    EXPECT_GT(f.points, 100);
}

TEST(Scheme, NamesRoundTrip) {
    for (Scheme s : {Scheme::backward_euler_newton, Scheme::rk4_explicit}) EXPECT_EQ(parse_scheme(to_string(s)), s);
    EXPECT_THROW(parse_scheme("euler"), ConfigError);
}
