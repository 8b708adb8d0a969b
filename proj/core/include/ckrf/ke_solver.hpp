#pragma once

// Newton solver for A + (1/2) Lap v = M e^v, M = A F (q_r + eps^2)^{beta - 1},
// the regularized limiting equation on the base.

#include "ckrf/cone_smoothing.hpp"
#include "ckrf/fibration_model.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace ckrf {

struct KEProblem {
    BackgroundGeometry bg;
    DensityData F;
    double beta;
    double delta;
    double epsilon;
};

KEProblem make_problem(const FibrationModel& m, const Grid& g, double epsilon);

/// Same problem at another regularization.
KEProblem with_epsilon(const KEProblem& p, double epsilon);

/// M = A F (q_r + eps^2)^{beta - 1}.
ScalarField ke_coefficient(const KEProblem& p);

/// delta * chi(eps^2 + q_r).
ScalarField cone_potential(const KEProblem& p);

/// A + (1/2) Lap v - M e^v.
ScalarField ke_residual(const KEProblem& p, const ScalarField& v);

/// Base density A + (1/2) Lap v.
ScalarField base_density(double A, const ScalarField& v);

struct SolverOptions {
    double tolerance = 1e-9;      ///< sup-norm residual
    double cg_tolerance = 1e-12;  ///< relative, per linear solve
    int max_iterations = 50;
    int max_cg_iterations = 2000;
};

struct LinearSolveInfo {
    int iterations = 0;
    double relative_residual = 0.0;
};

/// Preconditioned CG for a(s) w - b (1/2) Lap w = rhs with a > 0, b >= 0. The
/// preconditioner is the constant-coefficient operator with a replaced by its mean.
ScalarField solve_screened(const ScalarField& a, double b, const ScalarField& rhs, double rel_tol,
                           int max_iterations, LinearSolveInfo* info = nullptr);

struct KESolution {
    ScalarField v;
    ScalarField phi;
    double residual_sup = 0.0;
    int newton_iters = 0;
    std::vector<double> history; ///< sup |G| before each iteration and at exit
    double epsilon = 0.0;
};

/// Damped Newton iteration from v0. Throws PositivityError if v0 is not in
/// the Kahler cone, DivergenceError after max_iterations.
KESolution newton_solve(const KEProblem& p, const ScalarField& v0, const SolverOptions& opts = {});

/// Random combination of the |k| = 1 Fourier modes with sup norm `amplitude`, plus
/// a random constant in [-amplitude, amplitude]. Since (1/2) Lap w = -2 pi^2 (w - c),
/// the start is in the Kahler cone whenever 2 pi^2 amplitude < A.
ScalarField random_smooth_start(const Grid& g, std::uint64_t seed, double amplitude);

/// Halving from 0.4 down to the smallest value >= 2/N.
std::vector<double> default_schedule(int n);

/// Throws ConfigError unless strictly decreasing with ratio <= 0.7 and last >= 2/N.
void validate_schedule(std::span<const double> schedule, int n);

struct CauchyStep {
    double eps_from;
    double eps_to;
    double sup_diff; ///< on q_r >= 0.1
};

struct ContinuationReport {
    std::vector<double> epsilons;
    std::vector<int> iterations;
    std::vector<double> residuals;
    std::vector<CauchyStep> cauchy;
    bool cauchy_decreasing = true;
    double max_abs_at_cone_point = 0.0;
    double holder_exponent = 1.0;
};

struct ContinuationResult {
    KESolution solution; ///< at the last epsilon
    std::vector<KESolution> levels;
    ContinuationReport report;
};

/// Warm-started solves along `schedule`. Errors from an inner solve are
/// rethrown with the failing epsilon in the message.
ContinuationResult continuation_solve(const KEProblem& p, std::span<const double> schedule,
                                      const SolverOptions& opts = {});

/// Richardson extrapolation in eps^2 of the two finest levels. The result
/// carries epsilon = 0 and is evaluated against (q_r)^{beta - 1}.
KESolution extrapolate_epsilon(const ContinuationResult& c, const KEProblem& p);

/// Least-squares slope of log osc(rho) against log rho over dyadic radii in
/// [4/N, 0.1], clamped to (0, 1]. Constant fields return 1.
double holder_exponent_estimate(const ScalarField& v, Point center);

} // namespace ckrf
