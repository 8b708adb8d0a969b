#pragma once

#include "ckrf/flow_engine.hpp"
#include "ckrf/ke_solver.hpp"

#include <span>
#include <string>
#include <vector>

namespace ckrf {

struct BarrierSigma {
    ScalarField field;
    std::vector<Point> gamma_points;
    double width = 0.1;
    double grad_constant = 0.0; ///< sup |grad sigma|^2 / A
    double lap_constant = 0.0;  ///< sup |(1/2) Lap sigma| / A

    /// Wraps an arbitrary field in [0, 1]; used for synthetic controls.
    static BarrierSigma from_field(ScalarField field, std::vector<Point> points = {});

    Mask at_least(double threshold) const;
};

/// sigma = prod_i tanh(d_i^2 / w^2) with d_i the periodic distance to each
/// point. `A` is the constant reference density the bounds are measured against.
BarrierSigma sigma_barrier(const Grid& g, std::span<const Point> points, double A, double width = 0.1);

/// Pointwise num / den; throws DomainError where den <= 0.
ScalarField trace_field(const ScalarField& num, const ScalarField& den);

struct EstimateReport {
    std::string name;
    double C = 0.0;
    double lambda = 0.0;
    double max_violation = 0.0;
    bool pass = false;
    std::size_t samples = 0;
    std::string detail;
};

/// Fits tr <= C exp(C / sigma^lambda) over sigma > 0 for each lambda in the
/// grid, taking the least C >= 1 per lambda and the lambda with the smallest
/// C. Passes if that C is at most c_cap.
EstimateReport verify_trace_bound(std::span<const ScalarField> traces, const BarrierSigma& sigma,
                                  std::span<const double> lambdas, double c_cap = 1e6);
EstimateReport verify_trace_bound(const ScalarField& trace, const BarrierSigma& sigma);

/// rho_infinity = A F e^v (q_r + eps^2)^{beta - 1} at the solution's epsilon.
ScalarField limit_density(const KESolution& sol, const KEProblem& p);

struct ResidualResult {
    ScalarField field;
    double sup;
};

/// -(1/2) Lap log rho + rho - rho_WP, with sup taken over `mask`.
ResidualResult ricci_residual(const KESolution& sol, const KEProblem& p, const Mask& mask);

struct GrowthFit {
    double exponent = 0.0;    ///< fitted s in  area = K rho^s / (1 - kappa K rho^s)
    double plain_slope = 0.0; ///< ordinary least-squares log-log slope
    double K = 0.0;
    double kappa = 0.0;
    std::vector<double> radii;
    std::vector<double> areas;
};

/// Mass of `density` in disks about `center` at radii 0.025 * 2^(k/4) <= 0.2,
/// dropping radii below 6/N; needs at least five.
GrowthFit area_growth(const ScalarField& density, Point center);

/// Area-growth exponent at the cone point (target 2 beta).
double cone_angle(const KESolution& sol, const KEProblem& p, Point center);
double cone_angle(const ScalarField& density, Point center);

/// Density exponent at a fiber: area-growth exponent minus two.
double multiplicity_exponent(const KESolution& sol, const KEProblem& p, Point s_i);
double multiplicity_exponent(const ScalarField& density, Point s_i);

struct C0Report {
    EstimateReport report;
    std::vector<DecayFit> fits; ///< one per sigma threshold
};

/// Decay on nested masks named "sigma>=<t>" in the trajectory.
C0Report verify_c0_convergence(const Trajectory& traj, std::span<const double> thresholds = {});

/// Mask name used by verify_c0_convergence for a sigma threshold.
std::string sigma_mask_name(double threshold);

} // namespace ckrf
