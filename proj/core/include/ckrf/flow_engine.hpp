#pragma once

// Base-reduced conical Kahler-Ricci flow
//   d/dt phi = log(A + (1/2) Lap eta) - log M - eta,  eta = phi + delta chi(eps^2 + q_r),
// whose stationary points solve the KE equation of ke_solver.

#include "ckrf/errors.hpp"
#include "ckrf/ke_solver.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ckrf {

enum class Scheme { backward_euler_newton, rk4_explicit };

std::string to_string(Scheme s);
Scheme parse_scheme(const std::string& s);

struct FlowState {
    ScalarField phi;
    double t = 0.0;
    double epsilon = 0.0;
    double dt = 0.05;
};

/// Throws PositivityError if the state's base density is not positive.
ScalarField reduced_rhs(const FlowState& state, const KEProblem& p);

/// Largest explicit step the rk4 guard admits:
/// 0.2 h^2 min(A / max density, min density).
double rk4_stable_dt(const FlowState& state, const KEProblem& p);

struct StepOptions {
    double newton_tolerance = 1e-11;
    int max_newton_iterations = 50;
    double cg_tolerance = 1e-12;
    int max_cg_iterations = 2000;
};

/// One step of size state.dt. Backward Euler solves phi+ - dt rhs(phi+) = phi
/// by damped Newton; rk4 throws StabilityError above rk4_stable_dt.
FlowState step(const FlowState& state, const KEProblem& p, Scheme scheme, const StepOptions& opts = {});

struct NamedMask {
    std::string name;
    Mask mask;
};

struct TrajectorySample {
    double t = 0.0;
    std::vector<double> gaps; ///< sup over each mask of |phi - target|
    double energy = 0.0;      ///< integral of phi
    double min_density = 0.0;
    double sup_psi = 0.0;     ///< monitors on the monitor mask
    double sup_dpsi_dt = 0.0;
    double max_trace = 0.0;   ///< A / rho_psi
};

struct Snapshot {
    double t;
    ScalarField psi;
};

struct Trajectory {
    std::vector<std::string> mask_names;
    std::vector<TrajectorySample> samples;
    std::vector<Snapshot> snapshots;
};

struct DecayFit {
    std::string mask;
    double slope = 0.0;
    double intercept = 0.0;
    int points = 0;
    double final_gap = 0.0;
    bool converged = false; ///< every gap already below the window
};

/// Least-squares slope of log gap against t over samples with gap in [lo, hi].
DecayFit fit_decay(const Trajectory& traj, std::size_t mask_index, double lo = 1e-6, double hi = 1e-1);

struct RunOptions {
    double T = 20.0;
    double dt = 0.05;
    Scheme scheme = Scheme::backward_euler_newton;
    std::vector<NamedMask> masks;
    std::optional<ScalarField> target; ///< phi_infinity; gaps are zero without it
    std::optional<Mask> monitor_mask;
    std::vector<double> snapshot_times;
    std::optional<ScalarField> phi0; ///< defaults to 0
    StepOptions step;
};

struct RunResult {
    FlowState state;
    Trajectory trajectory;
    std::vector<DecayFit> decay;
};

/// Error raised mid-run; carries the trajectory recorded so far.
class FlowAborted : public Error {
public:
    FlowAborted(const std::string& what, Trajectory partial) : Error(what), partial_(std::move(partial)) {}
    const Trajectory& partial() const noexcept { return partial_; }

private:
    Trajectory partial_;
};

/// Runs from phi0 (default 0) to T. Guard violations surface as
/// StabilityError before the first step; later failures as FlowAborted.
RunResult run(const KEProblem& p, const RunOptions& opts);

} // namespace ckrf
