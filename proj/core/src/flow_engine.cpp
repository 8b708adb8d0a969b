#include "ckrf/flow_engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ckrf {

std::string to_string(Scheme s) {
    return s == Scheme::backward_euler_newton ? "backward-euler-newton" : "rk4-explicit";
}

Scheme parse_scheme(const std::string& s) {
    if (s == "backward-euler-newton") return Scheme::backward_euler_newton;
    if (s == "rk4-explicit" || s == "rk4") return Scheme::rk4_explicit;
    throw ConfigError("flow.scheme: unknown scheme '" + s + "'");
}

namespace {

// Fields that stay fixed along a run.
struct FlowCoefficients {
    double A;
    ScalarField chi;
    ScalarField log_M;
};

FlowCoefficients coefficients(const FlowState& s, const KEProblem& p) {
    if (std::abs(s.epsilon - p.epsilon) > 1e-15)
        throw ConfigError("flow state and problem use different epsilon");
    return {p.bg.A, cone_potential(p), log(ke_coefficient(p))};
}

ScalarField density_checked(double A, const ScalarField& eta, double t) {
    ScalarField d = base_density(A, eta);
    if (!(d.min() > 0.0)) {
        std::ostringstream os;
        os << "base density lost positivity at t = " << t << " (min " << d.min() << ")";
        throw PositivityError(os.str());
    }
    return d;
}

ScalarField rhs_eta(const FlowCoefficients& c, const ScalarField& eta, double t) {
    ScalarField out = density_checked(c.A, eta, t);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::log(out[k]) - c.log_M[k] - eta[k];
    return out;
}

double guard(const FlowCoefficients& c, const ScalarField& phi) {
    const ScalarField d = base_density(c.A, phi + c.chi);
    const double h = phi.grid().spacing();
    return 0.2 * h * h * std::min(c.A / d.max(), d.min());
}

FlowState step_rk4(const FlowState& s, const FlowCoefficients& c) {
    const double limit = guard(c, s.phi);
    if (!(s.dt <= limit)) {
        std::ostringstream os;
        os << "rk4 stability guard violated: dt = " << s.dt << " exceeds 0.2 h^2 min(A/max rho, min rho) = " << limit;
        throw StabilityError(os.str());
    }
    const double dt = s.dt;
    const ScalarField eta = s.phi + c.chi;
    const ScalarField k1 = rhs_eta(c, eta, s.t);
    const ScalarField k2 = rhs_eta(c, eta + (0.5 * dt) * k1, s.t);
    const ScalarField k3 = rhs_eta(c, eta + (0.5 * dt) * k2, s.t);
    const ScalarField k4 = rhs_eta(c, eta + dt * k3, s.t);
    FlowState out = s;
    for (std::size_t k = 0; k < out.phi.size(); ++k)
        out.phi[k] += dt / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
    out.t = s.t + dt;
    density_checked(c.A, out.phi + c.chi, out.t);
    return out;
}

// H(eta) = (1 + dt) eta - dt log rho(eta) + dt log M - eta_old.
ScalarField be_residual(const FlowCoefficients& c, const ScalarField& eta, const ScalarField& rho,
                        const ScalarField& eta_old, double dt) {
    ScalarField H(eta.grid());
    for (std::size_t k = 0; k < H.size(); ++k)
        H[k] = (1.0 + dt) * eta[k] - dt * std::log(rho[k]) + dt * c.log_M[k] - eta_old[k];
    return H;
}

FlowState step_backward_euler(const FlowState& s, const FlowCoefficients& c, const StepOptions& opts) {
    const double dt = s.dt;
    const double t_new = s.t + dt;
    const ScalarField eta_old = s.phi + c.chi;
    density_checked(c.A, eta_old, s.t);

    ScalarField eta = eta_old;
    ScalarField rho = base_density(c.A, eta);
    ScalarField H = be_residual(c, eta, rho, eta_old, dt);
    double r = H.sup_norm();
    std::vector<double> history{r};
    int it = 0;
    while (r > opts.newton_tolerance) {
        if (it == opts.max_newton_iterations) {
            std::ostringstream os;
            os << "backward Euler Newton did not converge at t = " << t_new << " (residual " << r << ")";
            throw DivergenceError(os.str(), history);
        }
        ScalarField a = rho;
        a *= 1.0 + dt;
        ScalarField rhs = rho * H;
        rhs *= -1.0;
        const ScalarField w = solve_screened(a, dt, rhs, opts.cg_tolerance, opts.max_cg_iterations);
        double lambda = 1.0;
        for (;;) {
            ScalarField trial = eta;
            for (std::size_t k = 0; k < trial.size(); ++k) trial[k] += lambda * w[k];
            ScalarField rho_t = base_density(c.A, trial);
            if (trial.is_finite() && rho_t.min() > 0.0) {
                ScalarField Ht = be_residual(c, trial, rho_t, eta_old, dt);
                const double rt = Ht.sup_norm();
                if (rt < r) {
                    eta = std::move(trial);
                    rho = std::move(rho_t);
                    H = std::move(Ht);
                    r = rt;
                    break;
                }
            }
            lambda *= 0.5;
            if (lambda < 1e-10) {
                std::ostringstream os;
                os << "backward Euler line search stalled at t = " << t_new << " (residual " << r << ")";
                throw DivergenceError(os.str(), history);
            }
        }
        ++it;
        history.push_back(r);
    }
    FlowState out = s;
    out.phi = eta - c.chi;
    out.t = t_new;
    return out;
}

FlowState step_with(const FlowState& s, const FlowCoefficients& c, Scheme scheme, const StepOptions& opts) {
    if (!(s.dt > 0.0)) throw ConfigError("dt must be positive");
    return scheme == Scheme::rk4_explicit ? step_rk4(s, c) : step_backward_euler(s, c, opts);
}

} // namespace

ScalarField reduced_rhs(const FlowState& state, const KEProblem& p) {
    const auto c = coefficients(state, p);
    return rhs_eta(c, state.phi + c.chi, state.t);
}

double rk4_stable_dt(const FlowState& state, const KEProblem& p) {
    return guard(coefficients(state, p), state.phi);
}

FlowState step(const FlowState& state, const KEProblem& p, Scheme scheme, const StepOptions& opts) {
    return step_with(state, coefficients(state, p), scheme, opts);
}

DecayFit fit_decay(const Trajectory& traj, std::size_t mask_index, double lo, double hi) {
    DecayFit fit;
    fit.mask = traj.mask_names.at(mask_index);
    if (traj.samples.empty()) return fit;
    fit.final_gap = traj.samples.back().gaps.at(mask_index);
    std::vector<double> xs, ys;
    bool all_below = true;
    for (const auto& s : traj.samples) {
        const double g = s.gaps.at(mask_index);
        if (g > lo) all_below = false;
        if (g >= lo && g <= hi) {
            xs.push_back(s.t);
            ys.push_back(std::log(g));
        }
    }
    fit.converged = all_below;
    fit.points = static_cast<int>(xs.size());
    if (xs.size() < 2) return fit;
    const double n = double(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    return fit;
}

RunResult run(const KEProblem& p, const RunOptions& opts) {
    const Grid& g = p.bg.grid;
    if (!(opts.T > 0.0 && opts.T <= 50.0)) throw ConfigError("flow.T must lie in (0, 50]");
    if (!(opts.dt > 0.0)) throw ConfigError("flow.dt must be positive");

    FlowState state{opts.phi0 ? *opts.phi0 : ScalarField(g), 0.0, p.epsilon, opts.dt};
    const auto c = coefficients(state, p);
    if (opts.scheme == Scheme::rk4_explicit) {
        const double limit = guard(c, state.phi);
        if (!(opts.dt <= limit)) {
            std::ostringstream os;
            os << "rk4 stability guard violated: dt = " << opts.dt
               << " exceeds 0.2 h^2 min(A/max rho, min rho) = " << limit;
            throw StabilityError(os.str());
        }
    }

    Trajectory traj;
    for (const auto& m : opts.masks) traj.mask_names.push_back(m.name);
    const Mask monitor = opts.monitor_mask ? *opts.monitor_mask : Mask(g, true);

    auto record = [&](const FlowState& s, const ScalarField& dphi) {
        TrajectorySample smp;
        smp.t = s.t;
        for (const auto& m : opts.masks) smp.gaps.push_back(opts.target ? sup_on(s.phi - *opts.target, m.mask) : 0.0);
        smp.energy = integrate(s.phi);
        const ScalarField psi = s.phi + c.chi;
        const ScalarField rho = base_density(c.A, psi);
        smp.min_density = rho.min();
        for (std::size_t k = 0; k < g.size(); ++k) {
            if (!monitor.on[k]) continue;
            smp.sup_psi = std::max(smp.sup_psi, std::abs(psi[k]));
            smp.sup_dpsi_dt = std::max(smp.sup_dpsi_dt, std::abs(dphi[k]));
            smp.max_trace = std::max(smp.max_trace, c.A / rho[k]);
        }
        traj.samples.push_back(std::move(smp));
        for (double ts : opts.snapshot_times)
            if (std::abs(s.t - ts) < 0.5 * opts.dt) traj.snapshots.push_back({s.t, psi});
    };

    const long n_steps = std::lround(opts.T / opts.dt);
    try {
        record(state, rhs_eta(c, state.phi + c.chi, 0.0));
        for (long k = 1; k <= n_steps; ++k) {
            FlowState next = step_with(state, c, opts.scheme, opts.step);
            next.t = k * opts.dt;
            ScalarField dphi = next.phi - state.phi;
            dphi *= 1.0 / opts.dt;
            state = std::move(next);
            record(state, dphi);
        }
    } catch (const Error& e) {
        throw FlowAborted(std::string("flow aborted: ") + e.what(), std::move(traj));
    }

    RunResult out{std::move(state), std::move(traj), {}};
    for (std::size_t i = 0; i < opts.masks.size(); ++i) out.decay.push_back(fit_decay(out.trajectory, i));
    return out;
}

} // namespace ckrf
