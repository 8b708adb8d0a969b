#include "ckrf/ke_solver.hpp"

#include "ckrf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>

namespace ckrf {

using std::numbers::pi;

KEProblem make_problem(const FibrationModel& m, const Grid& g, double epsilon) {
    if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be nonnegative");
    auto bg = build_background(m, g);
    auto F = assemble_F(m, bg);
    return KEProblem{std::move(bg), std::move(F), m.beta, m.delta, epsilon};
}

KEProblem with_epsilon(const KEProblem& p, double epsilon) {
    KEProblem q = p;
    q.epsilon = epsilon;
    return q;
}

ScalarField ke_coefficient(const KEProblem& p) {
    const Grid& g = p.bg.grid;
    ScalarField M(g);
    const double e2 = p.epsilon * p.epsilon;
    for (std::size_t k = 0; k < g.size(); ++k) {
        M[k] = p.bg.A * std::exp(p.F.log_F[k] + (p.beta - 1.0) * std::log(p.bg.q_r[k] + e2));
    }
    M.require_finite("KE coefficient");
    return M;
}

ScalarField cone_potential(const KEProblem& p) {
    return regularized_cone_potential(p.bg, SmoothingParams{p.epsilon, p.beta}, p.delta);
}

ScalarField base_density(double A, const ScalarField& v) {
    ScalarField d = laplacian(v);
    d *= 0.5;
    d += A;
    return d;
}

namespace {

ScalarField residual_with(double A, const ScalarField& M, const ScalarField& v) {
    ScalarField G = base_density(A, v);
    for (std::size_t k = 0; k < G.size(); ++k) G[k] -= M[k] * std::exp(v[k]);
    return G;
}

double dot(const ScalarField& a, const ScalarField& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

} // namespace

ScalarField ke_residual(const KEProblem& p, const ScalarField& v) {
    return residual_with(p.bg.A, ke_coefficient(p), v);
}

ScalarField solve_screened(const ScalarField& a, double b, const ScalarField& rhs, double rel_tol,
                           int max_iterations, LinearSolveInfo* info) {
    const double shift = a.mean();
    if (!(a.min() > 0.0)) throw NumericalError("screened operator has a nonpositive coefficient");
    auto apply = [&](const ScalarField& w) {
        ScalarField out = laplacian(w);
        out *= -0.5 * b;
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += a[k] * w[k];
        return out;
    };
    ScalarField x(rhs.grid());
    ScalarField r = rhs;
    const double norm0 = std::sqrt(dot(rhs, rhs));
    if (info) *info = {0, 0.0};
    if (norm0 == 0.0) return x;
    ScalarField z = solve_shifted_poisson(r, shift, b);
    ScalarField d = z;
    double rz = dot(r, z);
    for (int it = 1; it <= max_iterations; ++it) {
        const ScalarField Ad = apply(d);
        const double dAd = dot(d, Ad);
        if (!(dAd > 0.0)) throw NumericalError("conjugate gradient breakdown");
        const double alpha = rz / dAd;
        for (std::size_t k = 0; k < x.size(); ++k) {
            x[k] += alpha * d[k];
            r[k] -= alpha * Ad[k];
        }
        const double rel = std::sqrt(dot(r, r)) / norm0;
        if (info) *info = {it, rel};
        if (rel <= rel_tol) return x;
        z = solve_shifted_poisson(r, shift, b);
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t k = 0; k < d.size(); ++k) d[k] = z[k] + beta * d[k];
    }
    // The last iterate is still the best available correction; Newton's
    // residual test decides whether it was good enough.
    return x;
}

KESolution newton_solve(const KEProblem& p, const ScalarField& v0, const SolverOptions& opts) {
    const double A = p.bg.A;
    const ScalarField M = ke_coefficient(p);
    v0.require_finite("initial potential");
    if (!(base_density(A, v0).min() > 0.0)) throw PositivityError("initial potential is not in the Kahler cone");

    ScalarField v = v0;
    ScalarField G = residual_with(A, M, v);
    double r = G.sup_norm();
    std::vector<double> history{r};
    int it = 0;
    while (r > opts.tolerance) {
        if (it == opts.max_iterations) {
            std::ostringstream os;
            os << "Newton did not converge in " << opts.max_iterations << " iterations (residual " << r << ")";
            throw DivergenceError(os.str(), history);
        }
        ScalarField a(M.grid());
        for (std::size_t k = 0; k < a.size(); ++k) a[k] = M[k] * std::exp(v[k]);
        const ScalarField w = solve_screened(a, 1.0, G, opts.cg_tolerance, opts.max_cg_iterations);
        double lambda = 1.0;
        for (;;) {
            ScalarField trial = v;
            for (std::size_t k = 0; k < trial.size(); ++k) trial[k] += lambda * w[k];
            if (trial.is_finite() && base_density(A, trial).min() > 0.0) {
                ScalarField Gt = residual_with(A, M, trial);
                const double rt = Gt.sup_norm();
                if (rt < r) {
                    v = std::move(trial);
                    G = std::move(Gt);
                    r = rt;
                    break;
                }
            }
            lambda *= 0.5;
            if (lambda < 1e-10) {
                std::ostringstream os;
                os << "Newton line search stalled at residual " << r;
                throw DivergenceError(os.str(), history);
            }
        }
        ++it;
        history.push_back(r);
    }
    KESolution sol{v, v - cone_potential(p), r, it, std::move(history), p.epsilon};
    return sol;
}

ScalarField random_smooth_start(const Grid& g, std::uint64_t seed, double amplitude) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    const double cx = nd(rng), sx = nd(rng), cy = nd(rng), sy = nd(rng);
    const double c = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
    ScalarField w = ScalarField::from_function(g, [&](Point p) {
        const double ax = 2.0 * pi * p.x, ay = 2.0 * pi * p.y;
        return cx * std::cos(ax) + sx * std::sin(ax) + cy * std::cos(ay) + sy * std::sin(ay);
    });
    const double s = w.sup_norm();
    if (s > 0.0) w *= amplitude / s;
    w += c * amplitude;
    return w;
}

std::vector<double> default_schedule(int n) {
    std::vector<double> s;
    const double floor = 2.0 / n;
    for (double e = 0.4; e >= floor * (1.0 - 1e-12); e *= 0.5) s.push_back(e);
    return s;
}

void validate_schedule(std::span<const double> schedule, int n) {
    if (schedule.empty()) throw ConfigError("epsilon_schedule must not be empty");
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        if (!(schedule[i] > 0.0)) throw ConfigError("epsilon_schedule entries must be positive");
        if (i > 0 && !(schedule[i] < schedule[i - 1] && schedule[i] <= 0.7 * schedule[i - 1] * (1.0 + 1e-12)))
            throw ConfigError("epsilon_schedule must decrease by a factor of at least 1/0.7 per step");
    }
    if (schedule.back() < 2.0 / n * (1.0 - 1e-12)) {
        std::ostringstream os;
        os << "epsilon_schedule ends below the grid scale 2/N = " << 2.0 / n;
        throw ConfigError(os.str());
    }
}

ContinuationResult continuation_solve(const KEProblem& p, std::span<const double> schedule,
                                      const SolverOptions& opts) {
    const Grid& g = p.bg.grid;
    validate_schedule(schedule, g.n());
    Mask far(g);
    for (std::size_t k = 0; k < g.size(); ++k) far.on[k] = p.bg.q_r[k] >= 0.1;
    const auto [ri, rj] = g.nearest_node(p.bg.cone_point);
    const std::size_t rk = g.index(ri, rj);

    ContinuationResult out{KESolution{ScalarField(g), ScalarField(g), 0.0, 0, {}, 0.0}, {}, {}};
    ScalarField v(g);
    ScalarField chi_prev(g);
    for (double eps : schedule) {
        const KEProblem q = with_epsilon(p, eps);
        const ScalarField chi_now = cone_potential(q);
        // Carry phi over; fall back to v itself if the shifted guess leaves the cone.
        ScalarField guess = v - chi_prev + chi_now;
        if (!(base_density(p.bg.A, guess).min() > 0.0)) guess = v;
        std::optional<KESolution> solved;
        try {
            solved = newton_solve(q, guess, opts);
        } catch (const DivergenceError& e) {
            std::ostringstream os;
            os << "continuation failed at epsilon = " << eps << ": " << e.what();
            throw DivergenceError(os.str(), e.history());
        } catch (const PositivityError& e) {
            std::ostringstream os;
            os << "continuation failed at epsilon = " << eps << ": " << e.what();
            throw PositivityError(os.str());
        }
        KESolution& sol = *solved;
        auto& rep = out.report;
        if (!out.levels.empty()) {
            ScalarField diff = sol.v - out.levels.back().v;
            const double d = sup_on(diff, far);
            if (!rep.cauchy.empty() && !(d < rep.cauchy.back().sup_diff)) rep.cauchy_decreasing = false;
            rep.cauchy.push_back({out.levels.back().epsilon, eps, d});
        }
        rep.epsilons.push_back(eps);
        rep.iterations.push_back(sol.newton_iters);
        rep.residuals.push_back(sol.residual_sup);
        rep.max_abs_at_cone_point = std::max(rep.max_abs_at_cone_point, std::abs(sol.v[rk]));
        v = sol.v;
        chi_prev = chi_now;
        out.levels.push_back(std::move(sol));
    }
    out.solution = out.levels.back();
    out.report.holder_exponent = holder_exponent_estimate(out.solution.v, p.bg.cone_point);
    return out;
}

KESolution extrapolate_epsilon(const ContinuationResult& c, const KEProblem& p) {
    if (c.levels.size() < 2) throw ConfigError("extrapolation needs at least two schedule levels");
    const KESolution& s1 = c.levels[c.levels.size() - 2];
    const KESolution& s2 = c.levels.back();
    const double e1 = s1.epsilon * s1.epsilon;
    const double e2 = s2.epsilon * s2.epsilon;
    ScalarField v(s1.v.grid());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = (e2 * s1.v[k] - e1 * s2.v[k]) / (e2 - e1);
    const KEProblem p0 = with_epsilon(p, 0.0);
    const double r = ke_residual(p0, v).sup_norm();
    KESolution out{v, v - cone_potential(p0), r, 0, {}, 0.0};
    return out;
}

double holder_exponent_estimate(const ScalarField& v, Point center) {
    const Grid& g = v.grid();
    const double lo = 4.0 * g.spacing();
    std::vector<double> radii;
    for (double r = 0.1; r >= lo * (1.0 - 1e-12); r *= 0.5) radii.push_back(r);
    if (radii.size() < 2) radii = {0.1, std::max(lo, 0.05)};
    const double c0 = sample_bilinear(v, center);
    const double scale = 1.0 + v.sup_norm();
    constexpr int n_angles = 64;

    std::vector<double> xs, ys;
    for (double r : radii) {
        double lo_v = c0, hi_v = c0;
        for (int a = 0; a < n_angles; ++a) {
            const double th = 2.0 * pi * a / n_angles;
            const double s = sample_bilinear(v, {center.x + r * std::cos(th), center.y + r * std::sin(th)});
            lo_v = std::min(lo_v, s);
            hi_v = std::max(hi_v, s);
        }
        const double osc = hi_v - lo_v;
        if (osc <= 1e-13 * scale) return 1.0;
        xs.push_back(std::log(r));
        ys.push_back(std::log(osc));
    }
    const double n = double(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    const double slope = sxy / sxx;
    return std::clamp(slope, 1e-3, 1.0);
}

} // namespace ckrf
