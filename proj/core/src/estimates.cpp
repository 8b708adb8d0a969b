#include "ckrf/estimates.hpp"

#include "ckrf/errors.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

namespace ckrf {

using std::numbers::pi;

// ---- barrier -------------------------------------------------------------------

BarrierSigma BarrierSigma::from_field(ScalarField field, std::vector<Point> points) {
    field.require_finite("sigma field");
    if (field.min() < 0.0 || field.max() > 1.0) throw DomainError("sigma must take values in [0, 1]");
    BarrierSigma s{std::move(field), std::move(points)};
    return s;
}

Mask BarrierSigma::at_least(double threshold) const {
    Mask m(field.grid());
    for (std::size_t k = 0; k < field.size(); ++k) m.on[k] = field[k] >= threshold;
    return m;
}

BarrierSigma sigma_barrier(const Grid& g, std::span<const Point> points, double A, double width) {
    if (!(width > 0.0)) throw ConfigError("sigma width must be positive");
    if (!(A > 0.0)) throw ConfigError("reference density must be positive");
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = i + 1; j < points.size(); ++j)
            if (periodic_distance(points[i], points[j]) == 0.0) throw ConfigError("barrier points must be distinct");

    const double w2 = width * width;
    ScalarField sigma = ScalarField::from_function(g, [&](Point s) {
        double v = 1.0;
        for (const Point& p : points) {
            const double d = periodic_distance(s, p);
            v *= std::tanh(d * d / w2);
        }
        return v;
    });
    BarrierSigma out{sigma, {points.begin(), points.end()}, width};

    const auto grad = gradient(sigma);
    const ScalarField lap = laplacian(sigma);
    for (std::size_t k = 0; k < g.size(); ++k) {
        out.grad_constant = std::max(out.grad_constant, (grad.dx[k] * grad.dx[k] + grad.dy[k] * grad.dy[k]) / A);
        out.lap_constant = std::max(out.lap_constant, 0.5 * std::abs(lap[k]) / A);
    }
    if (!std::isfinite(out.grad_constant) || !std::isfinite(out.lap_constant))
        throw NumericalError("sigma barrier bounds are not finite");
    const double h = g.spacing();
    const double cell_bound = std::tanh(0.5 * h * h / w2);
    for (const Point& p : points) {
        auto [i, j] = g.nearest_node(p);
        if (sigma.at(i, j) > cell_bound + 1e-15) {
            std::ostringstream os;
            os << "sigma does not vanish near (" << p.x << ", " << p.y << "): " << sigma.at(i, j);
            throw NumericalError(os.str());
        }
    }
    return out;
}

ScalarField trace_field(const ScalarField& num, const ScalarField& den) {
    if (!(num.grid() == den.grid())) throw ConfigError("trace fields live on different grids");
    ScalarField out(num.grid());
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (!(den[k] > 0.0)) throw DomainError("trace denominator is not positive");
        out[k] = num[k] / den[k];
    }
    return out;
}

// ---- trace bound ---------------------------------------------------------------

namespace {

// Least C >= 1 with log C + C s >= T, where s = sigma^-lambda.
double least_constant(double s, double T) {
    if (s >= T) return 1.0;
    // g(x) = x + e^x s is increasing; the root lies in (0, T].
    double lo = 0.0, hi = T;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid + std::exp(mid) * s >= T) hi = mid;
        else lo = mid;
    }
    return std::exp(hi);
}

} // namespace

EstimateReport verify_trace_bound(std::span<const ScalarField> traces, const BarrierSigma& sigma,
                                  std::span<const double> lambdas, double c_cap) {
    EstimateReport rep;
    rep.name = "trace-bound";
    if (lambdas.empty()) throw ConfigError("lambda grid must not be empty");
    std::vector<double> log_sig, log_tr;
    for (const auto& tr : traces) {
        if (!(tr.grid() == sigma.field.grid())) throw ConfigError("trace and sigma live on different grids");
        for (std::size_t k = 0; k < tr.size(); ++k) {
            const double s = sigma.field[k];
            if (!(s > 0.0)) continue;
            if (!std::isfinite(tr[k]) || !(tr[k] > 0.0)) throw DomainError("trace must be positive and finite on sigma > 0");
            log_sig.push_back(std::log(s));
            log_tr.push_back(std::log(tr[k]));
        }
    }
    rep.samples = log_sig.size();

    double best_C = std::numeric_limits<double>::infinity();
    double best_lambda = lambdas.front();
    for (double lam : lambdas) {
        double C = 1.0;
        for (std::size_t i = 0; i < log_sig.size(); ++i)
            C = std::max(C, least_constant(std::exp(-lam * log_sig[i]), log_tr[i]));
        if (C < best_C * (1.0 - 1e-12)) {
            best_C = C;
            best_lambda = lam;
        }
    }
    rep.C = best_C;
    rep.lambda = best_lambda;
    const double C_used = std::min(best_C, c_cap);
    double viol = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < log_sig.size(); ++i) {
        const double bound = std::log(C_used) + C_used * std::exp(-best_lambda * log_sig[i]);
        viol = std::max(viol, log_tr[i] - bound);
    }
    if (log_sig.empty()) viol = 0.0;
    rep.max_violation = viol;
    rep.pass = viol <= 0.0 && best_C <= c_cap;
    std::ostringstream os;
    os << "C=" << rep.C << " lambda=" << rep.lambda << " over " << rep.samples << " samples";
    rep.detail = os.str();
    return rep;
}

EstimateReport verify_trace_bound(const ScalarField& trace, const BarrierSigma& sigma) {
    static constexpr std::array<double, 4> lambdas{1.0, 2.0, 4.0, 8.0};
    return verify_trace_bound(std::span<const ScalarField>(&trace, 1), sigma, lambdas);
}

// ---- Ricci identity ------------------------------------------------------------

ScalarField limit_density(const KESolution& sol, const KEProblem& p) {
    return exp(sol.v + log(ke_coefficient(with_epsilon(p, sol.epsilon))));
}

ResidualResult ricci_residual(const KESolution& sol, const KEProblem& p, const Mask& mask) {
    if (mask.empty()) throw DomainError("ricci_residual: mask is empty");
    const ScalarField log_rho = sol.v + log(ke_coefficient(with_epsilon(p, sol.epsilon)));
    ScalarField field = laplacian(log_rho);
    field *= -0.5;
    field += exp(log_rho);
    field -= p.bg.wp.density;
    return {field, sup_on(field, mask)};
}

// ---- growth exponents ----------------------------------------------------------

namespace {

struct LinearFit {
    double p, q, sse;
};

// Profile area = K r^s / (1 - kappa K r^s), the disk area of a constant
// curvature cone. With 1/area = p r^-s + q it is linear in (p, q) for fixed s;
// the residuals are relative.
LinearFit fit_at(double s, const std::vector<double>& r, const std::vector<double>& area) {
    double m11 = 0, m12 = 0, m22 = 0, y1 = 0, y2 = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double x1 = area[i] * std::pow(r[i], -s);
        const double x2 = area[i];
        m11 += x1 * x1;
        m12 += x1 * x2;
        m22 += x2 * x2;
        y1 += x1;
        y2 += x2;
    }
    const double det = m11 * m22 - m12 * m12;
    if (!(std::abs(det) > 1e-300 * m11 * m22)) return {0, 0, std::numeric_limits<double>::infinity()};
    LinearFit f{(y1 * m22 - y2 * m12) / det, (m11 * y2 - m12 * y1) / det, 0};
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double e = area[i] * (f.p * std::pow(r[i], -s) + f.q) - 1.0;
        f.sse += e * e;
    }
    return f;
}

} // namespace

GrowthFit area_growth(const ScalarField& density, Point center) {
    const Grid& g = density.grid();
    GrowthFit out;
    const double lo = std::max(0.025, 6.0 * g.spacing());
    for (int k = 0; k <= 12; ++k) {
        const double r = 0.025 * std::pow(2.0, k / 4.0);
        if (r >= lo * (1.0 - 1e-12)) out.radii.push_back(r);
    }
    if (out.radii.size() < 5) throw DomainError("too few radii resolved for the area-growth fit");
    for (double r : out.radii) out.areas.push_back(inner(density, disk_coverage(g, center, r)));
    for (double a : out.areas)
        if (!(a > 0.0)) throw DomainError("area-growth fit needs positive disk masses");

    const std::size_t n = out.radii.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += std::log(out.radii[i]);
        my += std::log(out.areas[i]);
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = std::log(out.radii[i]) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(out.areas[i]) - my);
    }
    out.plain_slope = sxy / sxx;

    // Coarse scan, then Brent refinement around the best bracket.
    double best_s = 0.05, best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 395; ++i) {
        const double s = 0.05 + 0.01 * i;
        const double e = fit_at(s, out.radii, out.areas).sse;
        if (e < best) {
            best = e;
            best_s = s;
        }
    }
    auto obj = [&](double s) { return fit_at(s, out.radii, out.areas).sse; };
    const auto res = boost::math::tools::brent_find_minima(obj, std::max(0.04, best_s - 0.01), best_s + 0.01, 50);
    const double s = res.second <= best ? res.first : best_s;
    const LinearFit f = fit_at(s, out.radii, out.areas);
    out.exponent = s;
    out.K = 1.0 / f.p;
    out.kappa = -f.q;
    return out;
}

double cone_angle(const ScalarField& density, Point center) { return area_growth(density, center).exponent; }

double cone_angle(const KESolution& sol, const KEProblem& p, Point center) {
    const double n = p.bg.grid.n();
    if (sol.epsilon > 20.0 / n * (1.0 + 1e-12)) throw DomainError("cone_angle needs epsilon <= 20/N");
    return cone_angle(limit_density(sol, p), center);
}

double multiplicity_exponent(const ScalarField& density, Point s_i) {
    return area_growth(density, s_i).exponent - 2.0;
}

double multiplicity_exponent(const KESolution& sol, const KEProblem& p, Point s_i) {
    const double n = p.bg.grid.n();
    if (sol.epsilon > 20.0 / n * (1.0 + 1e-12)) throw DomainError("multiplicity_exponent needs epsilon <= 20/N");
    return multiplicity_exponent(limit_density(sol, p), s_i);
}

// ---- C0 convergence ------------------------------------------------------------

std::string sigma_mask_name(double threshold) {
    std::ostringstream os;
    os << "sigma>=" << threshold;
    return os.str();
}

C0Report verify_c0_convergence(const Trajectory& traj, std::span<const double> thresholds) {
    static constexpr std::array<double, 3> defaults{0.2, 0.4, 0.6};
    if (thresholds.empty()) thresholds = defaults;
    C0Report out;
    out.report.name = "c0-convergence";
    out.report.samples = traj.samples.size();
    if (traj.samples.size() < 20) {
        out.report.detail = "trajectory has fewer than 20 samples";
        out.report.max_violation = 1.0;
        return out;
    }
    double viol = -std::numeric_limits<double>::infinity();
    std::ostringstream os;
    for (double th : thresholds) {
        const std::string name = sigma_mask_name(th);
        const auto it = std::find(traj.mask_names.begin(), traj.mask_names.end(), name);
        if (it == traj.mask_names.end()) throw ConfigError("trajectory lacks mask " + name);
        const DecayFit fit = fit_decay(traj, static_cast<std::size_t>(it - traj.mask_names.begin()));
        out.fits.push_back(fit);
        if (fit.converged) {
            viol = std::max(viol, -1.0);
        } else if (fit.points < 2) {
            viol = std::max(viol, 1.0);
        } else {
            viol = std::max(viol, fit.slope + 0.85);
        }
        if (std::abs(th - 0.4) < 1e-12) viol = std::max(viol, fit.final_gap - 1e-3);
        os << name << ": slope " << fit.slope << " (" << fit.points << " pts), final gap " << fit.final_gap << "; ";
    }
    out.report.max_violation = viol;
    out.report.pass = viol <= 0.0;
    double slowest = -std::numeric_limits<double>::infinity();
    for (const auto& f : out.fits) slowest = std::max(slowest, f.slope);
    out.report.lambda = slowest;
    out.report.C = out.fits.empty() ? 0.0 : std::exp(out.fits.front().intercept);
    out.report.detail = os.str();
    return out;
}

} // namespace ckrf
