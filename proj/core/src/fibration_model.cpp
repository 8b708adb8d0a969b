#include "ckrf/fibration_model.hpp"

#include "ckrf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace ckrf {

using std::numbers::pi;

namespace {

std::string fmt_point(Point p) {
    std::ostringstream os;
    os << "(" << p.x << ", " << p.y << ")";
    return os.str();
}

std::vector<Point> marked_points(const FibrationModel& m) {
    std::vector<Point> pts{m.cone_point};
    for (const auto& f : m.fibers) pts.push_back(f.point);
    return pts;
}

double orbifold_sum(const FibrationModel& m) {
    double s = 0.0;
    for (const auto& f : m.fibers) s += double(f.m - 1) / f.m;
    return s;
}

} // namespace

void validate_model(const FibrationModel& m) {
    if (!(m.beta > 0.0 && m.beta < 1.0)) throw ConfigError("beta must lie in (0, 1)");
    if (!(m.delta > 0.0)) throw ConfigError("delta must be positive");
    if (!(m.fiber_area > 0.0)) throw ConfigError("fiber_area must be positive");
    if (m.grid_n < 16 || m.grid_n % 2 != 0) throw ConfigError("grid_n must be even and >= 16");
    for (std::size_t i = 0; i < m.fibers.size(); ++i) {
        if (m.fibers[i].m < 1) throw ConfigError("fibers[" + std::to_string(i) + "].m must be >= 1");
        if (m.fibers[i].b < 0) throw ConfigError("fibers[" + std::to_string(i) + "].b must be >= 0");
    }
    const auto pts = marked_points(m);
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            if (periodic_distance(pts[i], pts[j]) <= 0.0)
                throw ConfigError("marked points coincide at " + fmt_point(pts[i]));
}

TauModel effective_tau_model(const FibrationModel& m) {
    TauModel t = m.tau;
    if (t.kind == TauModel::Kind::local_ib) {
        t.sites.clear();
        for (const auto& f : m.fibers)
            if (f.b > 0) t.sites.push_back({f.point, f.b});
    }
    return t;
}

double Current11::total_mass() const {
    double s = smooth_mass();
    for (const auto& a : atoms) s += a.mass;
    return s;
}

double required_area(const FibrationModel& m, double W) {
    const double A = 2.0 * pi * (1.0 - m.beta) + W + 2.0 * pi * orbifold_sum(m);
    if (!(A > 0.0)) throw ModelError("required base area is not positive");
    return A;
}

Current11 weil_petersson(const FibrationModel& m, const Grid& g) {
    const TauField tf = tau_field(effective_tau_model(m), g);
    // Fourth-order central differences: the regularized I_b core is only C^2, and a
    // spectral gradient would spread its ringing across the whole log region.
    const ScalarField L = log(tf.im_tau);
    const double c = 1.0 / (12.0 * g.spacing());
    ScalarField rho(g);
    for (int j = 0; j < g.n(); ++j)
        for (int i = 0; i < g.n(); ++i) {
            const double dx = c * (L.at(i - 2, j) - 8.0 * L.at(i - 1, j) + 8.0 * L.at(i + 1, j) - L.at(i + 2, j));
            const double dy = c * (L.at(i, j - 2) - 8.0 * L.at(i, j - 1) + 8.0 * L.at(i, j + 1) - L.at(i, j + 2));
            rho[g.index(i, j)] = 0.5 * (dx * dx + dy * dy);
        }
    return {std::move(rho), {}};
}

double required_area(const FibrationModel& m, const Grid& g) {
    return required_area(m, weil_petersson(m, g).smooth_mass());
}

BackgroundGeometry build_background(const FibrationModel& m, const Grid& g) {
    validate_model(m);
    const auto pts = marked_points(m);
    const double min_sep = 8.0 * g.spacing();
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            if (periodic_distance(pts[i], pts[j]) <= min_sep) {
                std::ostringstream os;
                os << "marked points " << fmt_point(pts[i]) << " and " << fmt_point(pts[j])
                   << " are closer than 8 cells at N=" << g.n();
                throw ConfigError(os.str());
            }

    FibrationModel snapped = m;
    snapped.cone_point = g.snap(m.cone_point);
    for (auto& f : snapped.fibers) f.point = g.snap(f.point);

    const TauField tf = tau_field(effective_tau_model(snapped), g);
    Current11 wp = weil_petersson(snapped, g);
    const double W = wp.smooth_mass();
    const double A = required_area(snapped, W);
    if (!(A > 2.0 * pi * m.beta * m.delta)) {
        std::ostringstream os;
        os << "delta = " << m.delta << " too large: A + (1/2) Lap(delta |S|^{2 beta}) can turn negative (need delta < "
           << A / (2.0 * pi * m.beta) << ")";
        throw ConfigError(os.str());
    }

    ScalarField log_q = green_potential(g, snapped.cone_point).field;
    log_q += -log_q.max();
    ScalarField q = exp(log_q);

    std::vector<Point> fiber_points;
    for (const auto& f : snapped.fibers) fiber_points.push_back(f.point);

    return BackgroundGeometry{g,        snapped.cone_point, std::move(fiber_points), A, A,
                              std::move(q), std::move(log_q), 2.0 * pi, std::move(wp), tf.im_tau, tf.valid};
}

DensityData assemble_F(const FibrationModel& m, const BackgroundGeometry& bg) {
    const Grid& g = bg.grid;
    const double expected = required_area(m, bg.wp.smooth_mass());
    if (std::abs(expected - bg.A) > 1e-10 * std::max(1.0, expected))
        throw ConsistencyError("background area does not satisfy the area identity");

    ScalarField rhs = -1.0 * bg.wp.density;
    rhs += bg.A - 2.0 * pi * (1.0 - m.beta) - 2.0 * pi * orbifold_sum(m);
    const double residual = rhs.mean();
    if (std::abs(residual) > 1e-9) {
        std::ostringstream os;
        os << "curvature source of log F has mean " << residual << "; model areas are inconsistent";
        throw ConsistencyError(os.str());
    }
    rhs += -residual;
    ScalarField log_F = solve_poisson(rhs);

    DensityData out{ScalarField(g), {}, 0.0, residual};
    for (std::size_t i = 0; i < bg.fiber_points.size(); ++i) {
        const int mi = m.fibers[i].m;
        if (mi == 1) continue;
        const double c = -double(mi - 1) / mi;
        log_F += c * green_potential(g, bg.fiber_points[i]).field;
        out.singular_exponents.push_back({bg.fiber_points[i], 2.0 * c});
    }
    const double top = log_F.max();
    const double mass = integrate(exp(log_F + (-top)));
    out.c_F = -top - std::log(mass);
    log_F += out.c_F;
    out.log_F = std::move(log_F);
    return out;
}

LpReport validate_Lp(const FibrationModel& m, std::span<const int> grid_sizes) {
    LpReport rep;
    for (const auto& f : m.fibers)
        if (f.m > 1) rep.p_star_F = std::min(rep.p_star_F, double(f.m) / (f.m - 1));
    rep.p_star = std::min(rep.p_star_F, 1.0 / (1.0 - m.beta));
    rep.p_below = 0.95 * rep.p_star;
    const bool finite = std::isfinite(rep.p_star_F);
    rep.p_above = finite ? 1.05 * rep.p_star : 0.0;
    for (int n : grid_sizes) {
        const Grid g(n);
        const auto bg = build_background(m, g);
        const auto dd = assemble_F(m, bg);
        rep.grid_sizes.push_back(n);
        rep.below.push_back(integrate(exp(rep.p_below * dd.log_F)));
        if (finite) rep.above.push_back(integrate(exp(rep.p_above * dd.log_F)));
    }
    const std::size_t k = rep.below.size();
    if (k >= 2) {
        rep.below_change = std::abs(rep.below[k - 1] / rep.below[k - 2] - 1.0);
        rep.stabilizes = rep.below_change <= 0.05;
        if (finite) {
            rep.above_growth = rep.above[k - 1] / rep.above[k - 2] - 1.0;
            rep.diverges = rep.above_growth >= 0.20;
        }
    }
    return rep;
}

} // namespace ckrf
