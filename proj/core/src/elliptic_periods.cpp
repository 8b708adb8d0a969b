#include "ckrf/elliptic_periods.hpp"

#include "ckrf/errors.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <numbers>
#include <sstream>

namespace ckrf {

using std::numbers::pi;

Complex agm(Complex a, Complex b) {
    if (a == Complex(0.0) || b == Complex(0.0)) return Complex(0.0);
    for (int it = 0; it < 64; ++it) {
        const Complex a1 = 0.5 * (a + b);
        Complex b1 = std::sqrt(a * b);
        if (std::abs(a1 - b1) > std::abs(a1 + b1)) b1 = -b1;
        a = a1;
        b = b1;
        if (std::abs(a - b) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(a)) return a;
    }
    throw NumericalError("agm did not converge within 64 iterations");
}

Complex discriminant(const WeierstrassCurve& c) { return c.g2 * c.g2 * c.g2 - 27.0 * c.g3 * c.g3; }

Complex reduce_tau(Complex tau) {
    if (!(tau.imag() > 0.0)) throw DomainError("tau must lie in the upper half plane");
    for (int it = 0; it < 1000; ++it) {
        tau -= std::round(tau.real());
        if (tau.real() <= -0.5) tau += 1.0;
        const double n2 = std::norm(tau);
        if (n2 < 1.0 - 1e-15) {
            tau = -1.0 / tau;
            continue;
        }
        if (std::abs(n2 - 1.0) <= 1e-15 && tau.real() < 0.0) tau = -1.0 / tau;
        if (tau.real() <= -0.5) tau += 1.0;
        return tau;
    }
    throw NumericalError("tau reduction did not terminate");
}

namespace {

std::array<Complex, 3> cubic_roots(const WeierstrassCurve& c) {
    // x^3 + p x + q with p = -g2/4, q = -g3/4.
    const Complex p = -c.g2 / 4.0;
    const Complex q = -c.g3 / 4.0;
    const Complex w(-0.5, std::sqrt(3.0) / 2.0);
    std::array<Complex, 3> r;
    const Complex d = std::sqrt(q * q / 4.0 + p * p * p / 27.0);
    Complex s = -q / 2.0 + d;
    const Complex s2 = -q / 2.0 - d;
    if (std::abs(s2) > std::abs(s)) s = s2;
    if (std::abs(s) == 0.0) {
        r = {Complex(0.0), Complex(0.0), Complex(0.0)};
    } else {
        const Complex u = std::pow(s, 1.0 / 3.0);
        const Complex v = -p / (3.0 * u);
        r = {u + v, w * u + std::conj(w) * v, std::conj(w) * u + w * v};
    }
    for (Complex& x : r) {
        for (int it = 0; it < 3; ++it) {
            const Complex f = x * x * x + p * x + q;
            const Complex df = 3.0 * x * x + p;
            if (std::abs(df) == 0.0) break;
            x -= f / df;
        }
    }
    return r;
}

// Invariants of the lattice Z w1 + Z w2 from the q-expansions of E4 and E6.
std::pair<Complex, Complex> lattice_invariants(Complex w1, Complex w2) {
    const Complex tau = w2 / w1;
    const Complex q = std::exp(Complex(0.0, 2.0 * pi) * tau);
    Complex e4(1.0), e6(1.0), qn(1.0);
    for (int n = 1; n <= 40; ++n) {
        qn *= q;
        double s3 = 0.0, s5 = 0.0;
        for (int d = 1; d <= n; ++d) {
            if (n % d == 0) {
                s3 += std::pow(double(d), 3);
                s5 += std::pow(double(d), 5);
            }
        }
        e4 += 240.0 * s3 * qn;
        e6 -= 504.0 * s5 * qn;
        if (std::abs(qn) * s5 < 1e-18) break;
    }
    const Complex z = pi / w1;
    const Complex z2 = z * z;
    return {4.0 / 3.0 * z2 * z2 * e4, 8.0 / 27.0 * z2 * z2 * z2 * e6};
}

// Reduces a positively oriented lattice basis so that w2/w1 is in the
// fundamental domain.
void reduce_basis(Complex& w1, Complex& w2) {
    for (int it = 0; it < 1000; ++it) {
        const double m = std::round((w2 / w1).real());
        w2 -= m * w1;
        if (std::abs(w2) < std::abs(w1) * (1.0 - 1e-15)) {
            const Complex t = w1;
            w1 = -w2;
            w2 = t;
        } else {
            break;
        }
    }
    Complex tau = w2 / w1;
    if (tau.real() <= -0.5) {
        w2 += w1;
        tau += 1.0;
    }
    if (std::abs(std::norm(tau) - 1.0) <= 1e-14 && tau.real() < 0.0) {
        const Complex t = w1;
        w1 = -w2;
        w2 = t;
    }
}

double invariant_mismatch(const WeierstrassCurve& c, Complex w1, Complex w2) {
    auto [g2, g3] = lattice_invariants(w1, w2);
    const double s2 = std::abs(c.g2) + std::pow(std::abs(c.g3), 2.0 / 3.0);
    const double s3 = std::abs(c.g3) + std::pow(std::abs(c.g2), 1.5);
    return std::abs(g2 - c.g2) / s2 + std::abs(g3 - c.g3) / s3;
}

} // namespace

Periods periods_from_weierstrass(const WeierstrassCurve& c) {
    const Complex disc = discriminant(c);
    const double scale = std::pow(std::abs(c.g2), 3) + 27.0 * std::pow(std::abs(c.g3), 2);
    if (scale == 0.0 || std::abs(disc) <= 1e-12 * scale) {
        std::ostringstream os;
        os << "singular Weierstrass curve (discriminant " << disc << ")";
        throw ModelError(os.str());
    }
    const auto roots = cubic_roots(c);
    static constexpr int order[3][3] = {{0, 1, 2}, {1, 2, 0}, {2, 0, 1}};
    double best_err = std::numeric_limits<double>::infinity();
    Complex best1, best2;
    for (const auto& o : order) {
        const Complex e1 = roots[o[0]], e2 = roots[o[1]], e3 = roots[o[2]];
        const Complex a = std::sqrt(e1 - e3);
        Complex b = std::sqrt(e1 - e2);
        Complex cc = std::sqrt(e2 - e3);
        if (std::abs(a - b) > std::abs(a + b)) b = -b;
        if (std::abs(a - cc) > std::abs(a + cc)) cc = -cc;
        Complex w1 = pi / agm(a, b);
        Complex w2 = Complex(0.0, pi) / agm(a, cc);
        if ((w2 / w1).imag() < 0.0) w2 = -w2;
        reduce_basis(w1, w2);
        const double err = invariant_mismatch(c, w1, w2);
        if (err < best_err) {
            best_err = err;
            best1 = w1;
            best2 = w2;
        }
        if (err < 1e-9) break;
    }
    if (!(best_err < 1e-6)) {
        std::ostringstream os;
        os << "period lattice failed the invariant check (mismatch " << best_err << ")";
        throw NumericalError(os.str());
    }
    return {best1 / 2.0, best2 / 2.0, best2 / best1};
}

std::string to_string(TauModel::Kind k) {
    switch (k) {
    case TauModel::Kind::constant: return "constant";
    case TauModel::Kind::local_ib: return "local_ib";
    case TauModel::Kind::weierstrass: return "weierstrass";
    }
    return "?";
}

TauModel::Kind parse_tau_kind(const std::string& s) {
    if (s == "constant") return TauModel::Kind::constant;
    if (s == "local_ib") return TauModel::Kind::local_ib;
    if (s == "weierstrass") return TauModel::Kind::weierstrass;
    throw ConfigError("tau_model.kind: unknown kind '" + s + "'");
}

namespace {

double smoothstep5(double t) {
    t = std::clamp(t, 0.0, 1.0);
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0);
}

// -log d near the site, blended to -log R over [R/2, R].
double capped_log(double d, double R) {
    const double lr = -std::log(R);
    if (d >= R) return lr;
    const double ld = -std::log(d);
    if (d <= 0.5 * R) return ld;
    const double s = smoothstep5((d - 0.5 * R) / (0.5 * R));
    return (1.0 - s) * ld + s * lr;
}

// Quadratic in u = d^2 agreeing with -log d = -(1/2) log u to second order at u0.
double core_log(double d, double d0) {
    const double u0 = d0 * d0;
    const double du = d * d - u0;
    return -0.5 * std::log(u0) - du / (2.0 * u0) + du * du / (4.0 * u0 * u0);
}

WeierstrassCurve curve_at(const TauModel& m, Point s) {
    const double w = std::cos(2.0 * pi * s.x) * std::cos(2.0 * pi * s.y);
    return {m.curve.g2 + w * m.g2_amplitude, m.curve.g3 + w * m.g3_amplitude};
}

void validate_tau_model(const TauModel& m) {
    if (m.kind == TauModel::Kind::constant && !(m.tau0.imag() > 0.0))
        throw ModelError("tau_model.tau: Im tau0 must be positive");
    if (m.kind == TauModel::Kind::local_ib) {
        if (!(m.cap_radius > 0.0 && m.cap_radius <= 0.45))
            throw ModelError("tau_model.cap_radius must lie in (0, 0.45]");
        for (const auto& site : m.sites)
            if (site.b < 0) throw ModelError("tau_model: I_b index must be nonnegative");
    }
}

} // namespace

double im_tau_at(const TauModel& m, Point s) {
    validate_tau_model(m);
    switch (m.kind) {
    case TauModel::Kind::constant: return reduce_tau(m.tau0).imag();
    case TauModel::Kind::weierstrass: return periods_from_weierstrass(curve_at(m, s)).tau.imag();
    case TauModel::Kind::local_ib: {
        double v = m.offset;
        for (const auto& site : m.sites) {
            if (site.b == 0) continue;
            const double d = periodic_distance(s, site.point);
            if (d == 0.0) return std::numeric_limits<double>::infinity();
            v += site.b / (2.0 * pi) * capped_log(d, m.cap_radius);
        }
        return v;
    }
    }
    return 0.0;
}

TauField tau_field(const TauModel& m, const Grid& g) {
    validate_tau_model(m);
    TauField out{ScalarField(g), Mask(g, true)};
    const double d0 = 2.0 * g.spacing();
    for (std::size_t k = 0; k < g.size(); ++k) {
        const Point s = g.coord(k);
        double v = 0.0;
        switch (m.kind) {
        case TauModel::Kind::constant: v = reduce_tau(m.tau0).imag(); break;
        case TauModel::Kind::weierstrass: v = periods_from_weierstrass(curve_at(m, s)).tau.imag(); break;
        case TauModel::Kind::local_ib:
            v = m.offset;
            for (const auto& site : m.sites) {
                if (site.b == 0) continue;
                const double d = periodic_distance(s, site.point);
                if (d <= d0 * (1.0 + 1e-12)) {
                    out.valid.on[k] = 0;
                    v += site.b / (2.0 * pi) * core_log(d, d0);
                } else {
                    v += site.b / (2.0 * pi) * capped_log(d, m.cap_radius);
                }
            }
            break;
        }
        out.im_tau[k] = v;
        if (out.valid.on[k] && !(v > 0.0)) {
            std::ostringstream os;
            const Point p = g.coord(k);
            os << "Im tau = " << v << " <= 0 at (" << p.x << ", " << p.y << ")";
            throw ModelError(os.str());
        }
    }
    return out;
}

} // namespace ckrf
