#include "ckrf/torus_field.hpp"

#include "ckrf/errors.hpp"
#include "spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>

namespace ckrf {

namespace detail {

namespace {

struct Plans {
    fftw_plan fwd = nullptr;
    fftw_plan inv = nullptr;
    Plans() = default;
    Plans(const Plans&) = delete;
    Plans& operator=(const Plans&) = delete;
    ~Plans() {
        if (fwd) fftw_destroy_plan(fwd);
        if (inv) fftw_destroy_plan(inv);
    }
};

const Plans& plans_for(int n) {
    // FFTW's planner is not thread safe; execution of existing plans is.
    static std::mutex mu;
    static std::map<int, std::unique_ptr<Plans>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[n];
    if (!slot) {
        slot = std::make_unique<Plans>();
        const std::size_t nr = static_cast<std::size_t>(n) * n;
        const std::size_t nc = static_cast<std::size_t>(n) * half_width(n);
        double* r = fftw_alloc_real(nr);
        fftw_complex* c = fftw_alloc_complex(nc);
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        slot->fwd = fftw_plan_dft_r2c_2d(n, n, r, c, flags);
        slot->inv = fftw_plan_dft_c2r_2d(n, n, c, r, flags);
        fftw_free(r);
        fftw_free(c);
        if (!slot->fwd || !slot->inv) throw NumericalError("FFTW plan creation failed");
    }
    return *slot;
}

} // namespace

Spectrum forward(int n, std::span<const double> values) {
    const Plans& p = plans_for(n);
    std::vector<double> in(values.begin(), values.end());
    Spectrum out(static_cast<std::size_t>(n) * half_width(n));
    fftw_execute_dft_r2c(p.fwd, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

std::vector<double> synthesize(int n, Spectrum coefficients) {
    const Plans& p = plans_for(n);
    std::vector<double> out(static_cast<std::size_t>(n) * n);
    fftw_execute_dft_c2r(p.inv, reinterpret_cast<fftw_complex*>(coefficients.data()), out.data());
    return out;
}

std::vector<double> inverse(int n, Spectrum coeffs) {
    auto out = synthesize(n, std::move(coeffs));
    const double scale = 1.0 / (double(n) * n);
    for (double& v : out) v *= scale;
    return out;
}

} // namespace detail

using std::numbers::pi;

Point wrap(Point p) {
    auto w = [](double v) {
        double r = v - std::floor(v);
        return r >= 1.0 ? 0.0 : r;
    };
    return {w(p.x), w(p.y)};
}

Point periodic_offset(Point from, Point to) {
    auto d = [](double a, double b) {
        double v = b - a;
        return v - std::round(v);
    };
    return {d(from.x, to.x), d(from.y, to.y)};
}

double periodic_distance(Point a, Point b) {
    const Point o = periodic_offset(a, b);
    return std::hypot(o.x, o.y);
}

// ---- Grid -------------------------------------------------------------------

Grid::Grid(int n) : n_(n) {
    if (n < 16 || n % 2 != 0) {
        std::ostringstream os;
        os << "grid size must be even and >= 16, got " << n;
        throw ConfigError(os.str());
    }
}

std::size_t Grid::index(int i, int j) const noexcept {
    i %= n_;
    j %= n_;
    if (i < 0) i += n_;
    if (j < 0) j += n_;
    return static_cast<std::size_t>(j) * n_ + i;
}

Point Grid::coord(std::size_t k) const noexcept {
    return coord(static_cast<int>(k % n_), static_cast<int>(k / n_));
}

std::pair<int, int> Grid::nearest_node(Point p) const noexcept {
    const Point w = wrap(p);
    int i = static_cast<int>(std::lround(w.x * n_)) % n_;
    int j = static_cast<int>(std::lround(w.y * n_)) % n_;
    return {i, j};
}

Point Grid::snap(Point p) const noexcept {
    auto [i, j] = nearest_node(p);
    return coord(i, j);
}

Grid make_grid(int n) { return Grid(n); }

// ---- ScalarField -------------------------------------------------------------

ScalarField::ScalarField(const Grid& g, double value) : grid_(g), values_(g.size(), value) {}

ScalarField::ScalarField(const Grid& g, std::vector<double> values)
    : grid_(g), values_(std::move(values)) {
    if (values_.size() != grid_.size()) throw ConfigError("field size does not match grid");
}

ScalarField ScalarField::from_function(const Grid& g, const std::function<double(Point)>& f) {
    ScalarField out(g);
    for (std::size_t k = 0; k < g.size(); ++k) out.values_[k] = f(g.coord(k));
    return out;
}

bool ScalarField::is_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void ScalarField::require_finite(const char* what) const {
    if (!is_finite()) throw NumericalError(std::string("non-finite values in ") + what);
}

double ScalarField::mean() const noexcept {
    double s = 0.0;
    for (double v : values_) s += v;
    return s / double(values_.size());
}

double ScalarField::min() const noexcept { return *std::min_element(values_.begin(), values_.end()); }
double ScalarField::max() const noexcept { return *std::max_element(values_.begin(), values_.end()); }

double ScalarField::sup_norm() const noexcept {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

namespace {
void require_same_grid(const ScalarField& a, const ScalarField& b) {
    if (!(a.grid() == b.grid())) throw ConfigError("fields live on different grids");
}
} // namespace

ScalarField& ScalarField::operator+=(const ScalarField& o) {
    require_same_grid(*this, o);
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
    return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
    require_same_grid(*this, o);
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
    return *this;
}

ScalarField& ScalarField::operator*=(const ScalarField& o) {
    require_same_grid(*this, o);
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] *= o.values_[k];
    return *this;
}

ScalarField& ScalarField::operator+=(double c) noexcept {
    for (double& v : values_) v += c;
    return *this;
}

ScalarField& ScalarField::operator*=(double c) noexcept {
    for (double& v : values_) v *= c;
    return *this;
}

ScalarField ScalarField::map(const std::function<double(double)>& f) const {
    ScalarField out(grid_);
    for (std::size_t k = 0; k < values_.size(); ++k) out.values_[k] = f(values_[k]);
    return out;
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(ScalarField a, const ScalarField& b) { return a *= b; }
ScalarField operator*(double c, ScalarField a) { return a *= c; }
ScalarField operator+(ScalarField a, double c) { return a += c; }

ScalarField exp(const ScalarField& f) {
    return f.map([](double v) { return std::exp(v); });
}

ScalarField log(const ScalarField& f) {
    return f.map([](double v) { return std::log(v); });
}

std::size_t Mask::count() const noexcept {
    return static_cast<std::size_t>(std::count_if(on.begin(), on.end(), [](std::uint8_t b) { return b != 0; }));
}

double sup_on(const ScalarField& f, const Mask& m) {
    if (!(f.grid() == m.grid)) throw ConfigError("mask and field live on different grids");
    double s = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k)
        if (m.on[k]) s = std::max(s, std::abs(f[k]));
    return s;
}

// ---- spectral calculus --------------------------------------------------------

namespace {

template <class Multiplier>
ScalarField apply_multiplier(const ScalarField& f, Multiplier mult) {
    const int n = f.grid().n();
    auto coeffs = detail::forward(n, f.values());
    const std::size_t w = detail::half_width(n);
    for (int j = 0; j < n; ++j) {
        const int ky = detail::wavenumber(j, n);
        for (std::size_t i = 0; i < w; ++i) {
            coeffs[j * w + i] *= mult(static_cast<int>(i), ky);
        }
    }
    return ScalarField(f.grid(), detail::inverse(n, std::move(coeffs)));
}

} // namespace

ScalarField laplacian(const ScalarField& f) {
    f.require_finite("laplacian input");
    const double c = -4.0 * pi * pi;
    ScalarField out = apply_multiplier(f, [c](int kx, int ky) {
        return std::complex<double>(c * double(kx * kx + ky * ky), 0.0);
    });
    return out;
}

Gradient gradient(const ScalarField& f) {
    f.require_finite("gradient input");
    const int n = f.grid().n();
    auto dx = apply_multiplier(f, [n](int kx, int) {
        if (kx == n / 2) return std::complex<double>(0.0, 0.0);
        return std::complex<double>(0.0, 2.0 * pi * kx);
    });
    auto dy = apply_multiplier(f, [n](int, int ky) {
        if (ky == n / 2 || ky == -n / 2) return std::complex<double>(0.0, 0.0);
        return std::complex<double>(0.0, 2.0 * pi * ky);
    });
    return {std::move(dx), std::move(dy)};
}

ScalarField solve_poisson(const ScalarField& rhs, double tol) {
    rhs.require_finite("poisson right-hand side");
    const double m = rhs.mean();
    if (std::abs(m) > tol) {
        std::ostringstream os;
        os << "poisson right-hand side has non-zero mean " << m;
        throw SolvabilityError(os.str(), m);
    }
    return apply_multiplier(rhs, [](int kx, int ky) {
        const int k2 = kx * kx + ky * ky;
        if (k2 == 0) return std::complex<double>(0.0, 0.0);
        return std::complex<double>(-1.0 / (2.0 * pi * pi * k2), 0.0);
    });
}

ScalarField solve_shifted_poisson(const ScalarField& rhs, double shift, double scale) {
    if (!(shift > 0.0) || scale < 0.0) throw DomainError("shifted poisson needs shift > 0, scale >= 0");
    return apply_multiplier(rhs, [shift, scale](int kx, int ky) {
        const double k2 = double(kx * kx + ky * ky);
        return std::complex<double>(1.0 / (shift + scale * 2.0 * pi * pi * k2), 0.0);
    });
}

namespace {

// Fourier phase e^{-2 pi i k p} of a delta at p; the Nyquist mode keeps only
// its real part so the band-limited delta stays real and lattice shifts act
// exactly.
std::complex<double> phase(int k, int n, double p) {
    if (k == n / 2 || k == -n / 2) return {std::cos(2.0 * pi * k * p), 0.0};
    const double a = -2.0 * pi * k * p;
    return {std::cos(a), std::sin(a)};
}

template <class Coefficient>
ScalarField synthesize_point_series(const Grid& g, Point p, Coefficient coef) {
    const int n = g.n();
    const std::size_t w = detail::half_width(n);
    const Point q = wrap(p);
    detail::Spectrum coeffs(static_cast<std::size_t>(n) * w);
    std::vector<std::complex<double>> px(w);
    for (std::size_t i = 0; i < w; ++i) px[i] = phase(static_cast<int>(i), n, q.x);
    for (int j = 0; j < n; ++j) {
        const int ky = detail::wavenumber(j, n);
        const auto py = phase(ky, n, q.y);
        for (std::size_t i = 0; i < w; ++i) {
            coeffs[j * w + i] = coef(static_cast<int>(i), ky) * px[i] * py;
        }
    }
    return ScalarField(g, detail::synthesize(n, std::move(coeffs)));
}

} // namespace

ScalarField grid_delta(const Grid& g, Point p) {
    return synthesize_point_series(g, p, [](int, int) { return 1.0; });
}

GreenPotential green_potential(const Grid& g, Point p) {
    ScalarField field = synthesize_point_series(g, p, [](int kx, int ky) {
        const int k2 = kx * kx + ky * ky;
        return k2 == 0 ? 0.0 : -1.0 / (pi * k2);
    });
    return {wrap(p), std::move(field)};
}

double integrate(const ScalarField& f) { return f.mean(); }

double inner(const ScalarField& f, const ScalarField& g) {
    require_same_grid(f, g);
    double s = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) s += f[k] * g[k];
    return s / double(f.size());
}

// ---- sampling -----------------------------------------------------------------

double sample_bilinear(const ScalarField& f, Point p) {
    const Grid& g = f.grid();
    const int n = g.n();
    const Point w = wrap(p);
    const double fx = w.x * n;
    const double fy = w.y * n;
    const int i0 = static_cast<int>(std::floor(fx));
    const int j0 = static_cast<int>(std::floor(fy));
    const double tx = fx - i0;
    const double ty = fy - j0;
    const double v00 = f.at(i0, j0);
    const double v10 = f.at(i0 + 1, j0);
    const double v01 = f.at(i0, j0 + 1);
    const double v11 = f.at(i0 + 1, j0 + 1);
    return (1 - tx) * (1 - ty) * v00 + tx * (1 - ty) * v10 + (1 - tx) * ty * v01 + tx * ty * v11;
}

std::vector<RadialSample> radial_profile(const ScalarField& f, Point center,
                                         std::span<const double> radii, int n_angles) {
    const double h = f.grid().spacing();
    if (n_angles < 64) throw DomainError("radial_profile needs at least 64 angles");
    std::vector<RadialSample> out;
    out.reserve(radii.size());
    for (double r : radii) {
        if (!(r > 2.0 * h) || !(r < 0.4)) {
            std::ostringstream os;
            os << "radius " << r << " outside (" << 2.0 * h << ", 0.4)";
            throw DomainError(os.str());
        }
        double s = 0.0;
        for (int a = 0; a < n_angles; ++a) {
            const double th = 2.0 * pi * a / n_angles;
            s += sample_bilinear(f, {center.x + r * std::cos(th), center.y + r * std::sin(th)});
        }
        out.push_back({r, s / n_angles});
    }
    return out;
}

ScalarField disk_coverage(const Grid& g, Point center, double radius, int sub_samples) {
    ScalarField w(g);
    const double h = g.spacing();
    const double rim = h * std::sqrt(0.5);
    for (std::size_t k = 0; k < g.size(); ++k) {
        const Point c = g.coord(k);
        const Point o = periodic_offset(center, c);
        const double d = std::hypot(o.x, o.y);
        if (d <= radius - rim) {
            w[k] = 1.0;
        } else if (d < radius + rim) {
            int inside = 0;
            for (int a = 0; a < sub_samples; ++a) {
                const double sx = o.x + h * ((a + 0.5) / sub_samples - 0.5);
                for (int b = 0; b < sub_samples; ++b) {
                    const double sy = o.y + h * ((b + 0.5) / sub_samples - 0.5);
                    if (sx * sx + sy * sy <= radius * radius) ++inside;
                }
            }
            w[k] = double(inside) / (double(sub_samples) * sub_samples);
        }
    }
    return w;
}

} // namespace ckrf
