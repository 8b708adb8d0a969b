#pragma once

// Periodic grid on the unit square [0,1)^2 with spectral calculus.
//
// Density convention: a (1,1)-form is stored as its density against
// dA = dx dy, and i dd-bar u has density (1/2) Lap u. Every operator
// below follows that convention.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace ckrf {

struct Point {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Point&) const = default;
};

/// Wrap a point into [0,1)^2.
Point wrap(Point p);

/// Minimal-image displacement from `from` to `to` on the unit torus.
Point periodic_offset(Point from, Point to);

double periodic_distance(Point a, Point b);

class Grid {
public:
    /// Throws ConfigError unless n is even and n >= 16.
    explicit Grid(int n);

    int n() const noexcept { return n_; }
    double spacing() const noexcept { return 1.0 / n_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(n_) * n_; }

    /// Row-major index: i runs along x, j along y; both wrap periodically.
    std::size_t index(int i, int j) const noexcept;
    Point coord(int i, int j) const noexcept { return {double(i) / n_, double(j) / n_}; }
    Point coord(std::size_t k) const noexcept;

    std::pair<int, int> nearest_node(Point p) const noexcept;
    Point snap(Point p) const noexcept;

    bool operator==(const Grid&) const = default;

private:
    int n_;
};

Grid make_grid(int n);

/// Real field sampled on a Grid.
class ScalarField {
public:
    explicit ScalarField(const Grid& g, double value = 0.0);
    ScalarField(const Grid& g, std::vector<double> values);

    static ScalarField from_function(const Grid& g, const std::function<double(Point)>& f);

    const Grid& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    double operator[](std::size_t k) const noexcept { return values_[k]; }
    double& operator[](std::size_t k) noexcept { return values_[k]; }
    double at(int i, int j) const noexcept { return values_[grid_.index(i, j)]; }

    bool is_finite() const noexcept;
    /// Throws NumericalError naming `what` when a value is NaN or infinite.
    void require_finite(const char* what) const;

    double mean() const noexcept;
    double min() const noexcept;
    double max() const noexcept;
    double sup_norm() const noexcept;

    ScalarField& operator+=(const ScalarField& o);
    ScalarField& operator-=(const ScalarField& o);
    ScalarField& operator*=(const ScalarField& o);
    ScalarField& operator+=(double c) noexcept;
    ScalarField& operator*=(double c) noexcept;

    ScalarField map(const std::function<double(double)>& f) const;

private:
    Grid grid_;
    std::vector<double> values_;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(ScalarField a, const ScalarField& b);
ScalarField operator*(double c, ScalarField a);
ScalarField operator+(ScalarField a, double c);

ScalarField exp(const ScalarField& f);
ScalarField log(const ScalarField& f);

/// Grid subset; `on[k] != 0` selects node k.
struct Mask {
    Grid grid;
    std::vector<std::uint8_t> on;

    explicit Mask(const Grid& g, bool value = false) : grid(g), on(g.size(), value ? 1 : 0) {}
    std::size_t count() const noexcept;
    bool empty() const noexcept { return count() == 0; }
};

double sup_on(const ScalarField& f, const Mask& m);

// ---- spectral calculus -------------------------------------------------

/// Spectral Laplacian dxx + dyy.
ScalarField laplacian(const ScalarField& f);

struct Gradient {
    ScalarField dx;
    ScalarField dy;
};

/// Spectral gradient; the Nyquist modes are dropped.
Gradient gradient(const ScalarField& f);

/// Solves (1/2) Lap u = rhs with mean(u) = 0. Throws SolvabilityError if
/// |mean(rhs)| > tol.
ScalarField solve_poisson(const ScalarField& rhs, double tol = 1e-10);

/// Solves (shift - scale * (1/2) Lap) u = rhs for shift > 0, scale >= 0.
ScalarField solve_shifted_poisson(const ScalarField& rhs, double shift, double scale);

/// Band-limited unit-mass delta at p. At a lattice point this is the
/// Kronecker delta of weight n^2.
ScalarField grid_delta(const Grid& g, Point p);

struct GreenPotential {
    Point anchor;
    ScalarField field;
};

/// Mean-zero Psi_p with (1/2) Lap Psi_p = 2 pi (delta_p - 1); Psi_p ~ 2 log|s - p|.
GreenPotential green_potential(const Grid& g, Point p);

/// Periodic quadrature: mean of the samples times the unit area.
double integrate(const ScalarField& f);

/// Integral of f*g.
double inner(const ScalarField& f, const ScalarField& g);

// ---- sampling ----------------------------------------------------------

double sample_bilinear(const ScalarField& f, Point p);

struct RadialSample {
    double radius;
    double mean;
};

/// Circle means about `center` from bilinear interpolation. Radii must lie
/// in (2/N, 0.4); throws DomainError otherwise.
std::vector<RadialSample> radial_profile(const ScalarField& f, Point center,
                                         std::span<const double> radii, int n_angles = 64);

/// Fraction of each grid cell (centred on its node) inside the periodic disk
/// |s - center| <= radius, from sub_samples^2 sub-cell points on the rim.
ScalarField disk_coverage(const Grid& g, Point center, double radius, int sub_samples = 16);

} // namespace ckrf
