#include "ckrf/errors.hpp"
#include "ckrf/torus_field.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

using namespace ckrf;
using std::numbers::pi;

namespace {

ScalarField random_field(const Grid& g, unsigned seed, bool zero_mean = false) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    ScalarField f(g);
    for (std::size_t k = 0; k < f.size(); ++k) f[k] = nd(rng);
    if (zero_mean) f += -f.mean();
    return f;
}

// Smooth periodic test field, band-limited well below Nyquist.
ScalarField smooth_field(const Grid& g, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double c[4][4];
    for (auto& row : c)
        for (double& x : row) x = u(rng);
    return ScalarField::from_function(g, [&](Point p) {
        double v = 0.0;
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) v += c[a][b] * std::cos(2 * pi * (a * p.x + b * p.y) + a - b);
        return v;
    });
}

// O(N^4) reference: (1/2)-free Laplacian via a direct DFT with wavenumbers in
// (-N/2, N/2) and the Nyquist mode treated as a cosine.
ScalarField naive_laplacian(const ScalarField& f) {
    const int n = f.grid().n();
    using C = std::complex<double>;
    std::vector<C> hat(f.size());
    for (int ky = 0; ky < n; ++ky)
        for (int kx = 0; kx < n; ++kx) {
            C s = 0;
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i) s += f.at(i, j) * std::polar(1.0, -2 * pi * (kx * i + ky * j) / n);
            hat[ky * n + kx] = s;
        }
    ScalarField out(f.grid());
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            C s = 0;
            for (int ky = 0; ky < n; ++ky)
                for (int kx = 0; kx < n; ++kx) {
                    const int sx = kx <= n / 2 ? kx : kx - n;
                    const int sy = ky <= n / 2 ? ky : ky - n;
                    const double k2 = double(sx) * sx + double(sy) * sy;
                    s += -4 * pi * pi * k2 * hat[ky * n + kx] * std::polar(1.0, 2 * pi * (kx * i + ky * j) / n);
                }
            out[f.grid().index(i, j)] = s.real() / (double(n) * n);
        }
    return out;
}

} // namespace

TEST(Grid, SpacingAndSize) {
    const Grid g = make_grid(64);
    EXPECT_DOUBLE_EQ(g.spacing(), 0.015625);
    EXPECT_EQ(g.size(), 4096u);
    EXPECT_EQ(make_grid(16).n(), 16);
    EXPECT_THROW(make_grid(15), ConfigError);
    EXPECT_THROW(make_grid(14), ConfigError);
    EXPECT_DOUBLE_EQ(g.spacing() * g.n(), 1.0);
}

TEST(Grid, PeriodicIndexAndDistance) {
    const Grid g(16);
    EXPECT_EQ(g.index(-1, 0), g.index(15, 0));
    EXPECT_EQ(g.index(16, 17), g.index(0, 1));
    EXPECT_NEAR(periodic_distance({0.05, 0.5}, {0.95, 0.5}), 0.1, 1e-15);
    EXPECT_EQ(g.snap({0.49, 0.51}), (Point{0.5, 0.5}));
}

TEST(Laplacian, ConstantsAndEigenfunctions) {
    const Grid g(32);
    EXPECT_LE(laplacian(ScalarField(g, 3.0)).sup_norm(), 1e-12);
    const auto c = ScalarField::from_function(g, [](Point p) { return std::cos(2 * pi * p.x); });
    ScalarField err = laplacian(c) - (-4 * pi * pi) * c;
    EXPECT_LE(err.sup_norm(), 1e-10);
}

TEST(Laplacian, MatchesDirectDftAtN16) {
    const Grid g(16);
    const ScalarField f = random_field(g, 7);
    const ScalarField ref = naive_laplacian(f);
    EXPECT_LE((laplacian(f) - ref).sup_norm(), 1e-9 * ref.sup_norm());
}

TEST(Laplacian, RandomFieldHasZeroMean) {
    const Grid g(64);
    EXPECT_LE(std::abs(laplacian(random_field(g, 3)).mean()), 1e-12);
}

TEST(Laplacian, SelfAdjoint) {
    const Grid g(64);
    const ScalarField f = smooth_field(g, 1), h = smooth_field(g, 2);
    EXPECT_LE(std::abs(inner(laplacian(f), h) - inner(f, laplacian(h))), 1e-9);
}

TEST(Gradient, Trigonometric) {
    const Grid g(32);
    const auto f = ScalarField::from_function(g, [](Point p) { return std::sin(2 * pi * p.x) * std::cos(4 * pi * p.y); });
    const auto gr = gradient(f);
    const auto dx = ScalarField::from_function(g, [](Point p) { return 2 * pi * std::cos(2 * pi * p.x) * std::cos(4 * pi * p.y); });
    const auto dy = ScalarField::from_function(g, [](Point p) { return -4 * pi * std::sin(2 * pi * p.x) * std::sin(4 * pi * p.y); });
    EXPECT_LE((gr.dx - dx).sup_norm(), 1e-10);
    EXPECT_LE((gr.dy - dy).sup_norm(), 1e-10);
}

TEST(Poisson, KernelAndFourierMode) {
    const Grid g(32);
    EXPECT_LE(solve_poisson(ScalarField(g)).sup_norm(), 0.0);
    const auto rhs = ScalarField::from_function(g, [](Point p) { return std::cos(2 * pi * p.x); });
    const ScalarField u = solve_poisson(rhs);
    const ScalarField expected = (-1.0 / (2 * pi * pi)) * rhs;
    EXPECT_LE((u - expected).sup_norm(), 1e-14);
}

TEST(Poisson, RoundTripOnRandomMeanZeroData) {
    const Grid g(128);
    const ScalarField rhs = random_field(g, 11, true);
    const ScalarField u = solve_poisson(rhs);
    EXPECT_LE(std::abs(u.mean()), 1e-14);
    ScalarField back = laplacian(u);
    back *= 0.5;
    // Nyquist modes are not reproduced by a spectral Laplacian in this convention,
    // so compare on band-limited data as well.
    const ScalarField smooth = smooth_field(g, 5) + (-smooth_field(g, 5).mean());
    ScalarField back2 = laplacian(solve_poisson(smooth));
    back2 *= 0.5;
    EXPECT_LE((back2 - smooth).sup_norm(), 1e-9);
    EXPECT_LE((back - rhs).sup_norm(), 1e-9 * (1.0 + rhs.sup_norm()));
}

TEST(Poisson, NonzeroMeanReportsMean) {
    const Grid g(16);
    try {
        solve_poisson(ScalarField(g, 0.25));
        FAIL() << "expected SolvabilityError";
    } catch (const SolvabilityError& e) {
        EXPECT_DOUBLE_EQ(e.mean(), 0.25);
    }
}

TEST(ShiftedPoisson, InvertsScreenedOperator) {
    const Grid g(64);
    const ScalarField f = smooth_field(g, 9);
    const ScalarField u = solve_shifted_poisson(f, 2.0, 3.0);
    ScalarField lhs = 2.0 * u;
    lhs -= 1.5 * laplacian(u);
    EXPECT_LE((lhs - f).sup_norm(), 1e-10);
}

TEST(Green, MeanZeroAndDeltaIdentity) {
    const Grid g(64);
    const Point p{0.25, 0.5};
    const GreenPotential G = green_potential(g, p);
    EXPECT_LE(std::abs(G.field.mean()), 1e-13);
    ScalarField lhs = laplacian(G.field);
    lhs *= 0.5;
    ScalarField rhs = grid_delta(g, p);
    rhs += -1.0;
    rhs *= 2 * pi;
    EXPECT_LE((lhs - rhs).sup_norm(), 1e-9 * rhs.sup_norm());
    // A lattice point gives a Kronecker delta of unit mass.
    const ScalarField d = grid_delta(g, p);
    EXPECT_NEAR(integrate(d), 1.0, 1e-12);
    EXPECT_NEAR(d.at(16, 32), double(g.size()), 1e-8);
    EXPECT_NEAR(d.at(17, 32), 0.0, 1e-8);
}

TEST(Green, LatticeShiftMovesOneColumn) {
    const Grid g(32);
    const auto a = green_potential(g, {0.25, 0.5}).field;
    const auto b = green_potential(g, {0.25 + 1.0 / 32, 0.5}).field;
    double err = 0.0;
    for (int j = 0; j < 32; ++j)
        for (int i = 0; i < 32; ++i) err = std::max(err, std::abs(b.at(i + 1, j) - a.at(i, j)));
    EXPECT_LE(err, 1e-12);
}

TEST(Green, LogarithmicLocalModelConverges) {
    // Psi_p - 2 log|s - p| sampled near radius 0.1 along the axes.
    auto offset = [](int n) {
        const Grid g(n);
        const Point p{0.5, 0.5};
        const auto G = green_potential(g, p).field;
        const int di = n / 10;
        double s = 0.0;
        for (auto [a, b] : {std::pair{di, 0}, {-di, 0}, {0, di}, {0, -di}})
            s += G.at(n / 2 + a, n / 2 + b) - 2.0 * std::log(double(di) / n);
        return s / 4.0;
    };
    EXPECT_LT(std::abs(offset(128) - offset(256)), 1e-2);
}

TEST(Integrate, Basics) {
    const Grid g(32);
    EXPECT_DOUBLE_EQ(integrate(ScalarField(g, 3.0)), 3.0);
    EXPECT_LE(std::abs(integrate(ScalarField::from_function(g, [](Point p) { return std::sin(2 * pi * p.y); }))), 1e-15);
}

TEST(Integrate, Parseval) {
    const Grid g(16);
    const ScalarField f = random_field(g, 21);
    const int n = g.n();
    double energy = 0.0;
    for (int ky = 0; ky < n; ++ky)
        for (int kx = 0; kx < n; ++kx) {
            std::complex<double> s = 0;
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i) s += f.at(i, j) * std::polar(1.0, -2 * pi * (kx * i + ky * j) / n);
            energy += std::norm(s);
        }
    energy /= std::pow(double(n), 4);
    EXPECT_NEAR(integrate(f * f), energy, 1e-10);
}

TEST(RadialProfile, ConstantsQuadraticAndGreen) {
    const Grid g(128);
    const Point c{0.5, 0.5};
    const std::vector<double> radii{0.02, 0.05, 0.1};
    for (const auto& s : radial_profile(ScalarField(g, 2.5), c, radii)) EXPECT_NEAR(s.mean, 2.5, 1e-14);
    const auto q = ScalarField::from_function(g, [&](Point p) {
        const double d = periodic_distance(p, c);
        return d * d;
    });
    for (const auto& s : radial_profile(q, c, radii)) EXPECT_NEAR(s.mean, s.radius * s.radius, 2e-4);

    const auto G = green_potential(g, c).field;
    std::vector<double> rs;
    for (double r = 0.02; r <= 0.1 + 1e-12; r += 0.01) rs.push_back(r);
    const auto prof = radial_profile(G, c, rs);
    double mx = 0, my = 0;
    for (const auto& s : prof) {
        mx += std::log(s.radius);
        my += s.mean;
    }
    mx /= prof.size();
    my /= prof.size();
    double sxx = 0, sxy = 0;
    for (const auto& s : prof) {
        sxx += (std::log(s.radius) - mx) * (std::log(s.radius) - mx);
        sxy += (std::log(s.radius) - mx) * (s.mean - my);
    }
    EXPECT_NEAR(sxy / sxx, 2.0, 0.05);
}

TEST(RadialProfile, RejectsUnresolvedRadius) {
    const Grid g(32);
    const std::vector<double> r{0.05};
    EXPECT_THROW(radial_profile(ScalarField(g), {0.5, 0.5}, r), DomainError);
}

TEST(DiskCoverage, AreaMatchesDisk) {
    const Grid g(128);
    EXPECT_NEAR(integrate(disk_coverage(g, {0.5, 0.5}, 0.2)), pi * 0.04, 2e-5);
}
