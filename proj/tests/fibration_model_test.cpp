#include "ckrf/errors.hpp"
#include "ckrf/fibration_model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace ckrf;
using std::numbers::pi;

namespace {

FibrationModel product(double beta = 0.5) {
    FibrationModel m;
    m.beta = beta;
    return m;
}

FibrationModel with_fiber(int mult, int b) {
    FibrationModel m = product();
    m.fibers.push_back({{0.125, 0.125}, mult, b});
    if (b > 0) m.tau.kind = TauModel::Kind::local_ib;
    return m;
}

} // namespace

TEST(RequiredArea, ProductAndMultipleFiber) {
    EXPECT_NEAR(required_area(product(), 0.0), pi, 1e-15);
    EXPECT_NEAR(required_area(with_fiber(2, 0), 0.0), 2 * pi, 1e-15);
    EXPECT_NEAR(required_area(product(0.3), 0.25), 2 * pi * 0.7 + 0.25, 1e-15);
}

TEST(RequiredArea, IbFiberAddsWeilPeterssonMass) {
    const FibrationModel m = with_fiber(1, 1);
    const Grid g(256);
    const double W = weil_petersson(m, g).smooth_mass();
    EXPECT_GT(W, 0.0);
    EXPECT_NEAR(required_area(m, g), pi + W, 1e-12);
}

TEST(Background, Normalizations) {
    const Grid g(64);
    const auto bg = build_background(product(), g);
    EXPECT_EQ(bg.q_r.max(), 1.0);
    EXPECT_GE(bg.q_r.min(), 0.0);
    EXPECT_NEAR(bg.R_h_density * 1.0, 2 * pi, 1e-15);
    EXPECT_EQ(bg.rho_theta, bg.A);
    EXPECT_EQ(bg.wp.density.sup_norm(), 0.0);
    EXPECT_EQ(bg.wp.total_mass(), 0.0);
    // q_r vanishes to second order at r: log q_r - 2 log d stays bounded.
    const auto [i, j] = g.nearest_node(bg.cone_point);
    EXPECT_EQ(bg.q_r.at(i, j), bg.q_r.min());
}

TEST(Background, AreaIdentityForIbModel) {
    const FibrationModel m = with_fiber(1, 1);
    const auto bg = build_background(m, Grid(128));
    EXPECT_NEAR(bg.A - 2 * pi * 0.5 - bg.wp.smooth_mass(), 0.0, 1e-10);
    double low = 0.0;
    for (std::size_t k = 0; k < bg.grid.size(); ++k)
        if (bg.tau_valid.on[k]) low = std::min(low, bg.wp.density[k]);
    EXPECT_GE(low, -1e-8);
}

TEST(Background, WeilPeterssonMatchesHarmonicFormulaInLogRegion) {
    // Im tau = c - log(d) / (2 pi) there, so -(1/2) Lap log Im tau = 1 / (8 pi^2 d^2 Im tau^2).
    const FibrationModel m = with_fiber(1, 1);
    const Grid g(256);
    const auto bg = build_background(m, g);
    double err = 0.0;
    int count = 0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double d = periodic_distance(g.coord(k), bg.fiber_points[0]);
        if (d < 0.05 || d > 0.1) continue;
        const double h = bg.im_tau[k];
        const double exact = 1.0 / (8 * pi * pi * d * d * h * h);
        err = std::max(err, std::abs(bg.wp.density[k] / exact - 1.0));
        ++count;
    }
    EXPECT_GT(count, 100);
    EXPECT_LE(err, 1e-3);
}

TEST(Background, RejectsCloseMarkedPoints) {
    FibrationModel m = product();
    m.fibers.push_back({{0.52, 0.5}, 2, 0});
    EXPECT_THROW(build_background(m, Grid(64)), ConfigError);
}

TEST(Background, RejectsLargeDelta) {
    FibrationModel m = product();
    m.delta = 5.0;
    EXPECT_THROW(build_background(m, Grid(32)), ConfigError);
}

TEST(Validate, NamesOffendingField) {
    FibrationModel m = product(1.2);
    try {
        validate_model(m);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("beta"), std::string::npos);
    }
    m = with_fiber(0, 0);
    try {
        validate_model(m);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("fibers[0].m"), std::string::npos);
    }
}

TEST(AssembleF, ProductModelGivesUnitDensity) {
    const FibrationModel m = product();
    const auto bg = build_background(m, Grid(64));
    const auto F = assemble_F(m, bg);
    EXPECT_LE(F.log_F.sup_norm(), 1e-12);
    EXPECT_NEAR(integrate(F.F()), 1.0, 1e-12);
}

TEST(AssembleF, MultipleFiberExponentIsBuiltIn) {
    const FibrationModel m = with_fiber(2, 0);
    auto bounded_part = [&](int n) {
        const Grid g(n);
        const auto bg = build_background(m, g);
        const auto F = assemble_F(m, bg);
        EXPECT_NEAR(integrate(F.F()), 1.0, 1e-10);
        EXPECT_GT(F.F().min(), 0.0);
        EXPECT_EQ(F.singular_exponents.size(), 1u);
        EXPECT_EQ(F.singular_exponents[0].exponent, -1.0);
        ScalarField r = F.log_F + 0.5 * green_potential(g, bg.fiber_points[0]).field;
        return r.max() - r.min();
    };
    EXPECT_NEAR(bounded_part(64), bounded_part(128), 0.05);
}

TEST(AssembleF, CurvatureRoundTrip) {
    const FibrationModel m = with_fiber(2, 1);
    const Grid g(128);
    const auto bg = build_background(m, g);
    const auto F = assemble_F(m, bg);
    ScalarField lhs = laplacian(F.log_F);
    lhs *= 0.5;
    ScalarField src = -1.0 * bg.wp.density;
    src += bg.A - 2 * pi * (1 - m.beta);
    double err = 0.0;
    const auto [i0, j0] = g.nearest_node(bg.fiber_points[0]);
    const std::size_t atom = g.index(i0, j0);
    for (std::size_t k = 0; k < g.size(); ++k)
        if (k != atom) err = std::max(err, std::abs(lhs[k] - src[k]));
    EXPECT_LE(err, 1e-8);
}

TEST(AssembleF, InconsistentAreaRejected) {
    const FibrationModel m = product();
    auto bg = build_background(m, Grid(32));
    bg.A += 0.1;
    EXPECT_THROW(assemble_F(m, bg), ConsistencyError);
}

TEST(Lp, ConstantDensityIsInEveryLp) {
    const std::vector<int> n{32, 64};
    const LpReport r = validate_Lp(product(), n);
    EXPECT_EQ(r.p_star, 2.0);
    EXPECT_TRUE(std::isinf(r.p_star_F));
    for (double x : r.below) EXPECT_NEAR(x, 1.0, 1e-12);
    EXPECT_TRUE(r.above.empty());
    EXPECT_TRUE(r.stabilizes);
}

TEST(Lp, CriticalExponentForMultipleFiber) {
    const std::vector<int> n{64, 128};
    const LpReport r = validate_Lp(with_fiber(2, 0), n);
    EXPECT_EQ(r.p_star, 2.0);
    EXPECT_EQ(r.p_star_F, 2.0);
    EXPECT_NEAR(r.p_below, 1.9, 1e-15);
    EXPECT_NEAR(r.p_above, 2.1, 1e-15);
    EXPECT_GT(r.above_growth, r.below_change);
}
