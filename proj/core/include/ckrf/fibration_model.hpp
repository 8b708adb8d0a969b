#pragma once

// Synthetic base geometry of an elliptic fibration with one cone divisor.

#include "ckrf/elliptic_periods.hpp"
#include "ckrf/torus_field.hpp"

#include <limits>
#include <span>
#include <vector>

namespace ckrf {

struct SingularFiber {
    Point point;
    int m = 1; ///< multiplicity
    int b = 0; ///< I_b index
};

struct FibrationModel {
    double beta = 0.5;
    double delta = 0.1;
    Point cone_point{0.5, 0.5};
    std::vector<SingularFiber> fibers;
    TauModel tau;
    double fiber_area = 1.0;
    int grid_n = 128;
};

/// Throws ConfigError naming the offending field.
void validate_model(const FibrationModel& m);

/// The model's tau data with I_b sites taken from the fiber list.
TauModel effective_tau_model(const FibrationModel& m);

struct Atom {
    Point point;
    double mass;
};

/// (1,1)-current on the base: smooth density plus point masses.
struct Current11 {
    ScalarField density;
    std::vector<Atom> atoms;

    double smooth_mass() const { return integrate(density); }
    double total_mass() const;
};

struct BackgroundGeometry {
    Grid grid;
    Point cone_point; ///< snapped to the grid
    std::vector<Point> fiber_points; ///< snapped, in model order
    double rho_theta;
    double A;
    ScalarField q_r;
    ScalarField log_q_r;
    double R_h_density;
    Current11 wp;
    ScalarField im_tau;
    Mask tau_valid;
};

/// A = 2 pi (1 - beta) + W + 2 pi sum (m_i - 1)/m_i.
double required_area(const FibrationModel& m, double W);

/// Same, with W integrated from the Weil-Petersson density on `g`.
double required_area(const FibrationModel& m, const Grid& g);

/// Weil-Petersson density (1/2)|grad log Im tau|^2 on `g`.
Current11 weil_petersson(const FibrationModel& m, const Grid& g);

BackgroundGeometry build_background(const FibrationModel& m, const Grid& g);

struct SingularExponent {
    Point point;
    double exponent; ///< -2 (m - 1)/m
};

struct DensityData {
    ScalarField log_F; ///< full log F including the normalization constant
    std::vector<SingularExponent> singular_exponents;
    double c_F = 0.0;
    double solvability_residual = 0.0;

    ScalarField F() const { return exp(log_F); }
};

/// log F = sum -((m_i - 1)/m_i) Psi_{s_i} + u_F + c_F with the curvature
/// source of u_F fixed by the area identity and c_F making the integral of F one.
DensityData assemble_F(const FibrationModel& m, const BackgroundGeometry& bg);

struct LpReport {
    double p_star = std::numeric_limits<double>::infinity();
    double p_star_F = std::numeric_limits<double>::infinity(); ///< before the 1/(1 - beta) cap
    double p_below = 0.0;
    double p_above = 0.0; ///< 0 when p_star_F is infinite
    std::vector<int> grid_sizes;
    std::vector<double> below; ///< integral of F^p_below per grid
    std::vector<double> above; ///< integral of F^p_above per grid (empty if p_star_F infinite)
    double below_change = 0.0; ///< relative change over the last refinement
    double above_growth = 0.0;
    bool stabilizes = true;
    bool diverges = true;
};

/// Integrates F^p at p = 0.95 p* and 1.05 p* on each grid size.
LpReport validate_Lp(const FibrationModel& m, std::span<const int> grid_sizes);

} // namespace ckrf
