#pragma once

#include "ckrf/torus_field.hpp"

#include <complex>
#include <string>
#include <vector>

namespace ckrf {

using Complex = std::complex<double>;

/// y^2 = 4x^3 - g2 x - g3.
struct WeierstrassCurve {
    Complex g2;
    Complex g3;
};

/// Arithmetic-geometric mean with the optimal square-root branch
/// (|a' - b'| <= |a' + b'| at every step). Throws NumericalError after 64
/// iterations without convergence.
Complex agm(Complex a, Complex b);

Complex discriminant(const WeierstrassCurve& c);

struct Periods {
    Complex omega1; ///< half period
    Complex omega2; ///< half period, Im(omega2 / omega1) > 0
    Complex tau;    ///< omega2 / omega1 in the standard fundamental domain
};

/// Half periods from the AGM of the root differences. The basis is reduced
/// so that tau lies in the closed fundamental domain with -1/2 < Re tau <= 1/2.
/// Throws ModelError for a singular curve.
Periods periods_from_weierstrass(const WeierstrassCurve& c);

/// Reduces tau to -1/2 < Re tau <= 1/2, |tau| >= 1 (Re tau >= 0 on the arc).
Complex reduce_tau(Complex tau);

struct TauModel {
    enum class Kind { constant, local_ib, weierstrass };

    struct Site {
        Point point;
        int b = 1; ///< Kodaira I_b index
    };

    Kind kind = Kind::constant;

    // constant
    Complex tau0{0.0, 1.0};

    // local_ib: Im tau = (b/2pi)(-log|s - s_i|) + offset near s_i.
    std::vector<Site> sites;
    double cap_radius = 0.25;
    double offset = 1.0;

    // weierstrass: g(s) = g0 + amplitude * cos(2 pi x) * cos(2 pi y).
    WeierstrassCurve curve{{4.0, 0.0}, {0.0, 0.0}};
    Complex g2_amplitude{0.0, 0.0};
    Complex g3_amplitude{0.0, 0.0};
};

std::string to_string(TauModel::Kind k);
TauModel::Kind parse_tau_kind(const std::string& s);

/// Pointwise Im tau of the model (no grid regularization).
double im_tau_at(const TauModel& model, Point s);

struct TauField {
    ScalarField im_tau;
    Mask valid; ///< excludes a two-cell disk about every I_b site
};

/// Samples Im tau on the grid. Inside the excluded disks the logarithm is
/// continued by a quadratic in |s - s_i|^2 matching it to second order.
/// Throws ModelError if Im tau <= 0 somewhere on the valid mask.
TauField tau_field(const TauModel& model, const Grid& g);

} // namespace ckrf
