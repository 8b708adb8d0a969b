#pragma once

#include "ckrf/fibration_model.hpp"

namespace ckrf {

struct SmoothingParams {
    double epsilon = 0.0;
    double beta = 0.5;
    double tolerance = 1e-13; ///< relative quadrature tolerance
};

/// chi(eps^2 + x) = beta * int_0^x ((eps^2 + r)^beta - eps^{2 beta}) / r dr.
/// At eps = 0 this is x^beta. Throws DomainError for negative input or beta
/// outside (0, 1).
double chi(double eps, double x, double beta, double tolerance = 1e-13);

/// The integrand beta ((eps^2 + x)^beta - eps^{2 beta}) / x, for x > 0.
double chi_derivative(double eps, double x, double beta);

/// delta * chi(eps^2 + q_r) on the grid.
ScalarField regularized_cone_potential(const BackgroundGeometry& bg, const SmoothingParams& params, double delta);

} // namespace ckrf
