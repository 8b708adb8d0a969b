#include "ckrf/cone_smoothing.hpp"

#include "ckrf/errors.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>

namespace ckrf {

namespace {

void check_args(double eps, double x, double beta) {
    if (!(eps >= 0.0)) throw DomainError("chi: epsilon must be nonnegative");
    if (!(x >= 0.0)) throw DomainError("chi: argument must be nonnegative");
    if (!(beta > 0.0 && beta < 1.0)) throw DomainError("chi: beta must lie in (0, 1)");
}

} // namespace

double chi(double eps, double x, double beta, double tolerance) {
    check_args(eps, x, beta);
    if (x == 0.0) return 0.0;
    if (eps == 0.0) return std::pow(x, beta);
    const double e2 = eps * eps;
    // r = eps^2 (e^u - 1): the integrand becomes eps^{2 beta} expm1(beta u) e^u / expm1(u),
    // which tends to beta eps^{2 beta} at u = 0.
    const double U = std::log1p(x / e2);
    auto f = [beta](double u) {
        if (u < 1e-8) return beta * (1.0 + 0.5 * (beta + 1.0) * u);
        return std::expm1(beta * u) / -std::expm1(-u);
    };
    // On short intervals the integrand is a near-linear analytic function and fixed
    // Gauss-Legendre is exact to rounding; the adaptive rule's error floor would
    // otherwise force it to full depth there.
    if (U <= 0.05) return beta * std::pow(e2, beta) * boost::math::quadrature::gauss<double, 15>::integrate(f, 0.0, U);
    double err = 0.0;
    const double integral =
        boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, U, 15, tolerance, &err);
    return beta * std::pow(e2, beta) * integral;
}

double chi_derivative(double eps, double x, double beta) {
    check_args(eps, x, beta);
    if (!(x > 0.0)) throw DomainError("chi_derivative: argument must be positive");
    if (eps == 0.0) return beta * std::pow(x, beta - 1.0);
    const double e2 = eps * eps;
    return beta * std::pow(e2, beta) * std::expm1(beta * std::log1p(x / e2)) / x;
}

ScalarField regularized_cone_potential(const BackgroundGeometry& bg, const SmoothingParams& params, double delta) {
    ScalarField out(bg.grid);
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k] = delta * chi(params.epsilon, bg.q_r[k], params.beta, params.tolerance);
    return out;
}

} // namespace ckrf
