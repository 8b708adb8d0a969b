#pragma once

// Full four-dimensional flow on E x Sigma for the product model (F = 1),
// discretized by second differences and forward Euler. Used only to check
// the base reduction and the decay of fiber oscillation.

#include "ckrf/ke_solver.hpp"

#include <vector>

namespace ckrf {

struct ProductOracleConfig {
    double beta = 0.5;
    double delta = 0.05;
    double epsilon = 0.25;
    double fiber_area = 50.0;
    Point cone_point{0.5, 0.5};
    int n_fiber = 16;
    int n_base = 32;
};

/// phi on the product grid; base index outer, fiber index inner.
struct State4D {
    int n_fiber = 0;
    int n_base = 0;
    double t = 0.0;
    std::vector<double> phi;

    std::size_t index(int fi, int fj, int bi, int bj) const noexcept;
};

class ProductOracle {
public:
    explicit ProductOracle(const ProductOracleConfig& cfg);

    const ProductOracleConfig& config() const noexcept { return cfg_; }
    const KEProblem& reduced_problem() const noexcept { return problem_; }

    /// phi = amplitude * cos(2 pi w_x), constant along the base.
    State4D initial_state(double fiber_amplitude = 0.0) const;

    /// The base field lifted as fiber-constant data.
    State4D lift(const ScalarField& base_phi, double t = 0.0) const;

    ScalarField fiber_average(const State4D& s) const;
    /// sup |phi - fiber average|.
    double fiber_gap(const State4D& s) const;

    /// d/dt phi at every node; throws PositivityError for a nonpositive determinant.
    std::vector<double> rhs(const State4D& s) const;

private:
    ProductOracleConfig cfg_;
    KEProblem problem_;
    ScalarField chi_;
    ScalarField half_lap_chi_;
    ScalarField log_weight_; ///< (1 - beta) log(q + eps^2) - log(a_E A) - delta chi
};

/// One explicit step of the four-dimensional flow.
State4D full_product_flow_step(const State4D& s, const ProductOracle& oracle, double dt);

} // namespace ckrf
