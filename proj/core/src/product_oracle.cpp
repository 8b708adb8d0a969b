#include "ckrf/product_oracle.hpp"

#include "ckrf/errors.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace ckrf {

using std::numbers::pi;

std::size_t State4D::index(int fi, int fj, int bi, int bj) const noexcept {
    auto wrapi = [](int i, int n) { return ((i % n) + n) % n; };
    const std::size_t b = static_cast<std::size_t>(wrapi(bj, n_base)) * n_base + wrapi(bi, n_base);
    const std::size_t f = static_cast<std::size_t>(wrapi(fj, n_fiber)) * n_fiber + wrapi(fi, n_fiber);
    return b * static_cast<std::size_t>(n_fiber) * n_fiber + f;
}

namespace {

KEProblem product_problem(const ProductOracleConfig& cfg) {
    FibrationModel m;
    m.beta = cfg.beta;
    m.delta = cfg.delta;
    m.cone_point = cfg.cone_point;
    m.fiber_area = cfg.fiber_area;
    m.grid_n = cfg.n_base;
    return make_problem(m, Grid(cfg.n_base), cfg.epsilon);
}

} // namespace

ProductOracle::ProductOracle(const ProductOracleConfig& cfg)
    : cfg_(cfg), problem_(product_problem(cfg)), chi_(cone_potential(problem_)),
      half_lap_chi_(0.5 * laplacian(chi_)), log_weight_(problem_.bg.grid) {
    if (cfg.n_fiber < 4) throw ConfigError("product oracle needs at least 4 fiber points per axis");
    const double e2 = cfg.epsilon * cfg.epsilon;
    const double A = problem_.bg.A;
    for (std::size_t k = 0; k < log_weight_.size(); ++k)
        log_weight_[k] = (1.0 - cfg.beta) * std::log(problem_.bg.q_r[k] + e2) - std::log(cfg.fiber_area * A) -
                         chi_[k];
}

State4D ProductOracle::initial_state(double fiber_amplitude) const {
    State4D s{cfg_.n_fiber, cfg_.n_base, 0.0, {}};
    s.phi.assign(static_cast<std::size_t>(cfg_.n_fiber) * cfg_.n_fiber * cfg_.n_base * cfg_.n_base, 0.0);
    for (int bj = 0; bj < cfg_.n_base; ++bj)
        for (int bi = 0; bi < cfg_.n_base; ++bi)
            for (int fj = 0; fj < cfg_.n_fiber; ++fj)
                for (int fi = 0; fi < cfg_.n_fiber; ++fi)
                    s.phi[s.index(fi, fj, bi, bj)] = fiber_amplitude * std::cos(2.0 * pi * fi / cfg_.n_fiber);
    return s;
}

State4D ProductOracle::lift(const ScalarField& base_phi, double t) const {
    State4D s = initial_state();
    s.t = t;
    for (int bj = 0; bj < cfg_.n_base; ++bj)
        for (int bi = 0; bi < cfg_.n_base; ++bi)
            for (int fj = 0; fj < cfg_.n_fiber; ++fj)
                for (int fi = 0; fi < cfg_.n_fiber; ++fi) s.phi[s.index(fi, fj, bi, bj)] = base_phi.at(bi, bj);
    return s;
}

ScalarField ProductOracle::fiber_average(const State4D& s) const {
    ScalarField avg(problem_.bg.grid);
    const std::size_t nf2 = static_cast<std::size_t>(s.n_fiber) * s.n_fiber;
    for (std::size_t b = 0; b < avg.size(); ++b) {
        double sum = 0.0;
        for (std::size_t f = 0; f < nf2; ++f) sum += s.phi[b * nf2 + f];
        avg[b] = sum / double(nf2);
    }
    return avg;
}

double ProductOracle::fiber_gap(const State4D& s) const {
    const ScalarField avg = fiber_average(s);
    const std::size_t nf2 = static_cast<std::size_t>(s.n_fiber) * s.n_fiber;
    double gap = 0.0;
    for (std::size_t b = 0; b < avg.size(); ++b)
        for (std::size_t f = 0; f < nf2; ++f) gap = std::max(gap, std::abs(s.phi[b * nf2 + f] - avg[b]));
    return gap;
}

std::vector<double> ProductOracle::rhs(const State4D& s) const {
    const int nf = s.n_fiber, nb = s.n_base;
    const double ihf2 = double(nf) * nf, ihb2 = double(nb) * nb, imix = 0.25 * nf * nb;
    const double fiber_metric = std::exp(-s.t) * cfg_.fiber_area;
    const double A = problem_.bg.A;
    const std::size_t nf2 = static_cast<std::size_t>(nf) * nf;
    const auto& p = s.phi;
    std::vector<double> out(p.size());

    // Flat offsets of the periodic neighbours along each axis.
    auto wrap = [](int i, int n) { return ((i % n) + n) % n; };
    std::vector<std::ptrdiff_t> fxp(nf), fxm(nf), fyp(nf), fym(nf), bxp(nb), bxm(nb), byp(nb), bym(nb);
    for (int i = 0; i < nf; ++i) {
        fxp[i] = wrap(i + 1, nf) - i;
        fxm[i] = wrap(i - 1, nf) - i;
        fyp[i] = std::ptrdiff_t(wrap(i + 1, nf) - i) * nf;
        fym[i] = std::ptrdiff_t(wrap(i - 1, nf) - i) * nf;
    }
    for (int i = 0; i < nb; ++i) {
        bxp[i] = std::ptrdiff_t(wrap(i + 1, nb) - i) * std::ptrdiff_t(nf2);
        bxm[i] = std::ptrdiff_t(wrap(i - 1, nb) - i) * std::ptrdiff_t(nf2);
        byp[i] = std::ptrdiff_t(wrap(i + 1, nb) - i) * nb * std::ptrdiff_t(nf2);
        bym[i] = std::ptrdiff_t(wrap(i - 1, nb) - i) * nb * std::ptrdiff_t(nf2);
    }

    for (int bj = 0; bj < nb; ++bj) {
        for (int bi = 0; bi < nb; ++bi) {
            const std::size_t bk = static_cast<std::size_t>(bj) * nb + bi;
            const double h_ss0 = A + half_lap_chi_[bk];
            const double lw = log_weight_[bk];
            const std::ptrdiff_t sxp = bxp[bi], sxm = bxm[bi], syp = byp[bj], sym = bym[bj];
            for (int fj = 0; fj < nf; ++fj) {
                for (int fi = 0; fi < nf; ++fi) {
                    const std::ptrdiff_t k = std::ptrdiff_t(bk * nf2) + std::ptrdiff_t(fj) * nf + fi;
                    const std::ptrdiff_t wxp = fxp[fi], wxm = fxm[fi], wyp = fyp[fj], wym = fym[fj];
                    const double c = p[k];
                    const double wxx = (p[k + wxp] - 2.0 * c + p[k + wxm]) * ihf2;
                    const double wyy = (p[k + wyp] - 2.0 * c + p[k + wym]) * ihf2;
                    const double sxx = (p[k + sxp] - 2.0 * c + p[k + sxm]) * ihb2;
                    const double syy = (p[k + syp] - 2.0 * c + p[k + sym]) * ihb2;
                    auto mixed = [&](std::ptrdiff_t fp, std::ptrdiff_t fm, std::ptrdiff_t bp, std::ptrdiff_t bm) {
                        return (p[k + fp + bp] - p[k + fp + bm] - p[k + fm + bp] + p[k + fm + bm]) * imix;
                    };
                    const double wx_sx = mixed(wxp, wxm, sxp, sxm);
                    const double wy_sy = mixed(wyp, wym, syp, sym);
                    const double wx_sy = mixed(wxp, wxm, syp, sym);
                    const double wy_sx = mixed(wyp, wym, sxp, sxm);
                    const double h_ww = fiber_metric + 0.5 * (wxx + wyy);
                    const double h_ss = h_ss0 + 0.5 * (sxx + syy);
                    const double re = 0.5 * (wx_sx + wy_sy);
                    const double im = 0.5 * (wx_sy - wy_sx);
                    const double det = h_ww * h_ss - (re * re + im * im);
                    if (!(det > 0.0 && h_ww > 0.0)) {
                        std::ostringstream os;
                        os << "product metric degenerate at t = " << s.t << " (det " << det << ")";
                        throw PositivityError(os.str());
                    }
                    out[k] = s.t + std::log(det) + lw - c;
                }
            }
        }
    }
    return out;
}

State4D full_product_flow_step(const State4D& s, const ProductOracle& oracle, double dt) {
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    const auto r = oracle.rhs(s);
    State4D out = s;
    for (std::size_t k = 0; k < out.phi.size(); ++k) out.phi[k] += dt * r[k];
    out.t = s.t + dt;
    return out;
}

} // namespace ckrf
