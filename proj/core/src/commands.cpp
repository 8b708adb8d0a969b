#include "ckrf/commands.hpp"

#include "ckrf/errors.hpp"
#include "ckrf/estimates.hpp"
#include "ckrf/field_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace ckrf {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Setup {
    FibrationModel model;
    KEProblem problem;
};

Setup setup(const RunConfig& cfg, double epsilon) {
    validate_config(cfg, true);
    FibrationModel m = load_model(cfg.model_path);
    m.grid_n = cfg.grid_n;
    KEProblem p = make_problem(m, Grid(cfg.grid_n), epsilon);
    return {std::move(m), std::move(p)};
}

std::vector<Point> gamma_points(const BackgroundGeometry& bg) {
    std::vector<Point> pts{bg.cone_point};
    pts.insert(pts.end(), bg.fiber_points.begin(), bg.fiber_points.end());
    return pts;
}

Mask q_mask(const BackgroundGeometry& bg, double threshold) {
    Mask m(bg.grid);
    for (std::size_t k = 0; k < m.on.size(); ++k) m.on[k] = bg.q_r[k] >= threshold;
    return m;
}

std::string q_mask_name(double threshold) { return "q>=" + format_double(threshold); }

void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

json report_json(const EstimateReport& r) {
    return {{"name", r.name},     {"pass", r.pass},           {"C", r.C},
            {"lambda", r.lambda}, {"max_violation", r.max_violation}, {"samples", r.samples}};
}

json decay_json(const DecayFit& f) {
    return {{"mask", f.mask},         {"slope", f.slope},          {"intercept", f.intercept},
            {"points", f.points},     {"final_gap", f.final_gap},  {"converged", f.converged}};
}

// Schedule extended by halving while the next level stays above 2/N.
std::vector<double> extended_schedule(const RunConfig& cfg) {
    std::vector<double> s = cfg.epsilon_schedule;
    const double floor = 2.0 / cfg.grid_n;
    while (s.back() * 0.5 >= floor * (1.0 - 1e-12)) s.push_back(s.back() * 0.5);
    return s;
}

struct FlowOutcome {
    KEProblem problem;
    ContinuationResult target;
    BarrierSigma sigma;
    std::vector<NamedMask> masks;
    RunResult run;
};

FlowOutcome run_flow(const RunConfig& cfg, std::vector<double> snapshot_times) {
    Setup s = setup(cfg, cfg.flow.epsilon);
    const auto sched = schedule_to(cfg.epsilon_schedule, cfg.flow.epsilon);
    ContinuationResult target = continuation_solve(s.problem, sched);
    const auto pts = gamma_points(s.problem.bg);
    BarrierSigma sigma = sigma_barrier(s.problem.bg.grid, pts, s.problem.bg.A, cfg.masks.sigma_width);

    RunOptions opts;
    opts.T = cfg.flow.T;
    opts.dt = cfg.flow.dt;
    opts.scheme = cfg.flow.scheme;
    opts.masks.push_back({q_mask_name(cfg.masks.q_threshold), q_mask(s.problem.bg, cfg.masks.q_threshold)});
    for (double t : cfg.masks.sigma_thresholds) opts.masks.push_back({sigma_mask_name(t), sigma.at_least(t)});
    opts.target = target.solution.phi;
    opts.monitor_mask = sigma.at_least(0.2);
    opts.snapshot_times = std::move(snapshot_times);
    std::vector<NamedMask> masks = opts.masks;
    RunResult r = run(s.problem, opts);
    return {std::move(s.problem), std::move(target), std::move(sigma), std::move(masks), std::move(r)};
}

std::string trajectory_csv(const Trajectory& traj) {
    std::ostringstream os;
    os << "t";
    for (const auto& n : traj.mask_names) os << ",gap[" << n << "]";
    os << ",energy,min_density,sup_psi,sup_dpsi_dt,max_trace\n";
    for (const auto& s : traj.samples) {
        os << format_double(s.t);
        for (double g : s.gaps) os << ',' << format_double(g);
        os << ',' << format_double(s.energy) << ',' << format_double(s.min_density) << ','
           << format_double(s.sup_psi) << ',' << format_double(s.sup_dpsi_dt) << ',' << format_double(s.max_trace)
           << '\n';
    }
    return os.str();
}

json monitors_json(const Trajectory& traj) {
    double early[3] = {0, 0, 0}, all[3] = {0, 0, 0};
    bool finite = true;
    for (const auto& s : traj.samples) {
        const double v[3] = {s.sup_psi, s.sup_dpsi_dt, s.max_trace};
        for (int i = 0; i < 3; ++i) {
            finite = finite && std::isfinite(v[i]);
            all[i] = std::max(all[i], v[i]);
            if (s.t <= 1.0 + 1e-12) early[i] = std::max(early[i], v[i]);
        }
    }
    bool bounded = finite;
    for (int i = 0; i < 3; ++i) bounded = bounded && all[i] <= 10.0 * early[i];
    return {{"mask", sigma_mask_name(0.2)},
            {"sup_psi", all[0]},
            {"sup_dpsi_dt", all[1]},
            {"max_trace", all[2]},
            {"sup_psi_t_le_1", early[0]},
            {"sup_dpsi_dt_t_le_1", early[1]},
            {"max_trace_t_le_1", early[2]},
            {"pass", bounded}};
}

// Trace fits over the snapshots: A / rho_psi, and its reciprocal for the other direction.
std::pair<EstimateReport, EstimateReport> trace_reports(const FlowOutcome& f) {
    const double A = f.problem.bg.A;
    const Grid& g = f.problem.bg.grid;
    std::vector<ScalarField> down, up;
    for (const auto& snap : f.run.trajectory.snapshots) {
        const ScalarField rho = base_density(A, snap.psi);
        const ScalarField ref(g, A);
        down.push_back(trace_field(ref, rho));
        up.push_back(trace_field(rho, ref));
    }
    static constexpr double lambdas[] = {1.0, 2.0, 4.0, 8.0};
    EstimateReport a = verify_trace_bound(down, f.sigma, lambdas);
    EstimateReport b = verify_trace_bound(up, f.sigma, lambdas);
    a.name = "trace";
    b.name = "inverse-trace";
    return {a, b};
}

} // namespace

std::vector<double> schedule_to(std::span<const double> schedule, double eps) {
    std::vector<double> out;
    for (double e : schedule)
        if (e >= eps / 0.7 * (1.0 - 1e-12)) out.push_back(e);
    out.push_back(eps);
    return out;
}

int model_check(const RunConfig& cfg, std::ostream& out) {
    Setup s = setup(cfg, cfg.epsilon_schedule.back());
    const auto& bg = s.problem.bg;
    const double W = bg.wp.total_mass();
    const LpReport lp = validate_Lp(s.model, std::vector<int>{cfg.grid_n});
    out << "A = " << format_double(bg.A) << "\n"
        << "W = " << format_double(W) << "\n"
        << "p_star = " << format_double(lp.p_star) << "\n"
        << "consistency_residual = " << format_double(s.problem.F.solvability_residual) << "\n";
    return exit_ok;
}

int solve_ke(const RunConfig& cfg, std::ostream& out) {
    Setup s = setup(cfg, cfg.epsilon_schedule.back());
    const ContinuationResult c = continuation_solve(s.problem, cfg.epsilon_schedule);
    const fs::path dir(cfg.output_dir);
    write_field_csv(dir / "ke_solution.csv", c.solution.v);
    write_field_pgm(dir / "ke_solution.pgm", c.solution.v);
    json cauchy = json::array();
    for (const auto& st : c.report.cauchy)
        cauchy.push_back({{"eps_from", st.eps_from}, {"eps_to", st.eps_to}, {"sup_diff", st.sup_diff}});
    json levels = json::array();
    for (std::size_t i = 0; i < c.report.epsilons.size(); ++i)
        levels.push_back({{"epsilon", c.report.epsilons[i]},
                          {"iterations", c.report.iterations[i]},
                          {"residual", c.report.residuals[i]}});
    const json j{{"A", s.problem.bg.A},
                 {"W", s.problem.bg.wp.total_mass()},
                 {"residual", c.solution.residual_sup},
                 {"levels", levels},
                 {"cauchy", cauchy},
                 {"cauchy_decreasing", c.report.cauchy_decreasing},
                 {"max_abs_at_cone_point", c.report.max_abs_at_cone_point},
                 {"holder_exponent", c.report.holder_exponent}};
    write_json(dir / "ke_report.json", j);
    out << "residual = " << format_double(c.solution.residual_sup) << " at epsilon = "
        << format_double(c.solution.epsilon) << "\n";
    return exit_ok;
}

int flow_run(const RunConfig& cfg, std::ostream& out) {
    FlowOutcome f = run_flow(cfg, {});
    const fs::path dir(cfg.output_dir);
    write_file_atomic(dir / "trajectory.csv", trajectory_csv(f.run.trajectory));
    write_field_csv(dir / "flow_final.csv", f.run.state.phi);
    write_field_pgm(dir / "flow_final.pgm", f.run.state.phi);
    json fits = json::array();
    for (const auto& d : f.run.decay) fits.push_back(decay_json(d));
    const json j{{"T", cfg.flow.T},
                 {"dt", cfg.flow.dt},
                 {"scheme", to_string(cfg.flow.scheme)},
                 {"epsilon", cfg.flow.epsilon},
                 {"final_gap", f.run.trajectory.samples.back().gaps.front()},
                 {"decay", fits},
                 {"monitors", monitors_json(f.run.trajectory)}};
    write_json(dir / "decay_report.json", j);
    out << "final gap on " << f.masks.front().name << " = " << format_double(f.run.trajectory.samples.back().gaps.front())
        << "\n";
    return exit_ok;
}

std::string verify_report(const RunConfig& cfg, bool* all_pass) {
    json rep;
    bool ok = true;

    // Flow-based reports.
    std::vector<double> snaps;
    for (double t : {1.0, 5.0, 10.0, 20.0})
        if (t <= cfg.flow.T + 1e-12) snaps.push_back(t);
    const FlowOutcome f = run_flow(cfg, snaps);
    const Trajectory& traj = f.run.trajectory;
    {
        const C0Report c0 = verify_c0_convergence(traj, cfg.masks.sigma_thresholds);
        json masks = json::array();
        for (const auto& d : c0.fits) masks.push_back(decay_json(d));
        json e = report_json(c0.report);
        e["masks"] = masks;
        rep["lemma-3.2"] = e;
        ok = ok && c0.report.pass;
    }
    {
        const auto [down, up] = trace_reports(f);
        json times = json::array();
        for (const auto& s : traj.snapshots) times.push_back(s.t);
        json e = report_json(down);
        e["times"] = times;
        rep["lemma-3.4"] = e;
        rep["eq-3.10"] = {{"pass", down.pass && up.pass}, {"lower", report_json(down)}, {"upper", report_json(up)}};
        ok = ok && down.pass && up.pass;
    }

    // Limit equation on the extended schedule.
    Setup s = setup(cfg, cfg.epsilon_schedule.back());
    const auto sched = extended_schedule(cfg);
    const ContinuationResult c = continuation_solve(s.problem, sched);
    const KESolution v0 = extrapolate_epsilon(c, s.problem);
    const KEProblem p0 = with_epsilon(s.problem, 0.0);
    const auto pts = gamma_points(s.problem.bg);
    const BarrierSigma sigma = sigma_barrier(s.problem.bg.grid, pts, s.problem.bg.A, cfg.masks.sigma_width);
    {
        const ResidualResult res = ricci_residual(v0, p0, sigma.at_least(0.5));
        const double W = s.problem.bg.wp.total_mass();
        const double tol = W == 0.0 ? 5e-3 : 2e-2;
        const double beta = s.model.beta;
        const double angle = cone_angle(v0, p0, s.problem.bg.cone_point);
        const bool angle_ok = std::abs(angle - 2.0 * beta) <= 0.02 * 2.0 * beta;
        json fibers = json::array();
        bool fibers_ok = true;
        for (std::size_t i = 0; i < s.model.fibers.size(); ++i) {
            const int m = s.model.fibers[i].m;
            const double target = m == 1 ? 0.0 : -2.0 * (m - 1.0) / m;
            const double e = multiplicity_exponent(v0, p0, s.problem.bg.fiber_points[i]);
            const bool fine = std::abs(e - target) <= 0.05;
            fibers_ok = fibers_ok && fine;
            fibers.push_back({{"m", m}, {"b", s.model.fibers[i].b}, {"exponent", e}, {"target", target}, {"pass", fine}});
        }
        const bool pass = res.sup <= tol && angle_ok && fibers_ok;
        rep["thm-1.1-2"] = {{"pass", pass},
                            {"residual_sup", res.sup},
                            {"residual_tolerance", tol},
                            {"mask", sigma_mask_name(0.5)},
                            {"cone_angle", angle},
                            {"cone_angle_target", 2.0 * beta},
                            {"fibers", fibers}};
        ok = ok && pass;
    }
    {
        // Cold starts at the finest level from v0 = 0 and from a random smooth field.
        const KEProblem q = with_epsilon(s.problem, c.levels.back().epsilon);
        double agreement = std::numeric_limits<double>::infinity();
        try {
            const KESolution a = newton_solve(q, ScalarField(q.bg.grid));
            const KESolution b = newton_solve(q, random_smooth_start(q.bg.grid, cfg.seed, 0.1));
            agreement = (a.v - b.v).sup_norm();
        } catch (const Error&) {
        }
        const bool pass = agreement <= 1e-7 && c.report.holder_exponent > 0.0;
        json cauchy = json::array();
        for (const auto& st : c.report.cauchy)
            cauchy.push_back({{"eps_from", st.eps_from}, {"eps_to", st.eps_to}, {"sup_diff", st.sup_diff}});
        rep["prop-2.1-holder"] = {{"pass", pass},
                                  {"holder_exponent", c.report.holder_exponent},
                                  {"two_init_agreement", agreement},
                                  {"max_abs_at_cone_point", c.report.max_abs_at_cone_point},
                                  {"cauchy", cauchy},
                                  {"cauchy_decreasing", c.report.cauchy_decreasing}};
        ok = ok && pass;
    }
    {
        const double gap = traj.samples.back().gaps.front();
        const json mon = monitors_json(traj);
        const bool pass = gap <= 1e-3 && mon.at("pass").get<bool>();
        rep["prop-3.7"] = {{"pass", pass},
                           {"mask", f.masks.front().name},
                           {"final_gap", gap},
                           {"tolerance", 1e-3},
                           {"T", cfg.flow.T},
                           {"dt", cfg.flow.dt},
                           {"monitors", mon}};
        ok = ok && pass;
    }
    {
        const std::vector<int> sizes{cfg.grid_n, 2 * cfg.grid_n, 4 * cfg.grid_n};
        const LpReport lp = validate_Lp(s.model, sizes);
        const bool pass = lp.stabilizes && lp.diverges;
        auto finite_or_null = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
        rep["F-Lp"] = {{"pass", pass},
                       {"p_star", finite_or_null(lp.p_star)},
                       {"p_star_F", finite_or_null(lp.p_star_F)},
                       {"p_below", lp.p_below},
                       {"p_above", lp.p_above},
                       {"grid_sizes", lp.grid_sizes},
                       {"below", lp.below},
                       {"above", lp.above},
                       {"below_change", lp.below_change},
                       {"above_growth", lp.above_growth},
                       {"stabilizes", lp.stabilizes},
                       {"diverges", lp.diverges}};
        ok = ok && pass;
    }

    // Fixed key order.
    json ordered;
    for (const char* k : {"lemma-3.2", "lemma-3.4", "eq-3.10", "thm-1.1-2", "prop-2.1-holder", "prop-3.7", "F-Lp"})
        ordered[k] = rep.at(k);
    if (all_pass) *all_pass = ok;
    return ordered.dump(2) + "\n";
}

int verify_all(const RunConfig& cfg, std::ostream& out) {
    bool ok = false;
    const std::string text = verify_report(cfg, &ok);
    write_file_atomic(fs::path(cfg.output_dir) / "verify_report.json", text);
    const json j = json::parse(text);
    for (auto it = j.begin(); it != j.end(); ++it)
        out << it.key() << ": " << (it.value().at("pass").get<bool>() ? "pass" : "FAIL") << "\n";
    return ok ? exit_ok : exit_verification_failed;
}

int periods(const fs::path& input, const RunConfig& cfg, std::ostream& out) {
    std::istringstream in(read_file(input));
    std::ostringstream csv;
    csv << "g2_re,g2_im,g3_re,g3_im,omega1_re,omega1_im,omega2_re,omega2_im,tau_re,tau_im,disc_re,disc_im\n";
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> xs;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            try {
                std::size_t used = 0;
                xs.push_back(std::stod(cell, &used));
            } catch (const std::exception&) {
                throw ConfigError(input.string() + ": row " + std::to_string(row) + ": not a number: " + cell);
            }
        }
        WeierstrassCurve c;
        if (xs.size() == 2) c = {{xs[0], 0.0}, {xs[1], 0.0}};
        else if (xs.size() == 4) c = {{xs[0], xs[1]}, {xs[2], xs[3]}};
        else throw ConfigError(input.string() + ": row " + std::to_string(row) + ": expected 2 or 4 columns");
        const Periods p = periods_from_weierstrass(c);
        const Complex d = discriminant(c);
        const Complex vals[] = {c.g2, c.g3, p.omega1, p.omega2, p.tau, d};
        for (int i = 0; i < 6; ++i)
            csv << (i ? "," : "") << format_double(vals[i].real()) << ',' << format_double(vals[i].imag());
        csv << '\n';
        out << "tau = " << format_double(p.tau.real()) << (p.tau.imag() < 0 ? " - " : " + ")
            << format_double(std::abs(p.tau.imag())) << "i\n";
    }
    write_file_atomic(fs::path(cfg.output_dir) / "periods.csv", csv.str());
    return exit_ok;
}

int run_subcommand(const std::string& name, const CommandInput& in, std::ostream& out, std::ostream& err) {
    try {
        if (name == "model check") return model_check(in.cfg, out);
        if (name == "solve-ke") return solve_ke(in.cfg, out);
        if (name == "flow run") return flow_run(in.cfg, out);
        if (name == "verify all") return verify_all(in.cfg, out);
        if (name == "periods") return periods(in.periods_input, in.cfg, out);
        err << "unknown subcommand: " << name << "\n";
        return exit_solver_error;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_solver_error;
    }
}

} // namespace ckrf
