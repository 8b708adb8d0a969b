#include "ckrf/commands.hpp"
#include "ckrf/errors.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

struct Overrides {
    std::string config;
    std::string model;
    std::optional<int> grid_n;
    std::optional<std::string> out;
    bool quick = false;
    std::optional<double> T;
    std::optional<double> dt;
    std::optional<std::string> scheme;
    std::optional<double> epsilon;
    std::string input;
};

void add_common(CLI::App* sub, Overrides& o) {
    sub->add_option("--config", o.config, "run configuration JSON");
    sub->add_option("--model", o.model, "model JSON (used when no --config is given)");
    sub->add_option("--grid-n", o.grid_n, "grid size N");
    sub->add_option("--out", o.out, "output directory");
    sub->add_flag("--quick", o.quick, "N = 64, T = 8");
    sub->add_option("--T", o.T, "flow end time");
    sub->add_option("--dt", o.dt, "flow time step");
    sub->add_option("--scheme", o.scheme, "backward-euler-newton or rk4-explicit");
    sub->add_option("--epsilon", o.epsilon, "flow regularization");
}

ckrf::RunConfig build_config(const Overrides& o) {
    ckrf::RunConfig cfg;
    if (!o.config.empty()) cfg = ckrf::parse_config(o.config);
    if (!o.model.empty()) cfg.model_path = o.model;
    if (o.quick) ckrf::apply_quick(cfg);
    if (o.grid_n) cfg.grid_n = *o.grid_n;
    if (o.out) cfg.output_dir = *o.out;
    if (o.T) cfg.flow.T = *o.T;
    if (o.dt) cfg.flow.dt = *o.dt;
    if (o.scheme) cfg.flow.scheme = ckrf::parse_scheme(*o.scheme);
    if (o.epsilon) cfg.flow.epsilon = *o.epsilon;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conical Kahler-Ricci flow on synthetic elliptic fibrations"};
    app.require_subcommand(1);
    Overrides o;
    std::string chosen;

    auto* model = app.add_subcommand("model", "model utilities");
    auto* check = model->add_subcommand("check", "print A, W, p* and the consistency residual");
    add_common(check, o);
    check->callback([&] { chosen = "model check"; });
    model->require_subcommand(1);

    auto* ke = app.add_subcommand("solve-ke", "epsilon continuation for the limit equation");
    add_common(ke, o);
    ke->callback([&] { chosen = "solve-ke"; });

    auto* flow = app.add_subcommand("flow", "flow utilities");
    auto* run = flow->add_subcommand("run", "run the reduced flow to T");
    add_common(run, o);
    run->callback([&] { chosen = "flow run"; });
    flow->require_subcommand(1);

    auto* verify = app.add_subcommand("verify", "verification suite");
    auto* all = verify->add_subcommand("all", "write the full verification report");
    add_common(all, o);
    all->callback([&] { chosen = "verify all"; });
    verify->require_subcommand(1);

    auto* per = app.add_subcommand("periods", "periods of Weierstrass curves from CSV");
    per->add_option("input", o.input, "CSV rows g2,g3 or g2re,g2im,g3re,g3im")->required();
    per->add_option("--out", o.out, "output directory");
    per->callback([&] { chosen = "periods"; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    ckrf::CommandInput in;
    try {
        in.cfg = build_config(o);
    } catch (const ckrf::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return ckrf::exit_solver_error;
    }
    in.periods_input = o.input;
    return ckrf::run_subcommand(chosen, in, std::cout, std::cerr);
}
