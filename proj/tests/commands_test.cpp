#include "ckrf/commands.hpp"
#include "ckrf/field_io.hpp"

#include <json.hpp>
#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace ckrf;
namespace fs = std::filesystem;

namespace {

const fs::path kModels = CKRF_TEST_MODELS;

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::path(testing::TempDir()) / ("ckrf_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

CommandInput input(const fs::path& out, int n = 64, const char* model = "product_b05.json") {
    CommandInput in;
    in.cfg.model_path = (kModels / model).string();
    in.cfg.grid_n = n;
    in.cfg.output_dir = out.string();
    return in;
}

struct Outcome {
    int code;
    std::string out, err;
};

Outcome run(const std::string& name, const CommandInput& in) {
    std::ostringstream out, err;
    const int code = run_subcommand(name, in, out, err);
    return {code, out.str(), err.str()};
}

std::string capture(const std::string& cmd, int* status) {
    std::string text;
    FILE* p = popen((cmd + " 2>&1").c_str(), "r");
    char buf[512];
    while (p && fgets(buf, sizeof buf, p)) text += buf;
    *status = p ? pclose(p) : -1;
    return text;
}

} // namespace

TEST(Commands, ModelCheckPrintsArea) {
    const Outcome o = run("model check", input(fresh_dir("check")));
    EXPECT_EQ(o.code, exit_ok);
    EXPECT_NE(o.out.find("A = 3.14159265358979"), std::string::npos) << o.out;
    EXPECT_NE(o.out.find("W = 0"), std::string::npos);
    EXPECT_NE(o.out.find("consistency_residual = "), std::string::npos);
}

TEST(Commands, Rk4GuardViolationExitsOne) {
    CommandInput in = input(fresh_dir("rk4"));
    in.cfg.flow.scheme = Scheme::rk4_explicit;
    in.cfg.flow.dt = 0.05;
    const Outcome o = run("flow run", in);
    EXPECT_EQ(o.code, exit_solver_error);
    EXPECT_NE(o.err.find("rk4 stability guard"), std::string::npos) << o.err;
}

TEST(Commands, UnknownSubcommandAndBadModel) {
    EXPECT_EQ(run("frobnicate", input(fresh_dir("unknown"))).code, exit_solver_error);
    const Outcome o = run("model check", input(fresh_dir("missing"), 64, "nope.json"));
    EXPECT_EQ(o.code, exit_solver_error);
    EXPECT_NE(o.err.find("nope.json"), std::string::npos);
}

TEST(Commands, SolveKeIsDeterministic) {
    const fs::path a = fresh_dir("ke_a"), b = fresh_dir("ke_b");
    ASSERT_EQ(run("solve-ke", input(a)).code, exit_ok);
    ASSERT_EQ(run("solve-ke", input(b)).code, exit_ok);
    for (const char* f : {"ke_solution.csv", "ke_solution.pgm", "ke_report.json"}) {
        ASSERT_TRUE(fs::exists(a / f)) << f;
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    }
    const auto j = nlohmann::json::parse(slurp(a / "ke_report.json"));
    EXPECT_LE(j.at("residual").get<double>(), 1e-9);
    EXPECT_EQ(j.at("levels").size(), 4u);
    EXPECT_EQ(read_field_csv(a / "ke_solution.csv").grid().n(), 64);
}

TEST(Commands, FlowRunIsDeterministicAndStaysInOutputDir) {
    const fs::path root = fresh_dir("flow");
    CommandInput in = input(root / "a");
    in.cfg.flow.T = 2.0;
    ASSERT_EQ(run("flow run", in).code, exit_ok);
    in.cfg.output_dir = (root / "b").string();
    ASSERT_EQ(run("flow run", in).code, exit_ok);
    for (const char* f : {"trajectory.csv", "flow_final.csv", "decay_report.json"})
        EXPECT_EQ(slurp(root / "a" / f), slurp(root / "b" / f)) << f;
    std::size_t entries = 0;
    for (const auto& e : fs::directory_iterator(root)) entries += e.is_directory();
    EXPECT_EQ(entries, 2u);
    const std::string traj = slurp(root / "a" / "trajectory.csv");
    EXPECT_EQ(traj.rfind("t,", 0), 0u);
    EXPECT_NE(traj.find("energy"), std::string::npos);
}

TEST(Commands, PeriodsTable) {
    const fs::path d = fresh_dir("periods");
    {
        std::ofstream f(d / "curves.csv");
        f << "# g2, g3\n4,0\n0,4\n2,0.5,-0.7,0.3\n";
    }
    CommandInput in = input(d / "out");
    in.periods_input = d / "curves.csv";
    const Outcome o = run("periods", in);
    ASSERT_EQ(o.code, exit_ok) << o.err;
    const std::string csv = slurp(d / "out" / "periods.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
    EXPECT_NE(o.out.find("tau = 0 + 1i"), std::string::npos) << o.out;

    std::ofstream(d / "bad.csv") << "1,2,3\n";
    in.periods_input = d / "bad.csv";
    EXPECT_EQ(run("periods", in).code, exit_solver_error);
}

TEST(Commands, VerifyAllOnProductModelPasses) {
    CommandInput in = input(fresh_dir("verify"), 128);
    const Outcome o = run("verify all", in);
    EXPECT_EQ(o.code, exit_ok) << o.out << o.err;
    const auto j = nlohmann::json::parse(slurp(fs::path(in.cfg.output_dir) / "verify_report.json"));
    for (const char* key : {"lemma-3.2", "lemma-3.4", "eq-3.10", "thm-1.1-2", "prop-2.1-holder", "prop-3.7", "F-Lp"}) {
        ASSERT_TRUE(j.contains(key)) << key;
        EXPECT_TRUE(j.at(key).at("pass").get<bool>()) << key;
    }
}

TEST(Cli, BinaryRunsModelCheckAndReportsGuardErrors) {
    const fs::path d = fresh_dir("cli");
    const std::string cli = CKRF_CLI_PATH;
    const std::string model = (kModels / "product_b05.json").string();
    int status = 0;
    const std::string out = capture(cli + " model check --model " + model + " --grid-n 64 --out " + d.string(), &status);
    EXPECT_EQ(WEXITSTATUS(status), 0) << out;
    EXPECT_NE(out.find("A = 3.14159"), std::string::npos) << out;

    const std::string bad =
        capture(cli + " flow run --model " + model + " --quick --scheme rk4-explicit --dt 0.05 --out " + d.string(), &status);
    EXPECT_EQ(WEXITSTATUS(status), 1) << bad;
    EXPECT_NE(bad.find("rk4 stability guard"), std::string::npos) << bad;

    std::ofstream(d / "cfg.json") << R"({"model": ")" << model << R"(", "grid_n": 64, "output_dir": ")"
                                  << (d / "cfgout").string() << R"("})";
    const std::string viaconfig = capture(cli + " model check --config " + (d / "cfg.json").string(), &status);
    EXPECT_EQ(WEXITSTATUS(status), 0) << viaconfig;
}
