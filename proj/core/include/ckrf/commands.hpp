#pragma once

// Subcommand drivers shared by the command-line tool and the tests. Each
// returns a process exit code and writes artifacts only below cfg.output_dir.

#include "ckrf/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace ckrf {

enum ExitCode : int { exit_ok = 0, exit_solver_error = 1, exit_verification_failed = 2 };

struct CommandInput {
    RunConfig cfg;
    std::filesystem::path periods_input; ///< CSV of g2,g3 (real) or g2re,g2im,g3re,g3im rows
};

int model_check(const RunConfig& cfg, std::ostream& out);
int solve_ke(const RunConfig& cfg, std::ostream& out);
int flow_run(const RunConfig& cfg, std::ostream& out);
int verify_all(const RunConfig& cfg, std::ostream& out);
int periods(const std::filesystem::path& input, const RunConfig& cfg, std::ostream& out);

/// The `verify all` report as a JSON string, without writing it.
std::string verify_report(const RunConfig& cfg, bool* all_pass = nullptr);

/// Epsilon levels used to reach `eps`: entries of the schedule at least eps / 0.7, then eps.
std::vector<double> schedule_to(std::span<const double> schedule, double eps);

/// Dispatches "model check", "solve-ke", "flow run", "verify all" or "periods".
/// Library errors are reported on `err` and mapped to exit codes.
int run_subcommand(const std::string& name, const CommandInput& in, std::ostream& out, std::ostream& err);

} // namespace ckrf
