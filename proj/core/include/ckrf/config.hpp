#pragma once

#include "ckrf/fibration_model.hpp"
#include "ckrf/flow_engine.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ckrf {

struct FlowConfig {
    double T = 20.0;
    double dt = 0.05;
    Scheme scheme = Scheme::backward_euler_newton;
    double epsilon = 0.05;
};

struct MaskConfig {
    double q_threshold = 0.1;
    std::vector<double> sigma_thresholds{0.2, 0.4, 0.6};
    double sigma_width = 0.1;
};

struct RunConfig {
    std::string model_path;
    int grid_n = 128;
    std::vector<double> epsilon_schedule{0.4, 0.2, 0.1, 0.05};
    FlowConfig flow;
    MaskConfig masks;
    std::string output_dir = "out";
    std::uint64_t seed = 0;
};

/// Reads and validates a run configuration. Relative model paths resolve
/// against the directory of the config file. Errors name the key path.
RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir = {});

/// Range checks; `check_paths` also requires the model file to exist.
void validate_config(const RunConfig& cfg, bool check_paths = true);

std::string serialize_config(const RunConfig& cfg);

/// Smoke-test scaling: N = 64, T = 8.
void apply_quick(RunConfig& cfg);

FibrationModel load_model(const std::filesystem::path& path);
FibrationModel parse_model_text(const std::string& text);
std::string serialize_model(const FibrationModel& m);

} // namespace ckrf
