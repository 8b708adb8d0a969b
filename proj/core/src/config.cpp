#include "ckrf/config.hpp"

#include "ckrf/errors.hpp"
#include "ckrf/field_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <sstream>

namespace ckrf {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void require_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError((path.empty() ? std::string("config") : path) + ": expected an object");
}

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    require_object(j, path);
    for (auto it = j.begin(); it != j.end(); ++it) {
        const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return it.key() == a; });
        if (!ok) throw ConfigError(join(path, it.key()) + ": unknown key");
    }
}

double get_number(const json& j, const std::string& key, const std::string& path, double fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number()) throw ConfigError(join(path, key) + ": expected a number");
    return v.get<double>();
}

int get_int(const json& j, const std::string& key, const std::string& path, int fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number_integer()) throw ConfigError(join(path, key) + ": expected an integer");
    return v.get<int>();
}

std::string get_string(const json& j, const std::string& key, const std::string& path, const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_string()) throw ConfigError(join(path, key) + ": expected a string");
    return v.get<std::string>();
}

std::vector<double> get_numbers(const json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path + ": expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) throw ConfigError(path + "[" + std::to_string(i) + "]: expected a number");
        out.push_back(v[i].get<double>());
    }
    return out;
}

Point get_point(const json& v, const std::string& path) {
    const auto xs = get_numbers(v, path);
    if (xs.size() != 2) throw ConfigError(path + ": expected [x, y]");
    for (double x : xs)
        if (!(x >= 0.0 && x < 1.0)) throw ConfigError(path + ": coordinates must lie in [0, 1)");
    return {xs[0], xs[1]};
}

Complex get_complex(const json& j, const std::string& key, const std::string& path, Complex fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (v.is_number()) return {v.get<double>(), 0.0};
    const auto xs = get_numbers(v, join(path, key));
    if (xs.size() != 2) throw ConfigError(join(path, key) + ": expected [re, im]");
    return {xs[0], xs[1]};
}

json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(what + ": malformed JSON: " + e.what());
    }
}

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }
json point_json(Point p) { return json::array({p.x, p.y}); }

TauModel parse_tau(const json& j, const std::string& path) {
    require_object(j, path);
    TauModel t;
    t.kind = parse_tau_kind(get_string(j, "kind", path, "constant"));
    switch (t.kind) {
    case TauModel::Kind::constant:
        check_keys(j, path, {"kind", "tau"});
        t.tau0 = get_complex(j, "tau", path, t.tau0);
        if (!(t.tau0.imag() > 0.0)) throw ConfigError(join(path, "tau") + ": Im tau must be positive");
        break;
    case TauModel::Kind::local_ib:
        check_keys(j, path, {"kind", "cap_radius", "offset"});
        t.cap_radius = get_number(j, "cap_radius", path, t.cap_radius);
        t.offset = get_number(j, "offset", path, t.offset);
        if (!(t.cap_radius > 0.0 && t.cap_radius <= 0.45))
            throw ConfigError(join(path, "cap_radius") + ": must lie in (0, 0.45]");
        break;
    case TauModel::Kind::weierstrass:
        check_keys(j, path, {"kind", "g2", "g3", "g2_amplitude", "g3_amplitude"});
        t.curve.g2 = get_complex(j, "g2", path, t.curve.g2);
        t.curve.g3 = get_complex(j, "g3", path, t.curve.g3);
        t.g2_amplitude = get_complex(j, "g2_amplitude", path, t.g2_amplitude);
        t.g3_amplitude = get_complex(j, "g3_amplitude", path, t.g3_amplitude);
        break;
    }
    return t;
}

FibrationModel model_from_json(const json& j, const std::string& path) {
    check_keys(j, path, {"beta", "delta", "cone_point", "fibers", "tau_model", "grid_n", "fiber_area"});
    FibrationModel m;
    m.beta = get_number(j, "beta", path, m.beta);
    if (!(m.beta > 0.0 && m.beta < 1.0)) {
        std::ostringstream os;
        os << join(path, "beta") << ": must lie in (0, 1), got " << m.beta;
        throw ConfigError(os.str());
    }
    m.delta = get_number(j, "delta", path, m.delta);
    if (!(m.delta > 0.0)) throw ConfigError(join(path, "delta") + ": must be positive");
    if (j.contains("cone_point")) m.cone_point = get_point(j.at("cone_point"), join(path, "cone_point"));
    m.grid_n = get_int(j, "grid_n", path, m.grid_n);
    if (m.grid_n < 16 || m.grid_n % 2) throw ConfigError(join(path, "grid_n") + ": must be even and >= 16");
    m.fiber_area = get_number(j, "fiber_area", path, m.fiber_area);
    if (!(m.fiber_area > 0.0)) throw ConfigError(join(path, "fiber_area") + ": must be positive");
    if (j.contains("fibers")) {
        const json& fs_ = j.at("fibers");
        const std::string fp = join(path, "fibers");
        if (!fs_.is_array()) throw ConfigError(fp + ": expected an array");
        for (std::size_t i = 0; i < fs_.size(); ++i) {
            const std::string ip = fp + "[" + std::to_string(i) + "]";
            check_keys(fs_[i], ip, {"point", "m", "b"});
            if (!fs_[i].contains("point")) throw ConfigError(join(ip, "point") + ": missing");
            SingularFiber f;
            f.point = get_point(fs_[i].at("point"), join(ip, "point"));
            f.m = get_int(fs_[i], "m", ip, 1);
            f.b = get_int(fs_[i], "b", ip, 0);
            if (f.m < 1) throw ConfigError(join(ip, "m") + ": must be >= 1");
            if (f.b < 0) throw ConfigError(join(ip, "b") + ": must be >= 0");
            m.fibers.push_back(f);
        }
    }
    if (j.contains("tau_model")) m.tau = parse_tau(j.at("tau_model"), join(path, "tau_model"));
    validate_model(m);
    return m;
}

json model_to_json(const FibrationModel& m) {
    json j;
    j["beta"] = m.beta;
    j["delta"] = m.delta;
    j["cone_point"] = point_json(m.cone_point);
    json fibers = json::array();
    for (const auto& f : m.fibers) fibers.push_back({{"point", point_json(f.point)}, {"m", f.m}, {"b", f.b}});
    j["fibers"] = fibers;
    json t;
    t["kind"] = to_string(m.tau.kind);
    switch (m.tau.kind) {
    case TauModel::Kind::constant: t["tau"] = complex_json(m.tau.tau0); break;
    case TauModel::Kind::local_ib:
        t["cap_radius"] = m.tau.cap_radius;
        t["offset"] = m.tau.offset;
        break;
    case TauModel::Kind::weierstrass:
        t["g2"] = complex_json(m.tau.curve.g2);
        t["g3"] = complex_json(m.tau.curve.g3);
        t["g2_amplitude"] = complex_json(m.tau.g2_amplitude);
        t["g3_amplitude"] = complex_json(m.tau.g3_amplitude);
        break;
    }
    j["tau_model"] = t;
    j["grid_n"] = m.grid_n;
    j["fiber_area"] = m.fiber_area;
    return j;
}

} // namespace

FibrationModel parse_model_text(const std::string& text) { return model_from_json(parse_json(text, "model"), ""); }

FibrationModel load_model(const fs::path& path) {
    return model_from_json(parse_json(read_file(path), path.string()), "");
}

std::string serialize_model(const FibrationModel& m) { return model_to_json(m).dump(2) + "\n"; }

void validate_config(const RunConfig& c, bool check_paths) {
    if (c.model_path.empty()) throw ConfigError("model: missing");
    if (check_paths && !fs::exists(c.model_path)) throw ConfigError("model: file not found: " + c.model_path);
    if (c.grid_n < 16 || c.grid_n % 2) throw ConfigError("grid_n: must be even and >= 16");
    validate_schedule(c.epsilon_schedule, c.grid_n);
    if (!(c.flow.T > 0.0 && c.flow.T <= 50.0)) throw ConfigError("flow.T: must lie in (0, 50]");
    if (!(c.flow.dt > 0.0 && c.flow.dt <= c.flow.T)) throw ConfigError("flow.dt: must lie in (0, T]");
    if (!(c.flow.epsilon > 0.0)) throw ConfigError("flow.epsilon: must be positive");
    if (!(c.masks.q_threshold > 0.0 && c.masks.q_threshold < 1.0))
        throw ConfigError("masks.q_threshold: must lie in (0, 1)");
    for (double t : c.masks.sigma_thresholds)
        if (!(t > 0.0 && t < 1.0)) throw ConfigError("masks.sigma_thresholds: entries must lie in (0, 1)");
    if (!(c.masks.sigma_width > 0.0)) throw ConfigError("masks.sigma_width: must be positive");
    if (c.output_dir.empty()) throw ConfigError("output_dir: must not be empty");
}

RunConfig parse_config_text(const std::string& text, const fs::path& base_dir) {
    const json j = parse_json(text, "config");
    check_keys(j, "", {"model", "grid_n", "epsilon_schedule", "flow", "masks", "output_dir", "seed"});
    RunConfig c;
    c.model_path = get_string(j, "model", "", "");
    if (c.model_path.empty()) throw ConfigError("model: missing");
    fs::path mp(c.model_path);
    if (mp.is_relative() && !base_dir.empty()) mp = base_dir / mp;
    c.model_path = mp.lexically_normal().string();
    c.grid_n = get_int(j, "grid_n", "", c.grid_n);
    if (j.contains("epsilon_schedule")) c.epsilon_schedule = get_numbers(j.at("epsilon_schedule"), "epsilon_schedule");
    if (j.contains("flow")) {
        const json& f = j.at("flow");
        check_keys(f, "flow", {"T", "dt", "scheme", "epsilon"});
        c.flow.T = get_number(f, "T", "flow", c.flow.T);
        c.flow.dt = get_number(f, "dt", "flow", c.flow.dt);
        c.flow.scheme = parse_scheme(get_string(f, "scheme", "flow", to_string(c.flow.scheme)));
        c.flow.epsilon = get_number(f, "epsilon", "flow", c.flow.epsilon);
    }
    if (j.contains("masks")) {
        const json& m = j.at("masks");
        check_keys(m, "masks", {"q_threshold", "sigma_thresholds", "sigma_width"});
        c.masks.q_threshold = get_number(m, "q_threshold", "masks", c.masks.q_threshold);
        if (m.contains("sigma_thresholds"))
            c.masks.sigma_thresholds = get_numbers(m.at("sigma_thresholds"), "masks.sigma_thresholds");
        c.masks.sigma_width = get_number(m, "sigma_width", "masks", c.masks.sigma_width);
    }
    c.output_dir = get_string(j, "output_dir", "", c.output_dir);
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned()) throw ConfigError("seed: expected a nonnegative integer");
        c.seed = j.at("seed").get<std::uint64_t>();
    }
    validate_config(c, true);
    return c;
}

RunConfig parse_config(const fs::path& path) { return parse_config_text(read_file(path), path.parent_path()); }

std::string serialize_config(const RunConfig& c) {
    json j;
    j["model"] = c.model_path;
    j["grid_n"] = c.grid_n;
    j["epsilon_schedule"] = c.epsilon_schedule;
    j["flow"] = {{"T", c.flow.T}, {"dt", c.flow.dt}, {"scheme", to_string(c.flow.scheme)}, {"epsilon", c.flow.epsilon}};
    j["masks"] = {{"q_threshold", c.masks.q_threshold},
                  {"sigma_thresholds", c.masks.sigma_thresholds},
                  {"sigma_width", c.masks.sigma_width}};
    j["output_dir"] = c.output_dir;
    j["seed"] = c.seed;
    return j.dump(2) + "\n";
}

void apply_quick(RunConfig& c) {
    c.grid_n = 64;
    c.flow.T = 8.0;
}

} // namespace ckrf
