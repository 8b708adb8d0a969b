#include "ckrf/field_io.hpp"

#include "ckrf/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ckrf {

namespace fs = std::filesystem;

void write_file_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw Error("cannot open " + tmp.string() + " for writing");
        os << content;
        os.flush();
        if (!os) throw Error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot read " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string field_to_csv(const ScalarField& f) {
    const int n = f.grid().n();
    std::string out = "# N=" + std::to_string(n) + "\n";
    out.reserve(out.size() + f.size() * 24);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            if (i) out += ',';
            out += format_double(f.at(i, j));
        }
        out += '\n';
    }
    return out;
}

ScalarField field_from_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line.rfind("# N=", 0) != 0) throw ConfigError("field CSV lacks '# N=<n>' header");
    const int n = std::stoi(line.substr(4));
    Grid g(n);
    std::vector<double> values;
    values.reserve(g.size());
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const char* p = line.data();
        const char* end = p + line.size();
        while (p < end) {
            double v = 0.0;
            auto res = std::from_chars(p, end, v);
            if (res.ec != std::errc()) throw ConfigError("malformed number in field CSV");
            values.push_back(v);
            p = res.ptr;
            if (p < end && *p == ',') ++p;
        }
    }
    if (values.size() != g.size()) throw ConfigError("field CSV has wrong number of values");
    return ScalarField(g, std::move(values));
}

std::string field_to_pgm(const ScalarField& f) {
    const int n = f.grid().n();
    const double lo = f.min();
    const double hi = f.max();
    const double span = hi > lo ? hi - lo : 1.0;
    std::string out = "P5\n# min=" + format_double(lo) + " max=" + format_double(hi) + "\n" +
                      std::to_string(n) + " " + std::to_string(n) + "\n255\n";
    // Top row of the image is the largest y.
    for (int j = n - 1; j >= 0; --j) {
        for (int i = 0; i < n; ++i) {
            const double t = (f.at(i, j) - lo) / span;
            out += static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * std::clamp(t, 0.0, 1.0))));
        }
    }
    return out;
}

void write_field_csv(const fs::path& path, const ScalarField& f) { write_file_atomic(path, field_to_csv(f)); }
void write_field_pgm(const fs::path& path, const ScalarField& f) { write_file_atomic(path, field_to_pgm(f)); }
ScalarField read_field_csv(const fs::path& path) { return field_from_csv(read_file(path)); }

} // namespace ckrf
