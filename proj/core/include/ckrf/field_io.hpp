#pragma once

#include "ckrf/torus_field.hpp"

#include <filesystem>
#include <string>

namespace ckrf {

/// Writes `content` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

/// Row-major CSV (one grid row of constant y per line) behind a `# N=<n>` header.
std::string field_to_csv(const ScalarField& f);
ScalarField field_from_csv(const std::string& text);

/// 8-bit greyscale PGM scaled to [min, max]; the comment line records both.
std::string field_to_pgm(const ScalarField& f);

void write_field_csv(const std::filesystem::path& path, const ScalarField& f);
void write_field_pgm(const std::filesystem::path& path, const ScalarField& f);
ScalarField read_field_csv(const std::filesystem::path& path);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

} // namespace ckrf
