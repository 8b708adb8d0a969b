#include "ckrf/field_io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

using namespace ckrf;

TEST(FieldIo, CsvRoundTripIsExact) {
    const Grid g(16);
    const auto f = ScalarField::from_function(g, [](Point p) { return std::sin(7.0 * p.x) / (1.0 + p.y) + 1e-300; });
    const ScalarField back = field_from_csv(field_to_csv(f));
    ASSERT_EQ(back.grid().n(), 16);
    for (std::size_t k = 0; k < f.size(); ++k) EXPECT_EQ(back[k], f[k]);
    EXPECT_EQ(field_to_csv(f).rfind("# N=16\n", 0), 0u);
}

TEST(FieldIo, PgmHeaderRecordsRange) {
    const Grid g(16);
    const auto f = ScalarField::from_function(g, [](Point p) { return p.x; });
    const std::string pgm = field_to_pgm(f);
    EXPECT_EQ(pgm.rfind("P5\n", 0), 0u);
    EXPECT_NE(pgm.find("# min=0 max=0.9375"), std::string::npos);
    EXPECT_EQ(pgm.size(), pgm.find("255\n") + 4 + 256);
}

TEST(FieldIo, AtomicWriteCreatesDirectories) {
    const auto dir = std::filesystem::temp_directory_path() / "ckrf_io_test" / "nested";
    std::filesystem::remove_all(dir.parent_path());
    write_file_atomic(dir / "a.txt", "hello");
    EXPECT_EQ(read_file(dir / "a.txt"), "hello");
    EXPECT_FALSE(std::filesystem::exists(dir / "a.txt.tmp"));
    std::filesystem::remove_all(dir.parent_path());
}
