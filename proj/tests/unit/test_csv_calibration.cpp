#include <doctest.h>

#include <sstream>

#include "spindiff/calibration.hpp"
#include "spindiff/csv.hpp"
#include "spindiff/errors.hpp"

using namespace spindiff;

TEST_CASE("CSV write and read") {
  CsvTable t;
  t.comments = {"spindiff test"};
  t.columns = {"a", "b"};
  t.rows = {{"1.5", "x,y"}, {"2", ""}};
  std::ostringstream out;
  write_csv(out, t);
  CHECK(out.str() == "# spindiff test\na,b\n1.5,x;y\n2,\n");

  std::istringstream in(out.str());
  const auto back = read_csv(in);
  CHECK(back.comments == t.comments);
  CHECK(back.columns == t.columns);
  REQUIRE(back.rows.size() == 2);
  CHECK(back.rows[0][1] == "x;y");
  CHECK(back.rows[1][1] == "");
  CHECK(back.number(0, "a") == 1.5);
  CHECK_THROWS_AS((void)back.number(0, "b"), Error);
  CHECK_THROWS_AS((void)back.column("c"), Error);
}

TEST_CASE("CSV reader errors") {
  std::istringstream ragged("a,b\n1\n");
  CHECK_THROWS_WITH_AS((void)read_csv(ragged), doctest::Contains("line 2"), Error);
  std::istringstream empty("# only comments\n");
  CHECK_THROWS_AS((void)read_csv(empty), Error);
  CHECK_THROWS_AS((void)read_csv_file("/nonexistent/x.csv"), Error);
}

TEST_CASE("number formatting round-trips") {
  for (const double v : {0.1, 1.0 / 3.0, 6.02214076e23, -5e-300}) {
    CHECK(std::stod(format_number(v)) == v);
  }
}

TEST_CASE("default calibration matches the data file") {
  const auto file = read_calibration_file(SPINDIFF_DATA "/calibration.txt");
  const auto def = default_calibration();
  CHECK(file.coefficients == def.coefficients);
  CHECK(file.seed == def.seed);
  CHECK(file.n_systems == def.n_systems);
  CHECK(file.terms == HamiltonianTerms::ZZ);
  CHECK(file.format_version == 1);
}

TEST_CASE("calibration records round-trip") {
  auto r = make_record(calibrate_moments(20, 5, HamiltonianTerms::FullSecular));
  const auto back = parse_calibration(format_calibration(r));
  CHECK(back.coefficients == r.coefficients);
  CHECK(back.terms == HamiltonianTerms::FullSecular);
  CHECK(back.seed == 5);
  CHECK(back.n_systems == 20);
  CHECK(back.max_relative_residual == r.max_relative_residual);
}

TEST_CASE("malformed calibration records") {
  CHECK_THROWS_WITH_AS((void)parse_calibration("format_version = 1\nbogus = 2\n"),
                       doctest::Contains("line 2"), Error);
  CHECK_THROWS_WITH_AS((void)parse_calibration("# c\nc_sq = abc\n"),
                       doctest::Contains("line 2"), Error);
  CHECK_THROWS_AS((void)read_calibration_file("/nonexistent/c.txt"), Error);
}
