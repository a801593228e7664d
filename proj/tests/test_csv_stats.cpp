#include <doctest.h>

#include <sstream>

#include "msweem/csv.hpp"
#include "msweem/error.hpp"
#include "msweem/stats.hpp"

using namespace msweem;

TEST_SUITE_BEGIN("csv_stats");

TEST_CASE("csv round-trips quoted fields, commas and newlines") {
    std::ostringstream out;
    csv::write_row(out, {"id", "text"});
    csv::write_row(out, {"t1", "plain"});
    csv::write_row(out, {"t2", "comma, inside"});
    csv::write_row(out, {"t3", "quote \" inside"});
    csv::write_row(out, {"t4", "line\nbreak"});

    std::istringstream in(out.str());
    const csv::Table table = csv::read_stream(in);
    REQUIRE(table.header == std::vector<std::string>{"id", "text"});
    REQUIRE(table.rows.size() == 4);
    CHECK(table.rows[0].fields[1] == "plain");
    CHECK(table.rows[1].fields[1] == "comma, inside");
    CHECK(table.rows[2].fields[1] == "quote \" inside");
    CHECK(table.rows[3].fields[1] == "line\nbreak");
}

TEST_CASE("csv tracks line numbers past embedded newlines") {
    std::istringstream in("a,b\n1,\"x\ny\"\n2,z\n");
    const csv::Table table = csv::read_stream(in);
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0].line == 2);
    CHECK(table.rows[1].line == 4);
}

TEST_CASE("csv rejects unterminated quotes") {
    std::istringstream in("a\n\"oops\n");
    CHECK_THROWS_AS(csv::read_stream(in), SchemaError);
}

TEST_CASE("format_double round-trips exactly") {
    for (double v : {0.1, 1.0 / 3.0, 2.5e-9, 123456.789, 297.4, 0.0}) {
        CHECK(std::stod(csv::format_double(v)) == v);
    }
}

TEST_CASE("incomplete beta matches closed forms") {
    // I_x(1,1) = x
    for (double x : {0.0, 0.25, 0.5, 0.99, 1.0})
        CHECK(stats::incomplete_beta(1.0, 1.0, x) == doctest::Approx(x).epsilon(1e-12));
    // symmetry I_x(a,b) = 1 - I_{1-x}(b,a)
    CHECK(stats::incomplete_beta(2.5, 4.0, 0.3) ==
          doctest::Approx(1.0 - stats::incomplete_beta(4.0, 2.5, 0.7)).epsilon(1e-12));
    // I_x(2,1) = x^2
    CHECK(stats::incomplete_beta(2.0, 1.0, 0.6) == doctest::Approx(0.36).epsilon(1e-12));
}

TEST_CASE("t-distribution p-values match quadrature oracle") {
    // Frozen from Simpson integration of the t density.
    CHECK(stats::t_two_sided_p(2.0, 10.0) ==
          doctest::Approx(0.073388034770056).epsilon(1e-10));
    CHECK(stats::t_two_sided_p(1.0, 5.0) ==
          doctest::Approx(0.3632174676491351).epsilon(1e-10));
    CHECK(stats::t_two_sided_p(2.5, 3.0) ==
          doctest::Approx(0.08770664700805623).epsilon(1e-10));
    CHECK(stats::t_two_sided_p(0.0, 7.0) == doctest::Approx(1.0));
    CHECK(stats::t_two_sided_p(-2.0, 10.0) ==
          doctest::Approx(stats::t_two_sided_p(2.0, 10.0)).epsilon(1e-14));
}

TEST_CASE("normal cdf basics") {
    CHECK(stats::normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(stats::normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-9));
    CHECK(stats::normal_cdf(-5.0) + stats::normal_cdf(5.0) ==
          doctest::Approx(1.0).epsilon(1e-14));
}

TEST_SUITE_END();
