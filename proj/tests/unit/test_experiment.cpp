#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "cac/config_io.hpp"
#include "cac/experiment.hpp"
#include "fixtures.hpp"

using namespace cac;

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, sep)) out.push_back(cell);
    return out;
}

}  // namespace

TEST_CASE("rate grids") {
    CHECK(parse_rates("0.05:0.2:0.05") == std::vector<double>{0.05, 0.1, 0.15, 0.2});
    CHECK(parse_rates("0.1:0.1:1") == std::vector<double>{0.1});
    CHECK(parse_rates("2, 0.5,1") == std::vector<double>{2, 0.5, 1});
    CHECK(parse_rates("0.05:2.0:0.05").size() == 40);
    CHECK(parse_rates("0.05:2.0:0.05").back() == 2.0);
    CHECK_THROWS_AS((void)parse_rates(""), std::invalid_argument);
    CHECK_THROWS_AS((void)parse_rates("1:2"), std::invalid_argument);
    CHECK_THROWS_AS((void)parse_rates("1:0:0.1"), std::invalid_argument);
    CHECK_THROWS_AS((void)parse_rates("0:1:0"), std::invalid_argument);
    CHECK_THROWS_AS((void)parse_rates("1,,2"), std::invalid_argument);
    CHECK_THROWS_AS((void)parse_rates("-1"), std::invalid_argument);
    CHECK_THROWS_AS((void)parse_rates("abc"), std::invalid_argument);
}

TEST_CASE("modes round-trip through text") {
    for (Mode m : {Mode::Analytic, Mode::Oracle, Mode::Simulate}) {
        CHECK(parse_mode(to_string(m)) == m);
    }
    CHECK_FALSE(parse_mode("exact").has_value());
}

TEST_CASE("numbers print without locale or trailing noise") {
    CHECK(format_number(0.0) == "0");
    CHECK(format_number(-0.0) == "0");
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(32.0) == "32");
    CHECK(format_number(1e-20) == "1e-20");
    CHECK(std::stod(format_number(0.11005434782608696)) == 0.11005434782608696);
}

TEST_CASE("csv columns follow class names") {
    const auto sys = test::table1_system();
    const auto h = csv_header(sys);
    const std::vector<std::string> expect{
        "lambda_total",  "p_drop",        "p_block_voice",   "p_block_web",
        "p_block_video", "p_block_background", "p_forced",   "utilization",
        "alloc_voice",   "alloc_web",     "alloc_video",     "alloc_background",
        "releasable_p0", "releasable_p1", "releasable_p2",   "releasable_p3",
        "releasable_p4"};
    CHECK(h == expect);
}

TEST_CASE("sweep rows are sorted and complete") {
    const auto sc = parse_config(test::config_path("table1.json"));
    const auto result = sweep(sc, Mode::Analytic, {1.0, 0.0, 0.5});
    REQUIRE(result.rows.size() == 3);
    CHECK(result.rows[0].lambda_total == 0.0);
    CHECK(result.rows[2].lambda_total == 1.0);
    CHECK_FALSE(result.has_errors());
    const auto csv = to_csv(result, sc.base.system);
    CHECK(csv.find('\r') == std::string::npos);
    CHECK(csv.back() == '\n');
    std::stringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    const auto width = split(line, ',').size();
    std::getline(lines, line);
    const auto zero = split(line, ',');
    REQUIRE(zero.size() == width);
    for (std::size_t k = 1; k <= 6; ++k) CHECK(zero[k] == "0");
    while (std::getline(lines, line)) CHECK(split(line, ',').size() == width);
}

TEST_CASE("allocations stay at request under light load and fall after the knee") {
    const auto sc = parse_config(test::config_path("table1.json"));
    const auto r = sweep(sc, Mode::Analytic, parse_rates("0.05:2.0:0.05"));
    for (const auto& row : r.rows) {
        CHECK(row.metrics->alloc[0].mean == 32.0);
        if (row.lambda_total <= 0.4 + 1e-9) {
            for (std::size_t m = 1; m < 4; ++m) {
                CHECK(row.metrics->alloc[m].mean >=
                      0.99 * sc.base.system.requested()(static_cast<Eigen::Index>(m)));
            }
        }
    }
    for (std::size_t k = 1; k < r.rows.size(); ++k) {
        for (std::size_t m = 1; m < 4; ++m) {
            CHECK(r.rows[k].metrics->alloc[m].mean <=
                  r.rows[k - 1].metrics->alloc[m].mean + 1e-9);
        }
    }
}

TEST_CASE("oracle rows over the state cap become error cells") {
    const auto sc = parse_config(test::config_path("desk/mixed_exogenous.json"));
    const auto r = sweep(sc, Mode::Oracle, {1.0, 3.0}, 5);
    CHECK(r.has_errors());
    const auto csv = to_csv(r, sc.base.system);
    CHECK(csv.find("error:cap_exceeded") != std::string::npos);
}

TEST_CASE("manifest records how the csv was made") {
    const auto sc = parse_config(test::config_path("desk/erlang5.json"));
    const auto r = sweep(sc, Mode::Simulate, {3.0});
    const auto csv = to_csv(r, sc.base.system);
    const auto m = make_manifest(sc, Mode::Simulate, {3.0}, 77, csv, "2026-01-01T00:00:00Z");
    CHECK(m["tool"] == "cacsim");
    CHECK(m["mode"] == "simulate");
    CHECK(m["seed"] == sc.base.sim.seed);
    CHECK(m["config_digest"] == config_digest(sc));
    CHECK(m["csv_sha256"] == sha256_hex(csv));
    CHECK(m["state_cap"] == 77);
    CHECK(m["variants"]["handover_mode"] == "exogenous");
    CHECK(m["variants"]["threshold_source"] == "derived");
    CHECK(m["variants"]["mu_i_law"] == "phi-blend(phi=1)");
    CHECK(config_digest(parse_config_json(m["config"])) == config_digest(sc));
}

TEST_CASE("simulated sweeps repeat exactly") {
    const auto sc = parse_config(test::config_path("desk/mixed_endogenous.json"));
    const auto a = to_csv(sweep(sc, Mode::Simulate, {1.0, 2.0}), sc.base.system);
    const auto b = to_csv(sweep(sc, Mode::Simulate, {2.0, 1.0}), sc.base.system);
    CHECK(a == b);
}

TEST_CASE("validation passes in the exact regime") {
    const auto sc = parse_config(test::config_path("desk/erlang5.json"));
    const auto report = validate(sc);
    CHECK(report.exact_regime);
    CHECK(report.passed());
    const auto text = report.to_text();
    CHECK(text.find("p_block_unit") != std::string::npos);
    CHECK(text.find("approximation budget") != std::string::npos);
}

TEST_CASE("validation reports the aggregation gap for mixed sizes") {
    const auto sc = parse_config(test::config_path("desk/mixed_exogenous.json"));
    const auto report = validate(sc);
    CHECK_FALSE(report.exact_regime);
    CHECK(report.sim_ok);
    CHECK(report.lines.size() >= 5);
}
