#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "cac/config_io.hpp"
#include "cac/errors.hpp"
#include "fixtures.hpp"

using namespace cac;
using nlohmann::json;

namespace {

json minimal() {
    return json::parse(R"({
      "capacity_kbps": 400,
      "classes": [
        {"name": "voice", "requested_kbps": 32, "gamma": [0, 0, 0], "elastic": false, "mix_fraction": 0.5},
        {"name": "data", "requested_kbps": 100, "gamma": [0.5, 0.4, 0.3], "elastic": true, "mix_fraction": 0.5}
      ],
      "arrivals": {"new_rate_total": 3, "handover": {"mode": "exogenous", "rate": 1}},
      "duration_mean_s": 1
    })");
}

std::pair<ConfigError::Kind, std::string> failure(const json& doc) {
    try {
        (void)parse_config_json(doc);
    } catch (const ConfigError& e) {
        return {e.kind(), e.code()};
    }
    return {ConfigError::Kind::Parse, "accepted"};
}

}  // namespace

TEST_CASE("shipped configs parse") {
    for (const char* name : {"table1.json", "baseline_adaptive.json", "baseline_rigid.json",
                             "desk/mm22.json", "desk/erlang5.json", "desk/rigid_two_class.json",
                             "desk/elastic_only.json", "desk/mixed_exogenous.json",
                             "desk/mixed_endogenous.json"}) {
        CAPTURE(name);
        CHECK_NOTHROW((void)parse_config(test::config_path(name)));
    }
}

TEST_CASE("table1.json carries the documented assumptions") {
    const auto sc = parse_config(test::config_path("table1.json"));
    const auto& sys = sc.base.system;
    CHECK(sys.capacity() == 6000.0);
    CHECK(sys.num_classes() == 4);
    CHECK(sys.mix()(0) == doctest::Approx(1.0 / 3));
    CHECK(sys.mix()(2) == doctest::Approx(1.0 / 9));
    CHECK(sc.base.duration_mean_s == 120.0);
    CHECK(sc.base.handover.mode == HandoverMode::Endogenous);
    CHECK(*sc.base.handover.dwell_mean_s == 240.0);
    CHECK(sc.description.find("ASSUMPTION") != std::string::npos);
    CHECK_FALSE(sc.thresholds.has_value());
}

TEST_CASE("baselines differ from table1 only in degradation") {
    const auto t = parse_config(test::config_path("table1.json"));
    const auto a = parse_config(test::config_path("baseline_adaptive.json"));
    const auto r = parse_config(test::config_path("baseline_rigid.json"));
    CHECK(a.base.system.requested() == t.base.system.requested());
    CHECK(a.base.system.mix() == t.base.system.mix());
    for (Eigen::Index p = 0; p <= 4; ++p) {
        CHECK(a.base.system.gamma().col(p) == t.base.system.gamma().col(0));
    }
    CHECK((r.base.system.gamma().array() == 0.0).all());
}

TEST_CASE("each kind of bad input has its own code") {
    using K = ConfigError::Kind;
    auto doc = minimal();
    doc["classes"][1]["gamma"] = {0.4, 0.5, 0.3};
    CHECK(failure(doc) == std::pair{K::Invariant, std::string("gamma_ordering")});

    doc = minimal();
    doc["classes"] = json::array();
    CHECK(failure(doc) == std::pair{K::Invariant, std::string("classes_empty")});

    doc = minimal();
    doc["colour"] = "blue";
    CHECK(failure(doc) == std::pair{K::Schema, std::string("unknown_key")});

    doc = minimal();
    doc["classes"][0]["weight"] = 1;
    CHECK(failure(doc) == std::pair{K::Schema, std::string("unknown_key")});

    doc = minimal();
    doc.erase("duration_mean_s");
    CHECK(failure(doc) == std::pair{K::Schema, std::string("missing_key")});

    doc = minimal();
    doc["capacity_kbps"] = "lots";
    CHECK(failure(doc) == std::pair{K::Schema, std::string("wrong_type")});

    doc = minimal();
    doc["arrivals"]["handover"]["mode"] = "sideways";
    CHECK(failure(doc) == std::pair{K::Schema, std::string("bad_enum")});

    doc = minimal();
    doc["arrivals"]["handover"] = {{"mode", "endogenous"}};
    CHECK(failure(doc) == std::pair{K::Schema, std::string("missing_key")});

    doc = minimal();
    doc["classes"][1]["name"] = "voice";
    CHECK(failure(doc) == std::pair{K::Invariant, std::string("class_name")});

    doc = minimal();
    doc["classes"][1]["name"] = "da ta";
    CHECK(failure(doc) == std::pair{K::Invariant, std::string("class_name")});

    doc = minimal();
    doc["mu_i"] = {{"phi", 0.5}, {"table", {1.0}}};
    CHECK(failure(doc) == std::pair{K::Schema, std::string("mu_i_choice")});

    doc = minimal();
    doc["mu_i"] = {{"phi", 1.5}};
    CHECK(failure(doc) == std::pair{K::Invariant, std::string("phi_range")});

    doc = minimal();
    doc["thresholds"] = {{"N", 5}, {"K", {4, 6, 7}}};
    CHECK(failure(doc) == std::pair{K::Invariant, std::string("threshold_ordering")});

    doc = minimal();
    doc["sim"] = {{"replications", 0}};
    CHECK(failure(doc) == std::pair{K::Invariant, std::string("replications_positive")});

    doc = minimal();
    doc["arrivals"]["new_rate_total"] = -2;
    CHECK(failure(doc) == std::pair{K::Invariant, std::string("rate_non_negative")});
}

TEST_CASE("missing file and malformed text") {
    try {
        (void)parse_config("/nonexistent/config.json");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.kind() == ConfigError::Kind::MissingFile);
    }
    try {
        (void)parse_config_text("{\"capacity_kbps\": ");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.kind() == ConfigError::Kind::Parse);
    }
}

TEST_CASE("defaults and optional sections") {
    auto sc = parse_config_json(minimal());
    CHECK(sc.base.sim.seed == 1);
    CHECK(sc.base.sim.replications == 10);
    CHECK(sc.base.sim.warmup_s == doctest::Approx(0.1 * sc.base.sim.horizon_s));

    auto doc = minimal();
    doc["sim"] = {{"seed", 99}, {"horizon_s", 500}};
    doc["thresholds"] = {{"N", 3}, {"K", {9, 7, 5}}};
    doc["mu_i"] = {{"table", {0.9, 0.9, 0.8, 0.8, 0.7, 0.7}}};
    sc = parse_config_json(doc);
    CHECK(sc.base.sim.seed == 99);
    CHECK(sc.base.sim.warmup_s == 50.0);
    CHECK(sc.thresholds->max_state == std::vector<int>{9, 7, 5});
    CHECK(sc.service_law.table->size() == 6);

    doc["mu_i"] = {{"table", {0.9}}};
    CHECK(failure(doc).second == "mu_i_table_length");
}

TEST_CASE("digest ignores key order and formatting") {
    const auto a = minimal();
    const auto text = R"({"duration_mean_s": 1.0,
        "arrivals": {"handover": {"rate": 1, "mode": "exogenous"}, "new_rate_total": 3},
        "classes": [
          {"mix_fraction": 0.5, "elastic": false, "gamma": [0,0,0], "requested_kbps": 32, "name": "voice"},
          {"elastic": true, "name": "data", "gamma": [0.5,0.4,0.3], "mix_fraction": 0.5, "requested_kbps": 100}
        ],
        "capacity_kbps": 400.0})";
    CHECK(config_digest(parse_config_json(a)) == config_digest(parse_config_text(text)));
    auto b = a;
    b["capacity_kbps"] = 401;
    CHECK(config_digest(parse_config_json(a)) != config_digest(parse_config_json(b)));
}

TEST_CASE("canonical form round-trips") {
    const auto sc = parse_config(test::config_path("table1.json"));
    const auto again = parse_config_json(to_json(sc));
    CHECK(config_digest(sc) == config_digest(again));
    CHECK(again.description == sc.description);
}

TEST_CASE("sha256 of known strings") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("new-rate copies keep the handover share") {
    const auto sc = parse_config_json(minimal());
    const auto doubled = with_new_rate(sc, 6.0);
    CHECK(doubled.base.new_rate_total == 6.0);
    CHECK(doubled.base.handover.rate == doctest::Approx(2.0));
    CHECK(with_new_rate(sc, 0.0).base.handover.rate == 0.0);
    const auto endo = parse_config(test::config_path("table1.json"));
    CHECK(with_new_rate(endo, 2.0).base.handover.rate == endo.base.handover.rate);
}
