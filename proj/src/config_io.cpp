#include "cac/config_io.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <openssl/sha.h>

#include "cac/analytic_chain.hpp"
#include "cac/errors.hpp"
#include "cac/simulator.hpp"

namespace cac {

namespace {

using nlohmann::json;

ConfigError schema_error(std::string code, const std::string& message) {
    return ConfigError(ConfigError::Kind::Schema, std::move(code), message);
}

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> required,
                std::initializer_list<const char*> optional) {
    if (!obj.is_object()) throw schema_error("wrong_type", where + " must be an object");
    for (const char* key : required) {
        if (!obj.contains(key)) {
            throw schema_error("missing_key", where + ": missing required key '" + key + "'");
        }
    }
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        const auto& k = it.key();
        auto known = [&](std::initializer_list<const char*> list) {
            return std::any_of(list.begin(), list.end(), [&](const char* s) { return k == s; });
        };
        if (!known(required) && !known(optional)) {
            throw schema_error("unknown_key", where + ": unknown key '" + k + "'");
        }
    }
}

double number(const json& obj, const char* key, const std::string& where) {
    const json& v = obj.at(key);
    if (!v.is_number()) {
        throw schema_error("wrong_type", where + "." + key + " must be a number");
    }
    return v.get<double>();
}

std::int64_t integer(const json& obj, const char* key, const std::string& where) {
    const json& v = obj.at(key);
    if (!v.is_number_integer()) {
        throw schema_error("wrong_type", where + "." + key + " must be an integer");
    }
    return v.get<std::int64_t>();
}

std::vector<double> number_array(const json& obj, const char* key, const std::string& where) {
    const json& v = obj.at(key);
    if (!v.is_array()) throw schema_error("wrong_type", where + "." + key + " must be an array");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) {
            throw schema_error("wrong_type", where + "." + key + " must contain only numbers");
        }
        out.push_back(x.get<double>());
    }
    return out;
}

bool valid_name(const std::string& name) {
    return !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
               c == '_' || c == '-';
    });
}

ClassSpec parse_class(const json& obj, std::size_t position) {
    const std::string where = "classes[" + std::to_string(position) + "]";
    check_keys(obj, where, {"name", "requested_kbps", "gamma", "elastic", "mix_fraction"}, {});
    ClassSpec spec;
    if (!obj.at("name").is_string()) throw schema_error("wrong_type", where + ".name must be a string");
    spec.name = obj.at("name").get<std::string>();
    if (!valid_name(spec.name)) {
        throw ConfigError(ConfigError::Kind::Invariant, "class_name",
                          where + ".name must be non-empty and use only [A-Za-z0-9_-]");
    }
    spec.requested_kbps = number(obj, "requested_kbps", where);
    spec.gamma = number_array(obj, "gamma", where);
    if (!obj.at("elastic").is_boolean()) {
        throw schema_error("wrong_type", where + ".elastic must be a boolean");
    }
    spec.elastic = obj.at("elastic").get<bool>();
    spec.mix_fraction = number(obj, "mix_fraction", where);
    return spec;
}

HandoverModel parse_handover(const json& obj) {
    const std::string where = "arrivals.handover";
    check_keys(obj, where, {"mode"}, {"rate", "dwell_mean_s"});
    HandoverModel ho;
    const auto& mode = obj.at("mode");
    if (mode == "exogenous") {
        ho.mode = HandoverMode::Exogenous;
    } else if (mode == "endogenous") {
        ho.mode = HandoverMode::Endogenous;
        if (!obj.contains("dwell_mean_s")) {
            throw schema_error("missing_key", where + ": endogenous mode needs 'dwell_mean_s'");
        }
    } else {
        throw schema_error("bad_enum", where + ".mode must be \"exogenous\" or \"endogenous\"");
    }
    if (obj.contains("rate")) ho.rate = number(obj, "rate", where);
    if (obj.contains("dwell_mean_s")) ho.dwell_mean_s = number(obj, "dwell_mean_s", where);
    return ho;
}

}  // namespace

Scenario parse_config_json(const json& doc) {
    check_keys(doc, "config", {"capacity_kbps", "classes", "arrivals", "duration_mean_s"},
               {"thresholds", "mu_i", "sim", "description"});
    if (!doc.at("classes").is_array()) throw schema_error("wrong_type", "classes must be an array");

    std::vector<ClassSpec> classes;
    for (std::size_t k = 0; k < doc.at("classes").size(); ++k) {
        classes.push_back(parse_class(doc.at("classes")[k], k));
    }
    for (std::size_t a = 0; a < classes.size(); ++a) {
        for (std::size_t b = a + 1; b < classes.size(); ++b) {
            if (classes[a].name == classes[b].name) {
                throw ConfigError(ConfigError::Kind::Invariant, "class_name",
                                  "class names must be unique ('" + classes[a].name + "')");
            }
        }
    }

    Scenario scenario{SimConfig{SystemConfig::make(number(doc, "capacity_kbps", "config"),
                                                   std::move(classes))},
                      std::nullopt, {}, {}};
    auto& base = scenario.base;

    const json& arrivals = doc.at("arrivals");
    check_keys(arrivals, "arrivals", {"new_rate_total", "handover"}, {});
    base.new_rate_total = number(arrivals, "new_rate_total", "arrivals");
    base.handover = parse_handover(arrivals.at("handover"));
    base.duration_mean_s = number(doc, "duration_mean_s", "config");

    if (doc.contains("description")) {
        if (!doc.at("description").is_string()) {
            throw schema_error("wrong_type", "description must be a string");
        }
        scenario.description = doc.at("description").get<std::string>();
    }

    if (doc.contains("thresholds")) {
        const json& th = doc.at("thresholds");
        check_keys(th, "thresholds", {"N", "K"}, {});
        ThresholdSet set;
        set.hard_qos = static_cast<int>(integer(th, "N", "thresholds"));
        if (!th.at("K").is_array()) throw schema_error("wrong_type", "thresholds.K must be an array");
        for (const auto& k : th.at("K")) {
            if (!k.is_number_integer()) {
                throw schema_error("wrong_type", "thresholds.K must contain integers");
            }
            set.max_state.push_back(k.get<int>());
        }
        validate_thresholds(set, base.system.num_classes());
        scenario.thresholds = set;
    }

    if (doc.contains("mu_i")) {
        const json& law = doc.at("mu_i");
        check_keys(law, "mu_i", {}, {"phi", "table"});
        if (law.contains("phi") == law.contains("table")) {
            throw schema_error("mu_i_choice", "mu_i must hold exactly one of 'phi' or 'table'");
        }
        if (law.contains("phi")) {
            const double phi = number(law, "phi", "mu_i");
            if (!(phi >= 0.0 && phi <= 1.0)) {
                throw ConfigError(ConfigError::Kind::Invariant, "phi_range",
                                  "mu_i.phi must lie in [0,1]");
            }
            scenario.service_law.phi = phi;
        } else {
            scenario.service_law.table = number_array(law, "table", "mu_i");
        }
    }

    if (doc.contains("sim")) {
        const json& sim = doc.at("sim");
        check_keys(sim, "sim", {}, {"seed", "replications", "warmup_s", "horizon_s"});
        if (sim.contains("seed")) {
            const auto& s = sim.at("seed");
            if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0)) {
                throw schema_error("wrong_type", "sim.seed must be a non-negative integer");
            }
            base.sim.seed = s.get<std::uint64_t>();
        }
        if (sim.contains("replications")) {
            const auto r = integer(sim, "replications", "sim");
            if (r < 1) {
                throw ConfigError(ConfigError::Kind::Invariant, "replications_positive",
                                  "sim.replications must be >= 1");
            }
            base.sim.replications = static_cast<std::size_t>(r);
        }
        if (sim.contains("horizon_s")) base.sim.horizon_s = number(sim, "horizon_s", "sim");
        base.sim.warmup_s = sim.contains("warmup_s") ? number(sim, "warmup_s", "sim")
                                                     : 0.1 * base.sim.horizon_s;
    } else {
        base.sim.warmup_s = 0.1 * base.sim.horizon_s;
    }

    validate_sim_config(base);
    // Surfaces table-length and bound violations now rather than at solve time.
    if (scenario.service_law.table) (void)build_chain(scenario, 0.0);
    return scenario;
}

Scenario parse_config_text(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(ConfigError::Kind::Parse, "json_syntax", e.what());
    }
    return parse_config_json(doc);
}

Scenario parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(ConfigError::Kind::MissingFile, "missing_file",
                          "cannot open config file '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

json to_json(const Scenario& scenario) {
    const auto& base = scenario.base;
    json classes = json::array();
    for (const auto& c : base.system.classes()) {
        classes.push_back({{"name", c.name},
                           {"requested_kbps", c.requested_kbps},
                           {"gamma", c.gamma},
                           {"elastic", c.elastic},
                           {"mix_fraction", c.mix_fraction}});
    }
    json handover = {
        {"mode", base.handover.mode == HandoverMode::Exogenous ? "exogenous" : "endogenous"},
        {"rate", base.handover.rate}};
    if (base.handover.dwell_mean_s) handover["dwell_mean_s"] = *base.handover.dwell_mean_s;

    json doc = {{"capacity_kbps", base.system.capacity()},
                {"classes", classes},
                {"arrivals", {{"new_rate_total", base.new_rate_total}, {"handover", handover}}},
                {"duration_mean_s", base.duration_mean_s},
                {"sim",
                 {{"seed", base.sim.seed},
                  {"replications", base.sim.replications},
                  {"warmup_s", base.sim.warmup_s},
                  {"horizon_s", base.sim.horizon_s}}}};
    if (scenario.thresholds) {
        doc["thresholds"] = {{"N", scenario.thresholds->hard_qos},
                             {"K", scenario.thresholds->max_state}};
    }
    if (scenario.service_law.phi) doc["mu_i"] = {{"phi", *scenario.service_law.phi}};
    if (scenario.service_law.table) doc["mu_i"] = {{"table", *scenario.service_law.table}};
    if (!scenario.description.empty()) doc["description"] = scenario.description;
    return doc;
}

std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, SHA256_DIGEST_LENGTH> digest{};
    SHA256(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), digest.data());
    std::string hex;
    hex.reserve(2 * digest.size());
    char buf[3];
    for (unsigned char b : digest) {
        std::snprintf(buf, sizeof buf, "%02x", b);
        hex += buf;
    }
    return hex;
}

std::string config_digest(const Scenario& scenario) {
    return sha256_hex(to_json(scenario).dump());
}

Scenario with_new_rate(const Scenario& scenario, double new_rate_total) {
    Scenario out = scenario;
    auto& base = out.base;
    if (base.handover.mode == HandoverMode::Exogenous && scenario.base.new_rate_total > 0.0) {
        base.handover.rate *= new_rate_total / scenario.base.new_rate_total;
    }
    base.new_rate_total = new_rate_total;
    return out;
}

}  // namespace cac
