#pragma once

#include <string>
#include <vector>

#include "cac/config_io.hpp"
#include "cac/core_model.hpp"
#include "cac/scenario.hpp"

namespace cac::test {

inline std::string config_path(const std::string& name) {
    return std::string(CAC_CONFIG_DIR) + "/" + name;
}

inline ClassSpec make_class(std::string name, double kbps, std::vector<double> gamma, bool elastic,
                            double mix) {
    return ClassSpec{std::move(name), kbps, std::move(gamma), elastic, mix};
}

// voice / web / video / background with the shipped degradation rows.
inline SystemConfig table1_system() {
    return SystemConfig::make(
        6000.0, {make_class("voice", 32, {0, 0, 0, 0, 0}, false, 1.0 / 3),
                 make_class("web", 120, {0.6, 0.55, 0.5, 0.45, 0.4}, true, 1.0 / 3),
                 make_class("video", 256, {0.7, 0.65, 0.6, 0.55, 0.5}, true, 1.0 / 9),
                 make_class("background", 60, {0.8, 0.75, 0.7, 0.65, 0.6}, true, 2.0 / 9)});
}

// One rigid class of unit size: an Erlang loss system with `servers` circuits.
inline Scenario erlang_scenario(int servers, double offered_load) {
    Scenario s{SimConfig{SystemConfig::make(static_cast<double>(servers),
                                            {make_class("unit", 1, {0, 0}, false, 1.0)})},
               std::nullopt, {}, {}};
    s.base.new_rate_total = offered_load;
    s.base.duration_mean_s = 1.0;
    return s;
}

inline SimConfig mixed_config(double capacity = 400.0) {
    SimConfig c{SystemConfig::make(capacity,
                                   {make_class("voice", 32, {0, 0, 0}, false, 0.5),
                                    make_class("data", 100, {0.5, 0.4, 0.3}, true, 0.5)})};
    c.new_rate_total = 3.0;
    c.handover = HandoverModel{HandoverMode::Exogenous, 1.0, std::nullopt};
    c.duration_mean_s = 1.0;
    return c;
}

}  // namespace cac::test
