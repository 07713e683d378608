#include "cac/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "cac/analytic_chain.hpp"
#include "cac/config_io.hpp"
#include "cac/errors.hpp"
#include "cac/rng.hpp"
#include "cac/simulator.hpp"

namespace cac {

namespace {

double parse_double(std::string_view text) {
    double value = 0.0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || !std::isfinite(value)) {
        throw std::invalid_argument("not a number: '" + std::string(text) + "'");
    }
    return value;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

bool exact_regime(const Scenario& scenario) {
    const auto& base = scenario.base;
    return base.system.num_classes() == 1 && (base.system.gamma().array() == 0.0).all() &&
           base.handover.mode == HandoverMode::Exogenous;
}

}  // namespace

std::string_view to_string(Mode mode) {
    switch (mode) {
        case Mode::Analytic: return "analytic";
        case Mode::Oracle: return "oracle";
        case Mode::Simulate: return "simulate";
    }
    return "unknown";
}

std::optional<Mode> parse_mode(std::string_view text) {
    if (text == "analytic") return Mode::Analytic;
    if (text == "oracle") return Mode::Oracle;
    if (text == "simulate") return Mode::Simulate;
    return std::nullopt;
}

std::vector<double> parse_rates(std::string_view text) {
    std::vector<double> rates;
    if (text.find(':') != std::string_view::npos) {
        std::vector<double> parts;
        std::size_t start = 0;
        while (true) {
            const auto colon = text.find(':', start);
            parts.push_back(parse_double(trim(text.substr(start, colon - start))));
            if (colon == std::string_view::npos) break;
            start = colon + 1;
        }
        if (parts.size() != 3) throw std::invalid_argument("range must be start:stop:step");
        const double lo = parts[0], hi = parts[1], step = parts[2];
        if (!(step > 0.0) || hi < lo) throw std::invalid_argument("range needs step > 0, stop >= start");
        const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
        for (long k = 0; k <= count; ++k) {
            const double r = lo + static_cast<double>(k) * step;
            rates.push_back(std::round(r * 1e12) / 1e12);
        }
    } else {
        std::size_t start = 0;
        while (start <= text.size()) {
            const auto comma = text.find(',', start);
            const std::string item = trim(text.substr(start, comma - start));
            if (item.empty()) throw std::invalid_argument("empty rate in list");
            rates.push_back(parse_double(item));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
    }
    if (rates.empty()) throw std::invalid_argument("no rates given");
    if (std::any_of(rates.begin(), rates.end(), [](double r) { return r < 0.0; })) {
        throw std::invalid_argument("rates must be non-negative");
    }
    return rates;
}

Metrics evaluate(const Scenario& scenario, Mode mode, std::size_t state_cap) {
    switch (mode) {
        case Mode::Analytic: return analytic_metrics(scenario);
        case Mode::Oracle: return oracle_metrics(scenario.base, state_cap);
        case Mode::Simulate: return run(scenario.base);
    }
    throw ContractViolation("unknown mode");
}

bool SweepResult::has_errors() const {
    return std::any_of(rows.begin(), rows.end(), [](const SweepRow& r) { return !r.error.empty(); });
}

SweepResult sweep(const Scenario& scenario, Mode mode, std::vector<double> rates,
                  std::size_t state_cap) {
    std::sort(rates.begin(), rates.end());
    SweepResult result{mode, {}};
    for (double rate : rates) {
        SweepRow row{rate, std::nullopt, {}};
        try {
            row.metrics = evaluate(with_new_rate(scenario, rate), mode, state_cap);
        } catch (const StateCapExceeded&) {
            row.error = "cap_exceeded";
        }
        result.rows.push_back(std::move(row));
    }
    return result;
}

std::vector<std::string> csv_header(const SystemConfig& system) {
    std::vector<std::string> cols{"lambda_total", "p_drop"};
    for (const auto& c : system.classes()) cols.push_back("p_block_" + c.name);
    cols.emplace_back("p_forced");
    cols.emplace_back("utilization");
    for (const auto& c : system.classes()) cols.push_back("alloc_" + c.name);
    for (int p = 0; p <= system.max_priority(); ++p) cols.push_back("releasable_p" + std::to_string(p));
    return cols;
}

std::string format_number(double value) {
    if (value == 0.0) return "0";  // folds -0
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
    return std::string(buf, ptr);
}

std::string to_csv(const SweepResult& result, const SystemConfig& system) {
    const auto header = csv_header(system);
    std::string out;
    for (std::size_t k = 0; k < header.size(); ++k) {
        if (k) out += ',';
        out += header[k];
    }
    out += '\n';
    for (const auto& row : result.rows) {
        out += format_number(row.lambda_total);
        if (!row.metrics) {
            for (std::size_t k = 1; k < header.size(); ++k) out += ",error:" + row.error;
            out += '\n';
            continue;
        }
        const Metrics& m = *row.metrics;
        // Quantities with no observations are written as 0.
        auto cell = [&out](const Estimate& e) {
            out += ',';
            out += format_number(e.has_sample() ? e.mean : 0.0);
        };
        cell(m.p_drop);
        for (const auto& e : m.p_block) cell(e);
        cell(m.p_forced);
        cell(m.utilization);
        for (const auto& e : m.alloc) {
            out += ',';
            out += format_number(e.mean);
        }
        for (const auto& e : m.releasable) cell(e);
        out += '\n';
    }
    return out;
}

nlohmann::json make_manifest(const Scenario& scenario, Mode mode, const std::vector<double>& rates,
                             std::size_t state_cap, const std::string& csv,
                             const std::string& timestamp) {
    std::string mu_law;
    if (scenario.service_law.table) {
        mu_law = "table";
    } else {
        const double phi = scenario.service_law.phi.value_or(rigid_fraction(scenario.base.system));
        mu_law = "phi-blend(phi=" + format_number(phi) + ")";
    }
    std::vector<double> sorted = rates;
    std::sort(sorted.begin(), sorted.end());
    return nlohmann::json{
        {"tool", kToolName},
        {"version", kToolVersion},
        {"mode", std::string(to_string(mode))},
        {"seed", scenario.base.sim.seed},
        {"timestamp", timestamp},
        {"config_digest", config_digest(scenario)},
        {"csv_sha256", sha256_hex(csv)},
        {"rates", sorted},
        {"state_cap", state_cap},
        {"rng", kRngAlgorithm},
        {"variants",
         {{"mu_i_law", mu_law},
          {"handover_mode",
           scenario.base.handover.mode == HandoverMode::Exogenous ? "exogenous" : "endogenous"},
          {"handover_sweep_rule", "exogenous rate scaled with new-call rate"},
          {"threshold_source", scenario.thresholds ? "override" : "derived"}}},
        {"config", to_json(scenario)}};
}

ValidationReport validate(const Scenario& scenario, std::size_t state_cap) {
    ValidationReport report;
    report.exact_regime = exact_regime(scenario);
    report.probability_budget = report.exact_regime ? 1e-9 : 0.1;
    report.allocation_budget = report.exact_regime ? 1e-9 : 0.1;

    const Metrics oracle = oracle_metrics(scenario.base, state_cap);
    const Metrics analytic = analytic_metrics(scenario);
    const Metrics sim = run(scenario.base);

    auto compare = [&](std::string name, const Estimate& a, const Estimate& o, const Estimate& s,
                       bool relative) {
        ValidationLine line{std::move(name), a.mean, o.mean, s.mean, s.std_error};
        if (s.samples >= 2) {
            line.sim_checked = true;
            line.sim_ok = std::abs(s.mean - o.mean) <= 3.0 * s.std_error + 1e-9;
        }
        const double gap = std::abs(a.mean - o.mean);
        line.analytic_ok = relative
                               ? gap <= report.allocation_budget * std::max(std::abs(o.mean), 1e-12)
                               : gap <= report.probability_budget;
        report.sim_ok = report.sim_ok && line.sim_ok;
        report.analytic_ok = report.analytic_ok && line.analytic_ok;
        report.lines.push_back(line);
    };

    const auto& sys = scenario.base.system;
    if (sim.p_drop.has_sample()) compare("p_drop", analytic.p_drop, oracle.p_drop, sim.p_drop, false);
    for (std::size_t m = 0; m < sys.num_classes(); ++m) {
        const auto& name = sys.spec(m).name;
        if (sim.p_block[m].has_sample()) {
            compare("p_block_" + name, analytic.p_block[m], oracle.p_block[m], sim.p_block[m], false);
        }
    }
    compare("utilization", analytic.utilization, oracle.utilization, sim.utilization, false);
    for (std::size_t m = 0; m < sys.num_classes(); ++m) {
        if (sim.alloc[m].has_sample()) {
            compare("alloc_" + sys.spec(m).name, analytic.alloc[m], oracle.alloc[m], sim.alloc[m],
                    true);
        }
    }
    return report;
}

std::string ValidationReport::to_text() const {
    std::ostringstream os;
    os << "metric                 analytic        oracle          simulated       sim_se          "
          "sim-vs-oracle  analytic-vs-oracle\n";
    char buf[256];
    for (const auto& l : lines) {
        std::snprintf(buf, sizeof buf, "%-22s %-15.9g %-15.9g %-15.9g %-15.3g %-14s %s\n",
                      l.metric.c_str(), l.analytic, l.oracle, l.simulated, l.sim_std_error,
                      !l.sim_checked ? "n/a" : (l.sim_ok ? "ok" : "FAIL(>3se)"),
                      l.analytic_ok ? "ok" : "over-budget");
        os << buf;
    }
    os << "approximation budget (analytic vs oracle): "
       << (exact_regime ? "exact regime, " : "") << "probabilities +/-"
       << format_number(probability_budget) << " absolute, allocations +/-"
       << format_number(allocation_budget) << " relative\n";
    os << "simulator vs oracle: " << (sim_ok ? "PASS" : "FAIL") << " (3 standard errors)\n";
    os << "analytic vs oracle: " << (analytic_ok ? "PASS" : "FAIL") << '\n';
    return os.str();
}

}  // namespace cac
