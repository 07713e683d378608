#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cac/ctmc_oracle.hpp"
#include "cac/metrics.hpp"
#include "cac/scenario.hpp"

namespace cac {

inline constexpr const char* kToolName = "cacsim";
inline constexpr const char* kToolVersion = "0.1.0";

enum class Mode { Analytic, Oracle, Simulate };

[[nodiscard]] std::string_view to_string(Mode mode);
[[nodiscard]] std::optional<Mode> parse_mode(std::string_view text);

/// "start:stop:step" (inclusive, tolerant of float drift) or "a,b,c".
/// Throws std::invalid_argument on malformed input or negative rates.
[[nodiscard]] std::vector<double> parse_rates(std::string_view text);

/// Metrics for the scenario as given, using one evaluator.
[[nodiscard]] Metrics evaluate(const Scenario& scenario, Mode mode,
                               std::size_t state_cap = kDefaultStateCap);

struct SweepRow {
    double lambda_total = 0.0;
    std::optional<Metrics> metrics;
    /// Set when the row could not be computed (e.g. "cap_exceeded").
    std::string error;
};

struct SweepResult {
    Mode mode = Mode::Analytic;
    std::vector<SweepRow> rows;

    [[nodiscard]] bool has_errors() const;
};

/// One row per rate, ascending. Each row evaluates with_new_rate(scenario, rate).
/// Oracle rows over the state cap are recorded as error rows, not thrown.
[[nodiscard]] SweepResult sweep(const Scenario& scenario, Mode mode, std::vector<double> rates,
                                std::size_t state_cap = kDefaultStateCap);

[[nodiscard]] std::vector<std::string> csv_header(const SystemConfig& system);

/// Shortest round-trip decimal form, '.' separator, no locale.
[[nodiscard]] std::string format_number(double value);

[[nodiscard]] std::string to_csv(const SweepResult& result, const SystemConfig& system);

/// Side-file describing how a CSV was produced; enough to replay it.
[[nodiscard]] nlohmann::json make_manifest(const Scenario& scenario, Mode mode,
                                           const std::vector<double>& rates,
                                           std::size_t state_cap, const std::string& csv,
                                           const std::string& timestamp);

struct ValidationLine {
    std::string metric;
    double analytic = 0.0;
    double oracle = 0.0;
    double simulated = 0.0;
    double sim_std_error = 0.0;
    bool sim_checked = false;
    bool sim_ok = true;
    bool analytic_ok = true;
};

struct ValidationReport {
    std::vector<ValidationLine> lines;
    bool exact_regime = false;
    double probability_budget = 0.0;
    double allocation_budget = 0.0;
    bool sim_ok = true;
    bool analytic_ok = true;

    [[nodiscard]] bool passed() const { return sim_ok && analytic_ok; }
    [[nodiscard]] std::string to_text() const;
};

/// Run all three evaluators on one scenario and compare them against the
/// oracle. The simulator must sit within 3 standard errors; the analytic
/// chain within the printed approximation budget (near-exact when the
/// scenario collapses to a single rigid class with exogenous handovers).
[[nodiscard]] ValidationReport validate(const Scenario& scenario,
                                        std::size_t state_cap = kDefaultStateCap);

}  // namespace cac
