// cacsim: run the admission-control evaluators from a JSON config.

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cac/config_io.hpp"
#include "cac/errors.hpp"
#include "cac/experiment.hpp"

namespace {

enum Exit : int {
    kOk = 0,
    kUsage = 1,
    kConfigError = 2,
    kNumericalFailure = 3,
    kValidationFailure = 4,
    kCapExceeded = 5,
};

struct Options {
    std::string config;
    std::string manifest;
    std::string out;
    std::string mode = "analytic";
    std::string rates;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::size_t state_cap = cac::kDefaultStateCap;
};

// Honors SOURCE_DATE_EPOCH.
std::string utc_timestamp() {
    std::time_t t = std::time(nullptr);
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) t = std::strtoll(epoch, nullptr, 10);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
    f << bytes;
    if (!f) throw std::runtime_error("write failed for '" + path.string() + "'");
}

cac::Scenario load(const Options& opt) {
    cac::Scenario scenario = cac::parse_config(opt.config);
    if (opt.seed_given) scenario.base.sim.seed = opt.seed;
    return scenario;
}

int emit(const cac::Scenario& scenario, cac::Mode mode, const std::vector<double>& rates,
         const Options& opt) {
    const auto result = cac::sweep(scenario, mode, rates, opt.state_cap);
    const std::string csv = cac::to_csv(result, scenario.base.system);
    if (opt.out.empty() || opt.out == "-") {
        std::cout << csv;
    } else {
        const auto manifest =
            cac::make_manifest(scenario, mode, rates, opt.state_cap, csv, utc_timestamp());
        write_file(opt.out, csv);
        write_file(opt.out + ".manifest.json", manifest.dump(2) + "\n");
    }
    if (result.has_errors()) {
        std::cerr << "error: one or more rows exceeded the oracle state cap ("
                  << opt.state_cap << ")\n";
        return kCapExceeded;
    }
    return kOk;
}

int run_point(cac::Mode mode, const Options& opt) {
    const auto scenario = load(opt);
    return emit(scenario, mode, {scenario.base.new_rate_total}, opt);
}

int run_sweep(const Options& opt) {
    if (!opt.manifest.empty()) {
        std::ifstream in(opt.manifest);
        if (!in) {
            throw cac::ConfigError(cac::ConfigError::Kind::MissingFile, "missing_file",
                                   "cannot open manifest '" + opt.manifest + "'");
        }
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw cac::ConfigError(cac::ConfigError::Kind::Parse, "json_syntax", e.what());
        }
        for (const char* key : {"config", "mode", "rates", "state_cap"}) {
            if (!doc.contains(key)) {
                throw cac::ConfigError(cac::ConfigError::Kind::Schema, "missing_key",
                                       std::string("manifest: missing key '") + key + "'");
            }
        }
        const auto scenario = cac::parse_config_json(doc.at("config"));
        const auto mode = cac::parse_mode(doc.at("mode").get<std::string>());
        if (!mode) {
            throw cac::ConfigError(cac::ConfigError::Kind::Schema, "bad_enum",
                                   "manifest: unknown mode");
        }
        Options replay = opt;
        replay.state_cap = doc.at("state_cap").get<std::size_t>();
        return emit(scenario, *mode, doc.at("rates").get<std::vector<double>>(), replay);
    }
    if (opt.config.empty()) throw CLI::ValidationError("--config", "sweep needs --config or --manifest");
    if (opt.rates.empty()) throw CLI::ValidationError("--rates", "sweep needs --rates");
    const auto mode = cac::parse_mode(opt.mode);
    if (!mode) throw CLI::ValidationError("--mode", "expected analytic, oracle or simulate");
    std::vector<double> rates;
    try {
        rates = cac::parse_rates(opt.rates);
    } catch (const std::invalid_argument& e) {
        throw CLI::ValidationError("--rates", e.what());
    }
    return emit(load(opt), *mode, rates, opt);
}

int run_validate(const Options& opt) {
    const auto scenario = load(opt);
    const auto report = cac::validate(scenario, opt.state_cap);
    const std::string text = report.to_text();
    std::cout << text;
    if (!opt.out.empty() && opt.out != "-") write_file(opt.out, text);
    return report.passed() ? kOk : kValidationFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Call admission control with multi-level bandwidth adaptation"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&opt](CLI::App* sub, bool config_required) {
        auto* c = sub->add_option("--config", opt.config, "JSON configuration file");
        if (config_required) c->required();
        sub->add_option("--out", opt.out, "Output path (stdout when omitted or '-')");
        sub->add_option_function<std::uint64_t>(
            "--seed",
            [&opt](const std::uint64_t& s) {
                opt.seed = s;
                opt.seed_given = true;
            },
            "Override sim.seed");
        sub->add_option("--state-cap", opt.state_cap, "Oracle state-space cap")
            ->check(CLI::PositiveNumber);
    };

    auto* analytic = app.add_subcommand("analytic", "One-dimensional chain at the config's rate");
    auto* oracle = app.add_subcommand("oracle", "Exact CTMC at the config's rate");
    auto* simulate = app.add_subcommand("simulate", "Discrete-event simulation at the config's rate");
    auto* sweep = app.add_subcommand("sweep", "Evaluate over a grid of new-call rates");
    auto* validate = app.add_subcommand("validate", "Cross-check all three evaluators");
    for (auto* sub : {analytic, oracle, simulate, validate}) add_common(sub, true);
    add_common(sweep, false);
    sweep->add_option("--mode", opt.mode, "analytic | oracle | simulate")
        ->check(CLI::IsMember({"analytic", "oracle", "simulate"}));
    sweep->add_option("--rates", opt.rates, "start:stop:step or comma list (calls/s)");
    sweep->add_option("--manifest", opt.manifest, "Replay a previous run from its manifest")
        ->excludes("--config")
        ->excludes("--rates")
        ->excludes("--mode");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    try {
        if (*analytic) return run_point(cac::Mode::Analytic, opt);
        if (*oracle) return run_point(cac::Mode::Oracle, opt);
        if (*simulate) return run_point(cac::Mode::Simulate, opt);
        if (*sweep) return run_sweep(opt);
        if (*validate) return run_validate(opt);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    } catch (const cac::ConfigError& e) {
        std::cerr << "config error [" << e.code() << "]: " << e.what() << '\n';
        return kConfigError;
    } catch (const cac::StateCapExceeded& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kCapExceeded;
    } catch (const cac::NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumericalFailure;
    } catch (const cac::NoSampleError& e) {
        std::cerr << "config error [times_positive]: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}
