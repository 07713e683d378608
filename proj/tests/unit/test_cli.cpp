#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "fixtures.hpp"

namespace fs = std::filesystem;

namespace {

std::string g_cli;

struct Result {
    int status = -1;
    std::string out;
};

Result run(const std::string& args) {
    const std::string cmd = "'" + g_cli + "' " + args + " 2>/dev/null";
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    std::size_t n = 0;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    const int raw = pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string cfg(const char* name) { return "--config '" + cac::test::config_path(name) + "'"; }

fs::path scratch() {
    auto dir = fs::temp_directory_path() / ("cacsim_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("single-point commands print one csv row") {
    for (const char* cmd : {"analytic", "oracle", "simulate"}) {
        CAPTURE(cmd);
        const auto r = run(std::string(cmd) + " " + cfg("desk/erlang5.json"));
        CHECK(r.status == 0);
        CHECK(r.out.rfind("lambda_total,p_drop,p_block_unit,", 0) == 0);
        CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 2);
    }
}

TEST_CASE("sweep writes csv and manifest, and the manifest replays it") {
    const auto dir = scratch();
    const auto out = dir / "sweep.csv";
    auto r = run("sweep " + cfg("desk/mixed_endogenous.json") +
                 " --mode simulate --rates 1,2 --seed 5 --out '" + out.string() + "'");
    REQUIRE(r.status == 0);
    const auto csv = slurp(out);
    const auto manifest = nlohmann::json::parse(slurp(out.string() + ".manifest.json"));
    CHECK(manifest["seed"] == 5);
    CHECK(manifest["mode"] == "simulate");
    CHECK(manifest["csv_sha256"] == cac::sha256_hex(csv));

    const auto replay = dir / "replay.csv";
    r = run("sweep --manifest '" + out.string() + ".manifest.json' --out '" + replay.string() + "'");
    REQUIRE(r.status == 0);
    CHECK(slurp(replay) == csv);
    fs::remove_all(dir);
}

TEST_CASE("seed override changes simulated output") {
    const auto a = run("simulate " + cfg("desk/mixed_exogenous.json") + " --seed 1");
    const auto b = run("simulate " + cfg("desk/mixed_exogenous.json") + " --seed 2");
    CHECK(a.status == 0);
    CHECK(a.out != b.out);
}

TEST_CASE("exit statuses") {
    CHECK(run("analytic --config /nonexistent.json").status == 2);
    CHECK(run("oracle " + cfg("desk/mixed_exogenous.json") + " --state-cap 10").status == 5);
    CHECK(run("sweep " + cfg("desk/mixed_exogenous.json") +
              " --mode oracle --rates 1,2 --state-cap 10")
              .status == 5);
    CHECK(run("validate " + cfg("desk/erlang5.json")).status == 0);
    CHECK(run("validate " + cfg("desk/rigid_two_class.json")).status == 4);
    CHECK(run("sweep " + cfg("desk/erlang5.json") + " --mode exact --rates 1").status == 1);
    CHECK(run("sweep " + cfg("desk/erlang5.json") + " --rates 1:2").status == 1);
    CHECK(run("frobnicate").status == 1);
    CHECK(run("").status == 1);
}

TEST_CASE("cap-exceeded rows are marked in the csv") {
    const auto r = run("sweep " + cfg("desk/mixed_exogenous.json") +
                       " --mode oracle --rates 0.1,3 --state-cap 10");
    CHECK(r.out.find("error:cap_exceeded") != std::string::npos);
}

int main(int argc, char** argv) {
    std::vector<char*> rest;
    for (int k = 0; k < argc; ++k) {
        const std::string a = argv[k];
        if (a.rfind("--cli=", 0) == 0) {
            g_cli = a.substr(6);
        } else {
            rest.push_back(argv[k]);
        }
    }
    if (g_cli.empty()) {
        std::fprintf(stderr, "usage: test_cli --cli=<path to cacsim>\n");
        return 2;
    }
    doctest::Context ctx(static_cast<int>(rest.size()), rest.data());
    return ctx.run();
}
