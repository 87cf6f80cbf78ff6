#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "apsolve/cli.hpp"
#include "apsolve/config.hpp"
#include "apsolve/errors.hpp"

using namespace apsolve;
namespace fs = std::filesystem;

namespace {

std::string error_key(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.key();
    }
    return "<none>";
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("apsolve_unit_" + name);
    fs::remove_all(d);
    return d;
}

std::string first_line(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

}  // namespace

TEST_CASE("parse a typical config") {
    const RunConfig c = parse_config(
        "# comment\n"
        "preset = paper-1d\n"
        "eps = 1e-3   # trailing\n"
        "\n"
        "T=0.5\n"
        "dx=0.1\n"
        "lambda=0.01\n"
        "truncation=shrinking\n"
        "snapshots=0,0.25,0.5\n");
    CHECK(c.preset == "paper-1d");
    CHECK(*c.eps == 1e-3);
    CHECK(c.T == 0.5);
    CHECK(c.dt == doctest::Approx(1e-3));
    CHECK(c.truncation == TruncationKind::shrinking);
    CHECK(c.snapshots == std::vector<double>{0.0, 0.25, 0.5});
    CHECK(c.has("eps"));
    CHECK_FALSE(c.has("tol_J"));
}

TEST_CASE("config errors name the offending key") {
    CHECK(error_key("") == "preset");
    CHECK(error_key("preset=paper-1d\nfoo=1\n") == "foo");
    CHECK(error_key("preset=paper-1d\neps=1\neps=2\n") == "eps");
    CHECK(error_key("preset=paper-1d\neps=abc\n") == "eps");
    CHECK(error_key("preset=paper-1d\neps=-1\n") == "eps");
    CHECK(error_key("preset=paper-1d\njunk\n") == "line 2");
    CHECK(error_key("preset=nowhere\n") == "preset");
    CHECK(error_key("preset=paper-1d\ndt=0\n") == "dt");
    CHECK(error_key("preset=paper-1d\neps=0.1\n") == "<none>");
}

TEST_CASE("cfl_mode resolves the step") {
    const RunConfig c = parse_config("preset=paper-1d\ncfl_mode=limit\ndx=0.05\n");
    REQUIRE(c.cfl.has_value());
    CHECK(c.cfl->satisfied);
    CHECK(c.dt == c.cfl->dt);
    CHECK(c.dt < 5e-4);
    CHECK(error_key("preset=paper-1d\ncfl_mode=eps_fixed\ndx=0.05\n") != "<none>");
}

TEST_CASE("digest is stable and sensitive") {
    const RunConfig a = parse_config("preset=paper-1d\neps=0.01\n");
    const RunConfig b = parse_config("eps = 0.01\n# same thing\npreset = paper-1d\n");
    const RunConfig c = parse_config("preset=paper-1d\neps=0.02\n");
    CHECK(config_digest(a) == config_digest(b));
    CHECK(config_digest(a) != config_digest(c));
    CHECK(config_digest(a).size() == 16);
    CHECK(canonical_text(a) == canonical_text(b));
    for (const auto& key : config_keys())
        if (key != "out_dir") CHECK(canonical_text(a).find(key + "=") != std::string::npos);
    CHECK(canonical_text(a).find("out_dir") == std::string::npos);
    CHECK(config_digest(a) == config_digest(parse_config("preset=paper-1d\neps=0.01\nout_dir=elsewhere\n")));
}

TEST_CASE("run-limit writes its outputs and reruns identically") {
    RunConfig cfg = parse_config("preset=analytic-1d\nT=0.05\nsnapshots=0,0.05\n");
    std::string runs[2];
    for (int k = 0; k < 2; ++k) {
        const fs::path dir = fresh_dir("limit" + std::to_string(k));
        cfg.out_dir = dir.string();
        const RunManifest m = dispatch("run-limit", cfg, "apsolve run-limit test.cfg");
        CHECK(m.exit_code == exit_ok);
        REQUIRE(fs::exists(dir / "manifest.json"));
        CHECK(first_line(dir / "jtrace.csv") == "t,J,argmin_x");
        CHECK(first_line(dir / "jumps.csv") == "t,size,argmin_x_before,argmin_x_after");
        CHECK(first_line(dir / "snapshot_0.csv") == "x,u");
        CHECK(fs::exists(dir / "snapshot_0.05.csv"));

        const auto j = nlohmann::json::parse(slurp(dir / "manifest.json"));
        CHECK(j["command"] == "run-limit");
        CHECK(j["config_digest"] == config_digest(cfg));
        CHECK(j["exit_code"] == 0);
        runs[k] = slurp(dir / "jtrace.csv") + slurp(dir / "snapshot_0.05.csv");
        fs::remove_all(dir);
    }
    CHECK(runs[0] == runs[1]);
}

TEST_CASE("run-eps trace and failures") {
    RunConfig cfg = parse_config("preset=paper-1d\neps=0.01\nT=0.01\n");
    const fs::path dir = fresh_dir("eps");
    cfg.out_dir = dir.string();
    const RunManifest m = dispatch("run-eps", cfg, "apsolve run-eps");
    CHECK(m.exit_code == exit_ok);
    CHECK(first_line(dir / "jtrace.csv") == "t,I,argmin_x");

    // dt far beyond the stability bound
    RunConfig bad = parse_config("preset=paper-1d\neps=1\ndt=0.1\ndx=0.05\nT=0.2\n");
    bad.out_dir = (dir / "bad").string();
    const RunManifest f = dispatch("run-eps", bad, "apsolve run-eps");
    CHECK(f.exit_code == exit_run_failure);
    REQUIRE(f.error.has_value());
    CHECK(f.error->step == 1);
    fs::remove_all(dir);
}

TEST_CASE("config failure manifest") {
    const RunManifest m = config_failure("run-eps", "apsolve run-eps x.cfg", "eps", "expected a number");
    CHECK(m.exit_code == exit_config_error);
    const auto j = nlohmann::json::parse(m.to_json());
    CHECK(j["error"]["key"] == "eps");
    CHECK(j["error"]["type"] == "config");
    CHECK(format_number(0.1) == "0.10000000000000001");
}
