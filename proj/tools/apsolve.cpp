// apsolve: run the eps scheme, the limit scheme, or one of the studies from a config file.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "apsolve/cli.hpp"
#include "apsolve/errors.hpp"
#include "apsolve/model.hpp"

namespace {

std::string read_all(const std::string& path) {
    if (path == "-") {
        std::ostringstream ss;
        ss << std::cin.rdbuf();
        return ss.str();
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw apsolve::ConfigError("config", "cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Asymptotic-preserving solver for selection-mutation models in Hopf-Cole form"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    int threads = 0;
    const std::map<std::string, std::string> blurbs{
        {"run-eps", "one run of the eps scheme"},
        {"run-limit", "one run of the limit scheme, with J jumps"},
        {"ap-study", "eps sweep against the limit scheme"},
        {"convergence-study", "dt sweep of the limit scheme against a fine run"},
        {"ua-study", "eps x dx sweep against fine-dx references"},
        {"demo-2d", "2D runs of both schemes"},
        {"compare-truncation", "shrinking vs extrapolated lattices"},
    };
    for (const auto& name : apsolve::command_names()) {
        auto* sub = app.add_subcommand(name, blurbs.count(name) ? blurbs.at(name) : "");
        sub->add_option("config", config_path, "key=value config file ('-' for stdin)")->required();
        sub->add_option("--out", out_dir, "output directory (overrides out_dir)");
        sub->add_option("--threads", threads, "worker cap for studies (default: APSOLVE_THREADS or all cores)")
            ->check(CLI::PositiveNumber);
    }
    auto* list = app.add_subcommand("presets", "list the built-in models");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : apsolve::exit_config_error;
    }

    if (list->parsed()) {
        for (const auto& p : apsolve::preset_names()) std::cout << p << '\n';
        return 0;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    std::string command_line;
    for (int k = 0; k < argc; ++k) command_line += (k ? " " : "") + std::string(argv[k]);

    apsolve::RunConfig cfg;
    try {
        cfg = apsolve::parse_config(read_all(config_path));
        if (!out_dir.empty()) cfg.out_dir = out_dir;
    } catch (const apsolve::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        if (!out_dir.empty()) {
            try {
                apsolve::write_manifest(apsolve::config_failure(command, command_line, e.key(), e.what()), out_dir);
            } catch (const std::exception&) {
            }
        }
        return apsolve::exit_config_error;
    }

    const apsolve::RunManifest m = apsolve::dispatch(command, cfg, command_line, threads);
    for (const auto& [name, pass] : m.checks) std::cout << (pass ? "PASS " : "FAIL ") << name << '\n';
    if (m.error) std::cerr << m.error->type << " error: " << m.error->message << '\n';
    std::cout << "wrote " << m.files.size() << " files to " << cfg.out_dir << '\n';
    return m.exit_code;
}
