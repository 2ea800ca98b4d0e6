// Command-line front end: reads a JSON run configuration, executes the
// requested command, and reports where the artifacts landed.
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pricesig/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"two-type price-signalling market solver"};
    app.set_version_flag("--version", std::string("pricesig ") + pricesig::tool_version());

    std::string config_path;
    std::string out_override;
    int workers_flag = 0;
    double tol_cmp_flag = 0.0;
    app.add_option("--config", config_path, "JSON run configuration")->required();
    app.add_option("--out", out_override, "output directory (overrides the config)");
    app.add_option("--workers", workers_flag, "worker threads (overrides env and config)")
        ->check(CLI::PositiveNumber);
    app.add_option("--tol-cmp", tol_cmp_flag, "comparison tolerance (overrides the config)")
        ->check(CLI::PositiveNumber);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // --help/--version exit 0; every other usage problem is a config error.
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        pricesig::RunConfig cfg = pricesig::load_config(config_path);
        if (!out_override.empty()) cfg.output_dir = out_override;
        if (tol_cmp_flag > 0.0) cfg.market.tol.cmp = tol_cmp_flag;
        if (workers_flag > 0) {
            cfg.workers = workers_flag;
        } else if (const char* env = std::getenv("PRICESIG_WORKERS")) {
            char* end = nullptr;
            long v = std::strtol(env, &end, 10);
            if (end == env || *end != '\0' || v < 1)
                throw pricesig::ConfigError("PRICESIG_WORKERS must be a positive integer");
            cfg.workers = static_cast<int>(v);
        }
        pricesig::HarnessResult res = pricesig::run_config(cfg);
        std::cout << res.summary << "\n";
        std::cout << "artifacts in " << cfg.output_dir << "\n";
        return res.exit_code;
    } catch (const pricesig::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const pricesig::StructuralError& e) {
        std::cerr << "structural error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}
