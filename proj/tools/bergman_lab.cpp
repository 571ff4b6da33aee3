#include <algorithm>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bergman/cli/commands.hpp"

int main(int argc, char** argv) {
    using namespace bergman::cli;
    CLI::App app{"Full and partial Bergman densities on model geometries"};
    std::string command;
    RunOptions opts;
    std::string config;
    int threads = -1;
    app.add_option("command", command, "density, partial, boundary, decay-fit, regimes, "
                                       "gram-check, sweep or verify")
        ->required()
        ->check(CLI::IsMember(commands()));
    app.add_option("--config", config, "INI config file");
    app.add_option("--out", opts.out_dir, "output directory")->capture_default_str();
    app.add_option("--threads", threads, "worker threads (0 = one per core)")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--seed", opts.seed, "seed for the randomized checks")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << R"({"command":")" << command << R"(","error":"InvalidArguments","message":)"
                  << std::quoted(e.what()) << R"(,"exit_code":2})" << '\n';
        return kExitValidation;
    }

    if (!config.empty()) opts.config_path = config;
    if (threads >= 0) {
        opts.threads = threads;
    } else if (const char* env = std::getenv("BERGMAN_LAB_THREADS")) {
        try {
            opts.threads = std::max(0, std::stoi(env));
        } catch (const std::exception&) {
            std::cerr << R"({"command":")" << command
                      << R"(","error":"InvalidArguments","message":"BERGMAN_LAB_THREADS is not an integer","exit_code":2})"
                      << '\n';
            return kExitValidation;
        }
    }
    return execute(command, opts, std::cout, std::cerr);
}
