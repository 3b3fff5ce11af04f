#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dgorlicz/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Orlicz-space, level-set iteration and degenerate p-Laplace experiments"};
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out;
    app.add_option("--config", config_path, "experiment configuration file")->required();
    auto* seed_opt = app.add_option("--seed", seed, "seed override");
    auto* out_opt = app.add_option("--out", out, "output directory (overrides $DGORLICZ_OUT and [output] dir)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : dgorlicz::cli::kConfigError;
    }
    dgorlicz::cli::Overrides o;
    if (*seed_opt) o.seed = seed;
    if (*out_opt) o.out = out;
    return dgorlicz::cli::run_file(config_path, o, std::cout, std::cerr);
}
