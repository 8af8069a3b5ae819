// slitmod: batch experiments on slit carpets and Menger-type complexes.
//
//   slitmod [command] --config run.cfg [--out table.csv] [--seed N] [--threads N]
//           [--max-cells N] [--timing]
//
// The command may be given on the command line or as `command = ...` in the
// config. Flags override config values. With an output path, plot data for
// modulus, residual and ahlfors goes to <out>.dat as "x y" columns.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "slitmod/cli.hpp"
#include "slitmod/config.hpp"
#include "slitmod/parallel.hpp"

int main(int argc, char** argv) {
    CLI::App app{"slitmod: modulus, collar and fiber experiments"};
    std::string command, config_path, out;
    std::uint64_t seed = 0;
    int threads = -1;
    std::int64_t max_cells = 0;
    bool timing = false;
    app.add_option("command", command, "slits|modulus|collar|residual|fibers|covering|ahlfors|k5|report");
    app.add_option("--config", config_path, "Configuration file (key = value lines)");
    auto* out_opt = app.add_option("--out", out, "Output CSV path (default stdout)");
    auto* seed_opt = app.add_option("--seed", seed, "Seed for sampled checks");
    app.add_option("--threads", threads, "Worker threads (0 = hardware)")->check(CLI::NonNegativeNumber);
    app.add_option("--max-cells", max_cells, "Cell cap for built complexes")->check(CLI::PositiveNumber);
    app.add_flag("--timing", timing, "Fill the wall_time_s column");
    CLI11_PARSE(app, argc, argv);

    slitmod::ExperimentConfig cfg;
    try {
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) {
                std::cerr << "cannot read " << config_path << "\n";
                return 2;
            }
            std::stringstream ss;
            ss << in.rdbuf();
            cfg = slitmod::parse_config(ss.str());
        }
        if (!command.empty()) slitmod::apply_setting(cfg, "command", command, 0);
    } catch (const slitmod::ConfigError& e) {
        std::cerr << (config_path.empty() ? "" : config_path + ":") << e.what() << "\n";
        return 2;
    }
    if (*out_opt) cfg.out = out;
    if (*seed_opt) cfg.seed = seed;
    if (threads >= 0) cfg.threads = threads;
    if (max_cells > 0) cfg.max_cells = max_cells;
    if (cfg.command.empty()) {
        std::cerr << "no command given\n";
        return 2;
    }
    slitmod::set_thread_count(cfg.threads);

    try {
        if (cfg.out.empty()) return slitmod::run_command(cfg, std::cout, nullptr, timing);
        std::ofstream csv(cfg.out);
        std::ofstream dat;
        if (cfg.command == "modulus" || cfg.command == "residual" || cfg.command == "ahlfors") dat.open(cfg.out + ".dat");
        if (!csv) {
            std::cerr << "cannot write " << cfg.out << "\n";
            return 2;
        }
        return slitmod::run_command(cfg, csv, dat.is_open() ? &dat : nullptr, timing);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
