// capillary-lab run <config.json> [--out report.json] [--csv table.csv] [--order N] [--seed S]

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "capillary_lab/cli.hpp"

namespace cli = capillary_lab::cli;

int main(int argc, char** argv)
{
    CLI::App app{"Capillary-surface stability and convex-geometry experiments", "capillary-lab"};
    app.set_version_flag("--version", std::string(cli::kVersion));
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run one JSON experiment config");
    std::string config_path;
    std::string out_path;
    std::string csv_path;
    std::optional<int> order;
    std::optional<std::uint64_t> seed;
    run->add_option("config", config_path, "Experiment config (JSON)")->required();
    run->add_option("--out", out_path, "Write the JSON report here instead of stdout");
    run->add_option("--csv", csv_path, "Write the report table as CSV");
    run->add_option("--order", order, "Quadrature order per axis")->check(CLI::Range(2, 512));
    run->add_option("--seed", seed, "Seed for random suites");

    CLI11_PARSE(app, argc, argv);

    try {
        auto config = cli::load_config(config_path);
        if (seed) config.seed = *seed;
        const int effective = cli::resolve_order(order, config, std::getenv(cli::kOrderEnv));
        const auto report = cli::run(config, effective);

        const std::string target = !out_path.empty() ? out_path : config.output_path.value_or("");
        if (target.empty()) std::cout << cli::report_text(report);
        else cli::write_file(target, cli::report_text(report));
        if (!csv_path.empty()) cli::emit_csv(report, csv_path);

        if (report.error) std::cerr << "capillary-lab: " << report.status << ": " << *report.error << "\n";
        return report.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "capillary-lab: " << e.what() << "\n";
        return 1;
    }
}
