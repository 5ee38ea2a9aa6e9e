// hsl — spectral diffusion laboratory for conditional score models.
//
// Subcommands run config-driven verification batteries and reproductions,
// writing CSV tables and a JSON manifest into the output directory.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <functional>
#include <map>
#include <string>

#include "hsl/commands.hpp"
#include "hsl/config.hpp"
#include "hsl/manifest.hpp"

int main(int argc, char** argv) {
    CLI::App app{"hsl — conditional score diffusion laboratory"};
    app.set_version_flag("--version", hsl::tool_version());
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::int64_t seed = -1;
    int threads = 0;

    const std::map<std::string, std::pair<std::string, int (*)(const hsl::CommandContext&)>>
        commands = {
            {"verify-gaussian",
             {"Run the closed-form and Monte Carlo checks of the Gaussian-prior theory",
              hsl::cmd_verify_gaussian}},
            {"score-norm",
             {"Tabulate analytic, bounded, and Monte Carlo score norms over time",
              hsl::cmd_score_norm}},
            {"dsm-linear",
             {"Fit per-mode linear scores to denoising data and compare with the analytic "
              "coefficients",
              hsl::cmd_dsm_linear}},
            {"oracle-compare",
             {"Compare the quadrature score oracle against closed forms on a lattice",
              hsl::cmd_oracle_compare}},
            {"train-stylized",
             {"Train the spectral score operator on the stylized conditional family",
              hsl::cmd_train_stylized}},
            {"sample-stylized",
             {"Sample a trained operator across grid sizes and tabulate marginals",
              hsl::cmd_sample_stylized}},
        };

    for (const auto& [name, entry] : commands) {
        CLI::App* sub = app.add_subcommand(name, entry.first);
        sub->add_option("--config", config_path, "Config file (defaults apply when omitted)");
        sub->add_option("--seed", seed, "Override the config seed");
        sub->add_option("--threads", threads, "Worker pool cap (0 = hardware)");
        sub->add_option("--out", out_dir, "Output directory (HSL_OUT env overrides)");
    }

    CLI11_PARSE(app, argc, argv);

    try {
        hsl::ExperimentConfig config;
        if (!config_path.empty()) config = hsl::load_config_file(config_path);
        const hsl::CommandContext ctx =
            hsl::make_context(std::move(config), out_dir, seed, threads);
        const std::string sub = app.get_subcommands().front()->get_name();
        return commands.at(sub).second(ctx);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "hsl: %s\n", e.what());
        return 2;
    }
}
