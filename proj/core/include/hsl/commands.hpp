// commands.hpp — the experiment-runner entry points behind the CLI
// subcommands. Each command resolves its output directory, runs its check
// battery, writes plot-ready CSVs plus a manifest (always, also on error),
// and returns the process exit code (0 iff every check passed).

#pragma once

#include <cstdint>
#include <string>

#include "hsl/config.hpp"

namespace hsl {

struct CommandContext {
    ExperimentConfig config;
    std::string out_dir;       // resolved output directory
    std::uint64_t seed = 1;    // resolved seed (CLI override or [sde] seed)
    int threads = 0;           // 0 = hardware concurrency
};

// Applies the CLI/env overrides: HSL_OUT beats --out beats config.
CommandContext make_context(ExperimentConfig config, const std::string& out_override,
                            std::int64_t seed_override, int threads);

int cmd_verify_gaussian(const CommandContext& ctx);
int cmd_score_norm(const CommandContext& ctx);
int cmd_dsm_linear(const CommandContext& ctx);
int cmd_oracle_compare(const CommandContext& ctx);
int cmd_train_stylized(const CommandContext& ctx);
int cmd_sample_stylized(const CommandContext& ctx);

}  // namespace hsl
