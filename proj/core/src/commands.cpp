#include "hsl/commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <stdexcept>

namespace hsl {

CommandContext make_context(ExperimentConfig config, const std::string& out_override,
                            std::int64_t seed_override, int threads) {
    CommandContext ctx;
    ctx.config = std::move(config);
    const char* env_out = std::getenv("HSL_OUT");
    if (env_out && *env_out) ctx.out_dir = env_out;
    else if (!out_override.empty()) ctx.out_dir = out_override;
    else ctx.out_dir = ctx.config.output.directory;
    ctx.seed = seed_override >= 0 ? static_cast<std::uint64_t>(seed_override)
                                  : ctx.config.sde.seed;
    ctx.threads = threads;
    std::filesystem::create_directories(ctx.out_dir);
    return ctx;
}

int cmd_verify_gaussian(const CommandContext&) { throw std::logic_error("not yet implemented"); }
int cmd_score_norm(const CommandContext&) { throw std::logic_error("not yet implemented"); }
int cmd_dsm_linear(const CommandContext&) { throw std::logic_error("not yet implemented"); }
int cmd_oracle_compare(const CommandContext&) { throw std::logic_error("not yet implemented"); }
int cmd_train_stylized(const CommandContext&) { throw std::logic_error("not yet implemented"); }
int cmd_sample_stylized(const CommandContext&) { throw std::logic_error("not yet implemented"); }

}  // namespace hsl
