// sde.hpp — forward Ornstein–Uhlenbeck simulation and conditional reverse
// integration with a pluggable score.
//
// The forward transition is sampled exactly from its Gaussian law; the
// reverse SDE
//   dZ_tau = 1/2 Z_tau dtau + S(T - tau, Z_tau, y) dtau + sqrt(C) dW_tau
// is integrated by Euler–Maruyama on [0, T - t_floor]. Paths use per-index
// substreams so ensembles are identical for every thread count.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "hsl/gaussian.hpp"
#include "hsl/rng.hpp"
#include "hsl/spectral.hpp"

namespace hsl {

// Score callable with the smallest forward time at which it may be evaluated.
struct ScoreFunction {
    using Eval = std::function<void(double t, const ModeVector& x, const ModeVector& y,
                                    ModeVector& out)>;
    Eval eval;
    double t_floor = 1e-3;
};

// Exact per-mode linear score of the Gaussian-prior problem.
ScoreFunction analytic_gaussian_score(const ProblemSpec& spec, double t_floor = 1e-3);

// Reverse-time checkpoints (tau from 0) and the matching states.
struct SdePath {
    std::vector<double> times;
    std::vector<ModeVector> states;
};

// One-shot draw of X_t | X_0 = x0: mode j is e^{-t/2} x0_j + sqrt(lambda_j (1-e^{-t})) xi.
ModeVector forward_transition(const ProblemSpec& spec, const ModeVector& x0, double t, Rng& rng);

struct ReverseResult {
    ModeVector terminal;
    std::optional<SdePath> path;
};

// Euler–Maruyama from z0 over `steps` uniform steps. Throws on non-finite
// state with the offending step and mode in the message.
ReverseResult reverse_integrate(const ProblemSpec& spec, const ScoreFunction& score,
                                const ModeVector& y, const ModeVector& z0, std::size_t steps,
                                Rng& rng, bool record = false);

// n_paths independent reverse terminals, initialized from exact_start_moments
// draws. Path i uses the substream (seed, i); output order is by path index.
std::vector<ModeVector> ensemble_sample(const ProblemSpec& spec, const ScoreFunction& score,
                                        const ModeVector& y, std::size_t n_paths,
                                        std::size_t steps, std::uint64_t seed, int threads = 0);

// Per-mode sample mean and unbiased sample variance. Needs >= 2 samples.
ModeMoments empirical_moments(const std::vector<ModeVector>& samples);

}  // namespace hsl
