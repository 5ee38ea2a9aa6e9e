// train.hpp — denoising-score training of the spectral operator and the
// reverse-SDE sampler for the stylized conditional family
//   x0(s) = a s^2 + eps,  a ~ U{-1, +1},  eps ~ Gamma(shape 1, scale 2),
// observed through y(s) = s on grids over [-3, 3].
//
// The forward dynamics of this lane follow the discrete schedule of
// linearly increasing variances mapped onto the continuous clock through
// t_k = -sum_i log(1 - beta_i), so one trained network serves the
// continuous reverse SDE at any discretization.

#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hsl/fno.hpp"
#include "hsl/gaussian.hpp"
#include "hsl/rng.hpp"
#include "hsl/spectral.hpp"

namespace hsl {

// Discrete-time forward noising schedule (variances strictly increasing,
// all in (0, 1)) and its image on the continuous clock.
struct NoiseSchedule {
    double variance_start = 1e-4;
    double variance_end = 2e-2;
    int n_steps = 500;

    void validate() const;
    std::vector<double> betas() const;
    // t_k = -sum_{i<=k} log(1 - beta_i), k = 1..n_steps.
    std::vector<double> ou_times() const;
};

struct StylizedFamily {
    double domain_min = -3.0;
    double domain_max = 3.0;
    int grid_min = 15;
    int grid_max = 50;
    double quadratic_scale = 1.0;  // |a|
    double gamma_scale = 2.0;      // eps ~ Gamma(1, gamma_scale)

    // One function draw evaluated on the grid.
    std::vector<double> sample_function(const Grid& grid, Rng& rng) const;
    // Sorted nonuniform training grid with a random size in [grid_min, grid_max].
    Grid random_grid(Rng& rng) const;
};

// One training batch: a fresh random grid, per-sample discrete timesteps
// mapped to OU times, white forward noise, and the denoising target in score
// units. Weights carry (1 - e^{-t}) so the optimized objective is the
// standard noise-prediction reduction of the same minimizer.
FnoBatch make_stylized_batch(const StylizedFamily& family, const NoiseSchedule& schedule,
                             std::size_t batch, Rng& rng);

// Gaussian-prior DSM batch evaluated on a fixed grid; the regression target
// is the analytic-score-matching target of the mode-space problem.
FnoBatch make_gaussian_dsm_batch(const ProblemSpec& spec, const Grid& grid, double t_floor,
                                 std::size_t batch, Rng& rng);

struct AdamOptions {
    double lr_initial = 1e-3;
    double lr_final = 5e-4;   // reached at the last step via the power law
    double decay_power = -1.0 / 3.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Power-law schedule lr(k) = lr_initial * (1 + c k)^{decay_power} with c
// chosen so lr(total_steps) = lr_final.
double scheduled_lr(const AdamOptions& opt, std::size_t step, std::size_t total_steps);

// Bias-corrected first/second-moment optimizer over the flat parameter space.
class Adam {
  public:
    Adam(std::size_t n_params, AdamOptions options);
    void step(OperatorParams& params, OperatorParams& grad, double lr);

  private:
    AdamOptions opt_;
    std::vector<double> m_, v_;
    std::size_t t_ = 0;
};

struct TrainOptions {
    std::size_t steps = 20000;
    std::size_t batch = 512;
    AdamOptions adam;
    std::uint64_t seed = 1;
    int threads = 0;
    std::size_t stats_batches = 8;  // calibration batches for standardization
};

struct TrajectoryPoint {
    std::size_t step = 0;
    double loss = 0.0;
    double lr = 0.0;
};

struct TrainResult {
    OperatorParams params;
    std::vector<TrajectoryPoint> trajectory;
    double baseline_loss = 0.0;  // zero-model loss on the calibration batches
};

class TrainingDiverged : public std::runtime_error {
  public:
    TrainingDiverged(std::string message, std::vector<TrajectoryPoint> trajectory)
        : std::runtime_error(std::move(message)), trajectory(std::move(trajectory)) {}
    std::vector<TrajectoryPoint> trajectory;
};

using BatchSource = std::function<FnoBatch(std::size_t step, Rng& rng)>;

// Trains from `init`; standardization stats are calibrated once at start
// from dedicated batches. Aborts with TrainingDiverged when the loss stays
// above 10x the initial loss for 100 consecutive steps.
TrainResult train(OperatorParams init, const BatchSource& source, const TrainOptions& options);

// Reverse-SDE sampling of the stylized family on an arbitrary grid, using
// the schedule's OU times as the (nonuniform) Euler grid and white noise.
// Sample i draws from substream (seed, i); rows of the result are samples.
Eigen::MatrixXd sample_stylized(const OperatorParams& params, const std::vector<double>& y_vals,
                                const Grid& grid, const NoiseSchedule& schedule,
                                std::size_t n_samples, std::uint64_t seed, int threads = 0);

// Linear interpolation of each sample row onto a query point.
std::vector<double> marginal_at(const Eigen::MatrixXd& samples, const Grid& grid, double s);

}  // namespace hsl
