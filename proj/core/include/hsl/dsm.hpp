// dsm.hpp — conditional denoising score matching on mode vectors.
//
// Training tuples (t, x0, xt, y) carry the regression target
//   target = -(1 - e^{-t})^{-1} (xt - e^{-t/2} x0),
// whose population minimizer over score models is the conditional score.
// For the Gaussian prior the score is linear per mode, so an ordinary
// least-squares fit inside narrow time bins must recover the analytic
// coefficients; that consistency is the module's main verification.

#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <utility>
#include <vector>

#include "hsl/gaussian.hpp"
#include "hsl/rng.hpp"
#include "hsl/spectral.hpp"

namespace hsl {

struct DsmSample {
    double t = 0.0;
    ModeVector x0;
    ModeVector xt;
    ModeVector y;
};

// target_j = -(1 - e^{-t})^{-1} (xt_j - e^{-t/2} x0_j)
ModeVector dsm_target(const ModeVector& x0, const ModeVector& xt, double t);

// Draws (x0, y) jointly.
using PriorSampler = std::function<std::pair<ModeVector, ModeVector>(Rng&)>;

// x0 ~ N(0, C_mu); y = observed modes of x0 plus observation noise, zero on
// unobserved modes.
PriorSampler gaussian_prior_sampler(const ProblemSpec& spec);

// n i.i.d. samples with t ~ U(t_floor, T); sample i uses substream (seed, i).
std::vector<DsmSample> make_dsm_dataset(const ProblemSpec& spec, const PriorSampler& sampler,
                                        std::size_t n, double t_floor, std::uint64_t seed,
                                        int threads = 0);

struct LinearFit {
    double a = 0.0;
    double b = 0.0;
    double se_a = 0.0;
    double se_b = 0.0;
    std::size_t n = 0;
    bool b_pinned = false;  // y carried no signal; b fixed to 0
};

// OLS of the mode-j target on (xt_j, y_j) within the time bin [t_lo, t_hi).
// Needs >= 100 samples in the bin.
LinearFit fit_linear_score(const std::vector<DsmSample>& dataset, std::size_t mode, double t_lo,
                           double t_hi);

// Per-(mode, bin) linear score with uniform bin edges on [t_floor, T].
struct LinearScoreModel {
    std::vector<double> bin_edges;            // n_bins + 1
    std::vector<std::vector<LinearFit>> fit;  // [bin][mode]

    std::size_t n_bins() const { return fit.size(); }
    std::size_t bin_of(double t) const;
    void evaluate(double t, const ModeVector& x, const ModeVector& y, ModeVector& out) const;
};

LinearScoreModel fit_linear_score_model(const std::vector<DsmSample>& dataset,
                                        const ProblemSpec& spec, std::size_t n_bins,
                                        double t_floor);

// Mean over the batch of squared Hilbert-norm residuals against the target.
using ScoreModelFn =
    std::function<void(double t, const ModeVector& x, const ModeVector& y, ModeVector& out)>;
double dsm_loss(const ScoreModelFn& model, const std::vector<DsmSample>& batch);

// One row per sample-mode with header t,mode,x0,xt,y.
void export_dsm_csv(std::ostream& out, const std::vector<DsmSample>& dataset);

}  // namespace hsl
