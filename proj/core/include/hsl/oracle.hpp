// oracle.hpp — brute-force conditional score for separable non-Gaussian
// priors, by one-dimensional quadrature per mode.
//
// The prior of mode j given Y=y is the Gaussian-case conditional reweighted
// by a factor psi_j(x0, y_j) bounded in [1/K, K] and L-Lipschitz in x0. The
// conditional mean E[X_0 | X_t = x, Y = y] is then a ratio of 1D integrals
// against the weight
//   w(x0) = phi_{lambda_t}(x - x0 e^{-t/2}) * phi_{mu_y}(x0 - x_y) * psi(x0, y),
// evaluated in log space on nodes centered at the Gaussian-case conditional
// mean. Serves as ground truth for trained score models.

#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "hsl/gaussian.hpp"
#include "hsl/rng.hpp"
#include "hsl/spectral.hpp"

namespace hsl {

// Per-mode factors psi_j(x0, y_j), with declared bound and Lipschitz
// constants. The constants are hypotheses of the caller; validate_on_lattice
// spot-checks them on a finite probe set.
struct SeparablePrior {
    std::vector<std::function<double(double x0, double y)>> psi;
    double k_bound = 1.0;
    double l_bound = 0.0;

    std::size_t dim() const { return psi.size(); }
    void validate_on_lattice(double x_lo, double x_hi, double y_lo, double y_hi,
                             std::size_t probes = 21) const;
};

// psi == 1 on every mode: the Gaussian prior itself.
SeparablePrior gaussian_separable_prior(std::size_t d);

struct QuadratureSpec {
    std::size_t n_nodes = 801;  // odd, >= 51
    double half_width = 10.0;   // posterior standard deviations per side

    void validate() const;
};

// E[X_0^j | X_t^j = x, Y = y]. Exact Gaussian answer when psi == 1.
double oracle_conditional_mean(const ProblemSpec& spec, const SeparablePrior& prior,
                               std::size_t mode, double t, double x, double y_j,
                               const QuadratureSpec& quad = {});

// S^j(t, x, y) = -(1-e^{-t})^{-1} (x - e^{-t/2} E[X_0 | X_t = x, Y = y]).
double oracle_score(const ProblemSpec& spec, const SeparablePrior& prior, std::size_t mode,
                    double t, double x, double y_j, const QuadratureSpec& quad = {});

struct McScoreNorm {
    double value = 0.0;
    double stderr_value = 0.0;
    double min_ess = 0.0;  // smallest per-mode effective sample size
    bool reliable = true;  // min_ess >= n/100
};

// Monte Carlo estimate of E[ ||S(t, X_t, y)||_H^2 | Y = y ] under the
// separable prior, by self-normalized importance sampling that reweights the
// Gaussian-case conditional of X_0 by psi.
McScoreNorm mc_score_norm(const ProblemSpec& spec, const SeparablePrior& prior,
                          const ModeVector& y, double t, std::size_t n_samples,
                          const QuadratureSpec& quad, Rng& rng);

}  // namespace hsl
