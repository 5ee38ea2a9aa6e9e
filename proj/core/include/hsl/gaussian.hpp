// gaussian.hpp — closed-form conditional diffusion analytics for a Gaussian
// prior observed through a mode-selecting linear map with white noise.
//
// With prior eigenvalues mu_j, diffusion eigenvalues lambda_j, and noise
// level sigma_B on the observed modes, everything decouples per mode through
// the ratios p_j = lambda_j/mu_j and q_j = mu_j/sigma_B^2 (q_j = 0 on
// unobserved modes, +inf when sigma_B = 0). These routines are the ground
// truth the samplers, estimators, and trained models are verified against.

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "hsl/spectral.hpp"

namespace hsl {

// Observed mode indices I = {eta(1), ..., eta(n)} (1-based, distinct) with
// observation noise standard deviation sigma_b >= 0. sigma_b = 0 flags the
// noiseless regime. mode_sigmas optionally overrides the noise level per
// observed mode (same order as observed_indices), which keeps the per-mode
// ratios q_j fully general while preserving the diagonal structure.
struct ObservationModel {
    std::vector<std::size_t> observed_indices;
    double sigma_b = 1.0;
    std::vector<double> mode_sigmas;

    void validate(std::size_t d) const;
};

// Prior + diffusion spectra, observation model, and diffusion horizon T.
struct ProblemSpec {
    CovarianceSpectrum prior;      // mu_j
    CovarianceSpectrum diffusion;  // lambda_j
    ObservationModel obs;
    double horizon_t = 2.0;

    static constexpr double kInfiniteQ = std::numeric_limits<double>::infinity();

    ProblemSpec() = default;
    ProblemSpec(CovarianceSpectrum prior_, CovarianceSpectrum diffusion_, ObservationModel obs_,
                double horizon);

    std::size_t dim() const { return prior.dim(); }
    bool is_observed(std::size_t j) const { return q_[j] > 0.0; }
    double p(std::size_t j) const { return p_[j]; }
    // q_j = mu_j / sigma_j^2 on observed modes, 0 elsewhere, +inf sentinel
    // when the mode is observed noiselessly.
    double q(std::size_t j) const { return q_[j]; }
    double mu(std::size_t j) const { return prior.eigenvalues[j]; }
    double lambda(std::size_t j) const { return diffusion.eigenvalues[j]; }

  private:
    std::vector<double> p_;
    std::vector<double> q_;
};

// Per-mode Gaussian moments (mean, variance).
struct ModeMoments {
    ModeVector mean;
    std::vector<double> variance;

    ModeMoments() = default;
    explicit ModeMoments(std::size_t d) : mean(d), variance(d, 0.0) {}
    std::size_t dim() const { return mean.dim(); }
};

// Linear conditional score S_j(t, x, y) = a_j x_j + b_j y_j.
struct ScoreCoeffs {
    std::vector<double> a;
    std::vector<double> b;
    double t = 0.0;

    std::size_t dim() const { return a.size(); }
};

enum class ScoreNormVariant { Conditional, Unconditional, Noiseless };

// Law of X_0 | Y = y per mode: mean y_j q_j/(1+q_j), variance mu_j/(1+q_j).
// Unobserved components of y are ignored.
ModeMoments posterior_moments(const ProblemSpec& spec, const ModeVector& y);

// Full-matrix Gaussian conjugate update on the truncated space for a general
// finite-rank observation y = A x + noise, noise ~ N(0, C_B):
//   mean = C A^T (A C A^T + C_B)^{-1} y,  cov = C - C A^T (A C A^T + C_B)^{-1} A C.
std::pair<ModeVector, Eigen::MatrixXd> general_posterior(const CovarianceSpectrum& prior,
                                                         const Eigen::MatrixXd& a,
                                                         const Eigen::MatrixXd& c_b,
                                                         const Eigen::VectorXd& y);

// Law of X_t | Y = y per mode.
ModeMoments marginal_t_moments(const ProblemSpec& spec, const ModeVector& y, double t);

// Reverse-SDE drift coefficients at forward time t:
//   dZ = mu_x(T-tau) Z dtau + mu_y(T-tau) y dtau + sqrt(lambda) dW.
struct DriftCoeffs {
    std::vector<double> mu_x;
    std::vector<double> mu_y;
};
DriftCoeffs drift_coeffs(const ProblemSpec& spec, double t);

// Conditional score coefficients; a_j = mu_x_j - 1/2 and b_j = mu_y_j.
ScoreCoeffs score_coeffs(const ProblemSpec& spec, double t);

// E[ ||S(t, X_t, y)||_H^2 | Y=y ], exact.
double score_norm_expected(const ProblemSpec& spec, double t, ScoreNormVariant variant);

// (1 - e^{-t})^{-1} Tr(C): always an upper bound for the score norm.
double crude_bound(const ProblemSpec& spec, double t);

// Law of X_T | Y = y: the correct reverse-SDE initialization.
ModeMoments exact_start_moments(const ProblemSpec& spec, const ModeVector& y);

// Exact Gaussian moments of Z_T when the reverse SDE starts from `init`.
ModeMoments reverse_moments(const ProblemSpec& spec, const ModeVector& y, const ModeMoments& init);

// Uniform-in-time score-norm bound for the bounded-Lipschitz separable prior
// class with constants K >= 1, L >= 0. Requires sigma_B > 0.
double prop3_bound(const ProblemSpec& spec, double k_bound, double l_bound);

}  // namespace hsl
