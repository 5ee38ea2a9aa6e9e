#include "hsl/gaussian.hpp"

#include <cmath>
#include <stdexcept>

namespace hsl {

namespace {

// Shared per-mode rational terms. All expressions go through expm1 so the
// small-t regime keeps full precision.
struct ModeTerms {
    double ratio_x;  // e^t p (1+q) / (1 + (e^t - 1) p (1+q))
    double ratio_y;  // e^{t/2} p q  / (1 + (e^t - 1) p (1+q))
};

ModeTerms mode_terms(double p, double q, double t) {
    if (std::isinf(q)) {
        // Noiseless observation: the p-dependence cancels in the limit.
        const double em1 = std::expm1(t);
        return {std::exp(t) / em1, std::exp(0.5 * t) / em1};
    }
    const double den = 1.0 + std::expm1(t) * p * (1.0 + q);
    return {std::exp(t) * p * (1.0 + q) / den, std::exp(0.5 * t) * p * q / den};
}

void require_positive_time(double t, const char* who) {
    if (!(t > 0.0)) throw std::invalid_argument(std::string(who) + ": requires t > 0");
}

}  // namespace

void ObservationModel::validate(std::size_t d) const {
    if (sigma_b < 0.0) throw std::invalid_argument("ObservationModel: sigma_b must be >= 0");
    if (!mode_sigmas.empty() && mode_sigmas.size() != observed_indices.size())
        throw std::invalid_argument("ObservationModel: mode_sigmas length mismatch");
    std::vector<bool> seen(d, false);
    for (std::size_t k = 0; k < observed_indices.size(); ++k) {
        const std::size_t idx = observed_indices[k];
        if (idx < 1 || idx > d)
            throw std::invalid_argument("ObservationModel: observed index out of [1, D]");
        if (seen[idx - 1]) throw std::invalid_argument("ObservationModel: duplicate index");
        seen[idx - 1] = true;
        if (!mode_sigmas.empty() && mode_sigmas[k] < 0.0)
            throw std::invalid_argument("ObservationModel: mode sigma must be >= 0");
    }
}

ProblemSpec::ProblemSpec(CovarianceSpectrum prior_, CovarianceSpectrum diffusion_,
                         ObservationModel obs_, double horizon)
    : prior(std::move(prior_)), diffusion(std::move(diffusion_)), obs(std::move(obs_)),
      horizon_t(horizon) {
    const std::size_t d = prior.dim();
    if (diffusion.dim() != d)
        throw std::invalid_argument("ProblemSpec: prior and diffusion must share length D");
    if (!(horizon_t > 0.0)) throw std::invalid_argument("ProblemSpec: horizon T must be > 0");
    obs.validate(d);
    p_.resize(d);
    q_.assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) p_[j] = diffusion.eigenvalues[j] / prior.eigenvalues[j];
    for (std::size_t k = 0; k < obs.observed_indices.size(); ++k) {
        const std::size_t j = obs.observed_indices[k] - 1;
        const double sigma = obs.mode_sigmas.empty() ? obs.sigma_b : obs.mode_sigmas[k];
        q_[j] = sigma == 0.0 ? kInfiniteQ : prior.eigenvalues[j] / (sigma * sigma);
    }
}

ModeMoments posterior_moments(const ProblemSpec& spec, const ModeVector& y) {
    if (y.dim() != spec.dim()) throw std::invalid_argument("posterior_moments: y length mismatch");
    ModeMoments out(spec.dim());
    for (std::size_t j = 0; j < spec.dim(); ++j) {
        const double q = spec.q(j);
        if (std::isinf(q)) {
            out.mean[j] = y[j];
            out.variance[j] = 0.0;
        } else if (q == 0.0) {
            out.mean[j] = 0.0;
            out.variance[j] = spec.mu(j);
        } else {
            out.mean[j] = y[j] * q / (1.0 + q);
            out.variance[j] = spec.mu(j) / (1.0 + q);
        }
    }
    return out;
}

std::pair<ModeVector, Eigen::MatrixXd> general_posterior(const CovarianceSpectrum& prior,
                                                         const Eigen::MatrixXd& a,
                                                         const Eigen::MatrixXd& c_b,
                                                         const Eigen::VectorXd& y) {
    const auto d = static_cast<Eigen::Index>(prior.dim());
    const Eigen::Index n = a.rows();
    if (a.cols() != d) throw std::invalid_argument("general_posterior: A must be n x D");
    if (c_b.rows() != n || c_b.cols() != n)
        throw std::invalid_argument("general_posterior: C_B must be n x n");
    if (y.size() != n) throw std::invalid_argument("general_posterior: y must have n entries");

    const Eigen::VectorXd mu = Eigen::Map<const Eigen::VectorXd>(prior.eigenvalues.data(), d);
    const Eigen::MatrixXd c_at = mu.asDiagonal() * a.transpose();  // C A^T
    Eigen::MatrixXd gram = a * c_at + c_b;                         // A C A^T + C_B

    Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
    if (!lu.isInvertible())
        throw std::runtime_error("general_posterior: singular Gram matrix A C A^T + C_B");

    const Eigen::MatrixXd gain = c_at * lu.inverse();  // D x n
    Eigen::VectorXd mean = gain * y;
    Eigen::MatrixXd cov = Eigen::MatrixXd(mu.asDiagonal()) - gain * c_at.transpose();
    cov = 0.5 * (cov + cov.transpose().eval());  // symmetrize roundoff

    ModeVector m(static_cast<std::size_t>(d));
    for (Eigen::Index j = 0; j < d; ++j) m[static_cast<std::size_t>(j)] = mean(j);
    return {std::move(m), std::move(cov)};
}

ModeMoments marginal_t_moments(const ProblemSpec& spec, const ModeVector& y, double t) {
    if (t < 0.0) throw std::invalid_argument("marginal_t_moments: requires t >= 0");
    if (y.dim() != spec.dim())
        throw std::invalid_argument("marginal_t_moments: y length mismatch");
    ModeMoments out(spec.dim());
    const double decay = std::exp(-t);
    const double half_decay = std::exp(-0.5 * t);
    for (std::size_t j = 0; j < spec.dim(); ++j) {
        const double q = spec.q(j);
        if (std::isinf(q)) {
            out.mean[j] = half_decay * y[j];
            out.variance[j] = -std::expm1(-t) * spec.lambda(j);
        } else {
            out.mean[j] = q == 0.0 ? 0.0 : q * half_decay / (1.0 + q) * y[j];
            out.variance[j] =
                (1.0 + std::expm1(t) * spec.p(j) * (1.0 + q)) * spec.mu(j) * decay / (1.0 + q);
        }
    }
    return out;
}

DriftCoeffs drift_coeffs(const ProblemSpec& spec, double t) {
    require_positive_time(t, "drift_coeffs");
    DriftCoeffs out;
    out.mu_x.resize(spec.dim());
    out.mu_y.resize(spec.dim());
    for (std::size_t j = 0; j < spec.dim(); ++j) {
        const ModeTerms terms = mode_terms(spec.p(j), spec.q(j), t);
        out.mu_x[j] = 0.5 - terms.ratio_x;
        out.mu_y[j] = terms.ratio_y;
    }
    return out;
}

ScoreCoeffs score_coeffs(const ProblemSpec& spec, double t) {
    require_positive_time(t, "score_coeffs");
    ScoreCoeffs out;
    out.t = t;
    out.a.resize(spec.dim());
    out.b.resize(spec.dim());
    for (std::size_t j = 0; j < spec.dim(); ++j) {
        const ModeTerms terms = mode_terms(spec.p(j), spec.q(j), t);
        out.a[j] = -terms.ratio_x;
        out.b[j] = terms.ratio_y;
    }
    return out;
}

double score_norm_expected(const ProblemSpec& spec, double t, ScoreNormVariant variant) {
    require_positive_time(t, "score_norm_expected");
    double total = 0.0;
    for (std::size_t j = 0; j < spec.dim(); ++j) {
        const double lambda = spec.lambda(j);
        const double mu = spec.mu(j);
        const double p = spec.p(j);
        double q = spec.q(j);
        switch (variant) {
            case ScoreNormVariant::Unconditional: q = 0.0; break;
            case ScoreNormVariant::Noiseless:
                if (spec.is_observed(j)) q = ProblemSpec::kInfiniteQ;
                else q = 0.0;
                break;
            case ScoreNormVariant::Conditional: break;
        }
        if (std::isinf(q)) {
            total += lambda / (-std::expm1(-t));
        } else {
            total += std::exp(t) * (1.0 + q) / (1.0 + std::expm1(t) * p * (1.0 + q)) * lambda *
                     lambda / mu;
        }
    }
    return total;
}

double crude_bound(const ProblemSpec& spec, double t) {
    require_positive_time(t, "crude_bound");
    return spec.diffusion.trace() / (-std::expm1(-t));
}

ModeMoments exact_start_moments(const ProblemSpec& spec, const ModeVector& y) {
    if (y.dim() != spec.dim())
        throw std::invalid_argument("exact_start_moments: y length mismatch");
    const double T = spec.horizon_t;
    ModeMoments out(spec.dim());
    const double decay = std::exp(-T);
    const double half_decay = std::exp(-0.5 * T);
    for (std::size_t j = 0; j < spec.dim(); ++j) {
        const double q = spec.q(j);
        if (std::isinf(q)) {
            out.mean[j] = half_decay * y[j];
            out.variance[j] = -std::expm1(-T) * spec.lambda(j);
        } else {
            out.mean[j] = q == 0.0 ? 0.0 : half_decay * y[j] * q / (1.0 + q);
            out.variance[j] = spec.mu(j) * decay / (1.0 + q) - std::expm1(-T) * spec.lambda(j);
        }
    }
    return out;
}

ModeMoments reverse_moments(const ProblemSpec& spec, const ModeVector& y,
                            const ModeMoments& init) {
    if (y.dim() != spec.dim() || init.dim() != spec.dim())
        throw std::invalid_argument("reverse_moments: dimension mismatch");
    const double T = spec.horizon_t;
    ModeMoments out(spec.dim());
    for (std::size_t j = 0; j < spec.dim(); ++j) {
        const double q = spec.q(j);
        if (std::isinf(q)) {
            // Perfectly observed mode: pinned to the data regardless of init.
            out.mean[j] = y[j];
            out.variance[j] = 0.0;
            continue;
        }
        const double growth = 1.0 + std::expm1(T) * spec.p(j) * (1.0 + q);
        const double target_mean = q == 0.0 ? 0.0 : y[j] * q / (1.0 + q);
        const double target_var = spec.mu(j) / (1.0 + q);
        out.mean[j] = init.mean[j] * std::exp(0.5 * T) / growth + target_mean * (1.0 - 1.0 / growth);
        out.variance[j] = init.variance[j] * std::exp(T) / (growth * growth) +
                          target_var * (1.0 - 1.0 / growth);
    }
    return out;
}

double prop3_bound(const ProblemSpec& spec, double k_bound, double l_bound) {
    if (k_bound < 1.0) throw std::invalid_argument("prop3_bound: K must be >= 1");
    if (l_bound < 0.0) throw std::invalid_argument("prop3_bound: L must be >= 0");
    const double T = spec.horizon_t;
    const double eT = std::exp(T);
    const double k2 = k_bound * k_bound;
    const double k4 = k2 * k2;
    const double lk2 = (l_bound * k_bound) * (l_bound * k_bound);
    double total = 0.0;
    for (std::size_t j = 0; j < spec.dim(); ++j) {
        const double q = spec.q(j);
        if (std::isinf(q))
            throw std::invalid_argument(
                "prop3_bound: noiseless regime has unbounded p(1+q); requires sigma_B > 0");
        const double pq = spec.p(j) * (1.0 + q);
        const double lambda = spec.lambda(j);
        const double grown = pq * std::expm1(T);
        const double quart = grown * grown * grown * grown;
        total += lambda * eT * (k4 * pq + 2.0 * lambda * eT * lk2 * (1.0 + 3.0 * quart));
    }
    return 2.0 * total;
}

}  // namespace hsl
