#include "hsl/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace hsl {

namespace {

// Gaussian-case conditional of X_0^j given (X_t^j = x, Y = y): the product of
// the two Gaussian factors in the quadrature weight.
struct GaussianConditional {
    double mean;
    double variance;
    double x_y;       // posterior mean of X_0 | Y
    double mu_y;      // posterior variance of X_0 | Y
    double lambda_t;  // transition variance lambda (1 - e^{-t})
};

GaussianConditional gaussian_conditional(const ProblemSpec& spec, std::size_t mode, double t,
                                         double x, double y_j) {
    const double q = spec.q(mode);
    GaussianConditional g{};
    g.lambda_t = spec.lambda(mode) * (-std::expm1(-t));
    if (std::isinf(q)) {
        g.x_y = y_j;
        g.mu_y = 0.0;
        g.mean = y_j;
        g.variance = 0.0;
        return g;
    }
    g.x_y = q == 0.0 ? 0.0 : y_j * q / (1.0 + q);
    g.mu_y = spec.mu(mode) / (1.0 + q);
    const double half_decay = std::exp(-0.5 * t);
    const double precision = 1.0 / g.mu_y + half_decay * half_decay / g.lambda_t;
    g.variance = 1.0 / precision;
    g.mean = g.variance * (g.x_y / g.mu_y + x * half_decay / g.lambda_t);
    return g;
}

}  // namespace

void SeparablePrior::validate_on_lattice(double x_lo, double x_hi, double y_lo, double y_hi,
                                         std::size_t probes) const {
    if (k_bound < 1.0) throw std::invalid_argument("SeparablePrior: K must be >= 1");
    if (l_bound < 0.0) throw std::invalid_argument("SeparablePrior: L must be >= 0");
    const double dx = (x_hi - x_lo) / static_cast<double>(probes - 1);
    const double dy = (y_hi - y_lo) / static_cast<double>(probes - 1);
    for (std::size_t j = 0; j < psi.size(); ++j) {
        for (std::size_t iy = 0; iy < probes; ++iy) {
            const double y = y_lo + dy * static_cast<double>(iy);
            double prev = 0.0;
            for (std::size_t ix = 0; ix < probes; ++ix) {
                const double x = x_lo + dx * static_cast<double>(ix);
                const double v = psi[j](x, y);
                if (!(v >= 1.0 / k_bound - 1e-12 && v <= k_bound + 1e-12))
                    throw std::invalid_argument("SeparablePrior: psi violates [1/K, K] on lattice");
                if (ix > 0 && std::abs(v - prev) > l_bound * dx + 1e-12)
                    throw std::invalid_argument("SeparablePrior: psi violates Lipschitz bound");
                prev = v;
            }
        }
    }
}

SeparablePrior gaussian_separable_prior(std::size_t d) {
    SeparablePrior prior;
    prior.k_bound = 1.0;
    prior.l_bound = 0.0;
    prior.psi.assign(d, [](double, double) { return 1.0; });
    return prior;
}

void QuadratureSpec::validate() const {
    if (n_nodes < 51 || n_nodes % 2 == 0)
        throw std::invalid_argument("QuadratureSpec: n_nodes must be odd and >= 51");
    if (!(half_width > 0.0)) throw std::invalid_argument("QuadratureSpec: half_width must be > 0");
}

double oracle_conditional_mean(const ProblemSpec& spec, const SeparablePrior& prior,
                               std::size_t mode, double t, double x, double y_j,
                               const QuadratureSpec& quad) {
    quad.validate();
    if (mode >= spec.dim()) throw std::invalid_argument("oracle_conditional_mean: bad mode");
    if (!(t > 0.0)) throw std::invalid_argument("oracle_conditional_mean: requires t > 0");
    const GaussianConditional g = gaussian_conditional(spec, mode, t, x, y_j);
    if (g.variance == 0.0) return g.mean;  // noiselessly pinned mode

    const double sd = std::sqrt(g.variance);
    const double lo = g.mean - quad.half_width * sd;
    const double step = 2.0 * quad.half_width * sd / static_cast<double>(quad.n_nodes - 1);
    const double half_decay = std::exp(-0.5 * t);
    const auto& psi = prior.psi[mode];

    // log weights, then a single max-subtraction before exponentiating
    std::vector<double> logw(quad.n_nodes);
    double logw_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < quad.n_nodes; ++i) {
        const double x0 = lo + step * static_cast<double>(i);
        const double r1 = x - x0 * half_decay;
        const double r2 = x0 - g.x_y;
        const double f = psi(x0, y_j);
        if (!(f > 0.0)) throw std::invalid_argument("oracle_conditional_mean: psi must be positive");
        logw[i] = -0.5 * r1 * r1 / g.lambda_t - 0.5 * r2 * r2 / g.mu_y + std::log(f);
        logw_max = std::max(logw_max, logw[i]);
    }
    double mass = 0.0, first_moment = 0.0;
    std::size_t support = 0;
    for (std::size_t i = 0; i < quad.n_nodes; ++i) {
        double w = std::exp(logw[i] - logw_max);
        if (i == 0 || i + 1 == quad.n_nodes) w *= 0.5;  // trapezoid ends
        if (w >= 1e-12) ++support;
        mass += w;
        first_moment += w * (lo + step * static_cast<double>(i));
    }
    if (support < 5)
        throw std::runtime_error("oracle_conditional_mean: quadrature mass concentrated on " +
                                 std::to_string(support) + " nodes; refine the quadrature");
    return first_moment / mass;
}

double oracle_score(const ProblemSpec& spec, const SeparablePrior& prior, std::size_t mode,
                    double t, double x, double y_j, const QuadratureSpec& quad) {
    const double m = oracle_conditional_mean(spec, prior, mode, t, x, y_j, quad);
    return -(x - std::exp(-0.5 * t) * m) / (-std::expm1(-t));
}

McScoreNorm mc_score_norm(const ProblemSpec& spec, const SeparablePrior& prior,
                          const ModeVector& y, double t, std::size_t n_samples,
                          const QuadratureSpec& quad, Rng& rng) {
    if (n_samples < 1000) throw std::invalid_argument("mc_score_norm: need n_samples >= 1000");
    if (y.dim() != spec.dim()) throw std::invalid_argument("mc_score_norm: y length mismatch");
    if (!(t > 0.0)) throw std::invalid_argument("mc_score_norm: requires t > 0");

    McScoreNorm out;
    out.min_ess = static_cast<double>(n_samples);
    const double half_decay = std::exp(-0.5 * t);
    for (std::size_t j = 0; j < spec.dim(); ++j) {
        const double q = spec.q(j);
        const bool pinned = std::isinf(q);
        const double x_y = pinned ? y[j] : (q == 0.0 ? 0.0 : y[j] * q / (1.0 + q));
        const double mu_y = pinned ? 0.0 : spec.mu(j) / (1.0 + q);
        const double mu_y_sd = std::sqrt(mu_y);
        const double noise_sd = std::sqrt(spec.lambda(j) * (-std::expm1(-t)));

        // Self-normalized IS with proposal X_0 ~ Gaussian-case conditional and
        // weight psi; exact when psi == 1.
        double w_sum = 0.0, w2_sum = 0.0, f_sum = 0.0;
        std::vector<double> w(n_samples), f(n_samples);
        for (std::size_t i = 0; i < n_samples; ++i) {
            const double x0 = x_y + mu_y_sd * rng.normal();
            const double xt = half_decay * x0 + noise_sd * rng.normal();
            const double s = oracle_score(spec, prior, j, t, xt, y[j], quad);
            w[i] = prior.psi[j](x0, y[j]);
            f[i] = s * s;
            w_sum += w[i];
            w2_sum += w[i] * w[i];
            f_sum += w[i] * f[i];
        }
        const double estimate = f_sum / w_sum;
        const double ess = w_sum * w_sum / w2_sum;
        out.min_ess = std::min(out.min_ess, ess);
        // Delta-method variance of the self-normalized ratio.
        double var_acc = 0.0;
        for (std::size_t i = 0; i < n_samples; ++i) {
            const double r = w[i] * (f[i] - estimate);
            var_acc += r * r;
        }
        out.value += estimate;
        out.stderr_value += var_acc / (w_sum * w_sum);
    }
    out.stderr_value = std::sqrt(out.stderr_value);
    out.reliable = out.min_ess >= static_cast<double>(n_samples) / 100.0;
    return out;
}

}  // namespace hsl
