#include <doctest.h>

#include <cmath>
#include <vector>

#include "hsl/gaussian.hpp"
#include "hsl/oracle.hpp"
#include "hsl/rng.hpp"
#include "hsl/sde.hpp"

using namespace hsl;

namespace {

ProblemSpec two_mode_problem(double sigma_b = 1.0, double horizon = 2.0) {
    CovarianceSpectrum cmu = build_spectrum(DecayLaw::Flat, 1.0, 2);
    ObservationModel obs;
    obs.observed_indices = {1};
    obs.sigma_b = sigma_b;
    return ProblemSpec(cmu, cmu, obs, horizon);
}

// Exponential-tilt mixture: psi(x0, y) = sum_k w_k exp(alpha_k (x0 - x_y) -
// alpha_k^2 mu_y / 2) makes the conditional of X_0 given Y=y an exact
// two-component Gaussian mixture with means x_y + alpha_k mu_y and common
// variance mu_y.
struct TiltMixture {
    double w1, alpha1, alpha2;
};

SeparablePrior mixture_prior(const ProblemSpec& spec, const TiltMixture& mix) {
    SeparablePrior prior;
    prior.k_bound = 50.0;  // nominal; the tilt is unbounded at infinity
    prior.l_bound = 50.0;
    for (std::size_t j = 0; j < spec.dim(); ++j) {
        const double q = spec.q(j);
        const double mu_y = spec.mu(j) / (1.0 + q);
        prior.psi.push_back([mix, q, mu_y](double x0, double y) {
            const double x_y = q == 0.0 ? 0.0 : y * q / (1.0 + q);
            const double e1 = mix.alpha1 * (x0 - x_y) - 0.5 * mix.alpha1 * mix.alpha1 * mu_y;
            const double e2 = mix.alpha2 * (x0 - x_y) - 0.5 * mix.alpha2 * mix.alpha2 * mu_y;
            return mix.w1 * std::exp(e1) + (1.0 - mix.w1) * std::exp(e2);
        });
    }
    return prior;
}

// Independent closed-form conditional mean of the mixture model: Gaussian
// conditioning per component plus responsibility weighting.
double mixture_conditional_mean(const ProblemSpec& spec, const TiltMixture& mix, std::size_t j,
                                double t, double x, double y) {
    const double q = spec.q(j);
    const double x_y = q == 0.0 ? 0.0 : y * q / (1.0 + q);
    const double mu_y = spec.mu(j) / (1.0 + q);
    const double lambda_t = spec.lambda(j) * (1.0 - std::exp(-t));
    const double half = std::exp(-0.5 * t);
    const double means[2] = {x_y + mix.alpha1 * mu_y, x_y + mix.alpha2 * mu_y};
    const double weights[2] = {mix.w1, 1.0 - mix.w1};
    double resp[2];
    double total = 0.0;
    for (int k = 0; k < 2; ++k) {
        const double pred_var = half * half * mu_y + lambda_t;
        const double r = x - half * means[k];
        resp[k] = weights[k] * std::exp(-0.5 * r * r / pred_var) / std::sqrt(pred_var);
        total += resp[k];
    }
    double mean = 0.0;
    for (int k = 0; k < 2; ++k) {
        const double precision = 1.0 / mu_y + half * half / lambda_t;
        const double post_mean = (means[k] / mu_y + x * half / lambda_t) / precision;
        mean += resp[k] / total * post_mean;
    }
    return mean;
}

double mixture_score(const ProblemSpec& spec, const TiltMixture& mix, std::size_t j, double t,
                     double x, double y) {
    const double m = mixture_conditional_mean(spec, mix, j, t, x, y);
    return -(x - std::exp(-0.5 * t) * m) / (1.0 - std::exp(-t));
}

}  // namespace

TEST_CASE("gaussian reduction: oracle equals the analytic linear score on a lattice") {
    const ProblemSpec spec = two_mode_problem();
    const SeparablePrior prior = gaussian_separable_prior(spec.dim());
    double worst = 0.0;
    for (double t : {0.01, 0.1, 1.0}) {
        const ScoreCoeffs c = score_coeffs(spec, t);
        for (int ix = 0; ix < 21; ++ix) {
            for (int iy = 0; iy < 21; ++iy) {
                const double x = -3.0 + 6.0 * ix / 20.0;
                const double y = -3.0 + 6.0 * iy / 20.0;
                for (std::size_t j = 0; j < spec.dim(); ++j) {
                    const double got = oracle_score(spec, prior, j, t, x, y);
                    const double want = c.a[j] * x + c.b[j] * (j == 0 ? y : 0.0);
                    worst = std::max(worst, std::abs(got - want));
                }
            }
        }
    }
    CHECK(worst < 1e-7);
}

TEST_CASE("symmetric psi with centered data gives zero conditional mean") {
    const ProblemSpec spec = two_mode_problem();
    SeparablePrior prior;
    prior.k_bound = 2.0;
    prior.l_bound = 1.0;
    prior.psi.assign(2, [](double x0, double) { return 1.0 + 0.4 * std::tanh(x0 * x0 / 4.0); });
    // even psi, y = 0, x = 0: odd integrand under an even weight
    const double m = oracle_conditional_mean(spec, prior, 0, 0.5, 0.0, 0.0);
    CHECK(std::abs(m) < 1e-12);
}

TEST_CASE("mixture prior: oracle matches the closed-form mixture conditioning") {
    const ProblemSpec spec = two_mode_problem();
    const TiltMixture mix{0.4, -1.2, 1.6};
    const SeparablePrior prior = mixture_prior(spec, mix);
    double worst_mean = 0.0, worst_score = 0.0;
    for (double t : {0.01, 0.1, 1.0}) {
        for (int ix = 0; ix < 21; ++ix) {
            for (int iy = 0; iy < 21; ++iy) {
                const double x = -3.0 + 6.0 * ix / 20.0;
                const double y = -3.0 + 6.0 * iy / 20.0;
                for (std::size_t j = 0; j < spec.dim(); ++j) {
                    const double got = oracle_conditional_mean(spec, prior, j, t, x, y);
                    const double want = mixture_conditional_mean(spec, mix, j, t, x, y);
                    worst_mean = std::max(worst_mean, std::abs(got - want));
                    const double gs = oracle_score(spec, prior, j, t, x, y);
                    const double ws = mixture_score(spec, mix, j, t, x, y);
                    worst_score = std::max(worst_score, std::abs(gs - ws));
                }
            }
        }
    }
    CHECK(worst_mean < 1e-6);
    CHECK(worst_score < 1e-6);
}

TEST_CASE("quadrature convergence: doubling the nodes moves the mean below 1e-9") {
    const ProblemSpec spec = two_mode_problem();
    SeparablePrior prior;
    prior.k_bound = 2.0;
    prior.l_bound = 1.0;
    prior.psi.assign(2, [](double x0, double) { return std::exp(0.5 * std::sin(x0)); });
    QuadratureSpec coarse;
    coarse.n_nodes = 801;
    QuadratureSpec fine;
    fine.n_nodes = 1601;
    for (double t : {0.05, 0.5, 1.5}) {
        for (double x : {-2.0, 0.3, 1.7}) {
            const double a = oracle_conditional_mean(spec, prior, 0, t, x, 1.0, coarse);
            const double b = oracle_conditional_mean(spec, prior, 0, t, x, 1.0, fine);
            CHECK(std::abs(a - b) < 1e-9);
        }
    }
}

TEST_CASE("score fixed point: x with x = e^{-t/2} E[X0|x] has zero score") {
    const ProblemSpec spec = two_mode_problem();
    SeparablePrior prior;
    prior.k_bound = 2.0;
    prior.l_bound = 1.0;
    prior.psi.assign(2, [](double x0, double) { return 1.0 + 0.5 * std::tanh(x0); });
    const double t = 0.8;
    double x = 0.3;
    for (int it = 0; it < 200; ++it)
        x = std::exp(-0.5 * t) * oracle_conditional_mean(spec, prior, 0, t, x, 1.0);
    CHECK(std::abs(oracle_score(spec, prior, 0, t, x, 1.0)) < 1e-9);
}

TEST_CASE("bimodal psi stays under the per-mode crude-bound envelope at large t") {
    const ProblemSpec spec = two_mode_problem();
    const TiltMixture mix{0.5, -1.5, 1.5};
    const SeparablePrior prior = mixture_prior(spec, mix);
    const double t = 1.9;
    const double envelope = spec.lambda(0) / (1.0 - std::exp(-t));
    // E[S^2] <= envelope per mode; pointwise scores on the bulk lattice stay
    // within a loose multiple of its square root.
    const double margin = 6.0 * std::sqrt(envelope);
    for (int ix = 0; ix <= 20; ++ix) {
        const double x = -3.0 + 6.0 * ix / 20.0;
        CHECK(std::abs(oracle_score(spec, prior, 0, t, x, 1.0)) < margin);
    }
}

TEST_CASE("mc_score_norm with psi == 1 matches the exact expectation") {
    const ProblemSpec spec = two_mode_problem();
    const SeparablePrior prior = gaussian_separable_prior(spec.dim());
    ModeVector y(2);
    y[0] = 1.0;
    QuadratureSpec quad;
    for (double t : {0.05, 0.5}) {
        Rng rng(41);
        const McScoreNorm mc = mc_score_norm(spec, prior, y, t, 20000, quad, rng);
        const double expected = score_norm_expected(spec, t, ScoreNormVariant::Conditional);
        CHECK(mc.reliable);
        CHECK(std::abs(mc.value - expected) < 3.0 * mc.stderr_value + 1e-3 * expected);
    }
}

TEST_CASE("mc_score_norm under a bounded-Lipschitz psi respects both bounds") {
    const ProblemSpec spec = two_mode_problem(1.0, 1.0);
    SeparablePrior prior;
    prior.k_bound = 2.0;
    prior.l_bound = 1.0;
    prior.psi.assign(2, [](double x0, double) { return 1.0 + 0.5 * std::tanh(x0); });
    prior.validate_on_lattice(-8.0, 8.0, -8.0, 8.0);
    ModeVector y(2);
    y[0] = 0.7;
    QuadratureSpec quad;
    const double p3 = prop3_bound(spec, prior.k_bound, prior.l_bound);
    for (double t : {0.01, 0.1, 0.5, 0.99}) {
        Rng rng(43);
        const McScoreNorm mc = mc_score_norm(spec, prior, y, t, 4000, quad, rng);
        CHECK(mc.value <= crude_bound(spec, t));
        CHECK(mc.value <= p3);
    }
}

TEST_CASE("noiseless Gaussian score norm blows up as the observed trace over t") {
    CovarianceSpectrum cmu = build_spectrum(DecayLaw::Flat, 1.0, 2);
    ObservationModel obs;
    obs.observed_indices = {1};
    obs.sigma_b = 0.0;
    const ProblemSpec spec(cmu, cmu, obs, 2.0);
    const SeparablePrior prior = gaussian_separable_prior(2);
    ModeVector y(2);
    y[0] = 0.4;
    Rng rng(47);
    const double t = 1e-3;
    QuadratureSpec quad;
    const McScoreNorm mc = mc_score_norm(spec, prior, y, t, 20000, quad, rng);
    const double expected = spec.lambda(0) / (1.0 - std::exp(-t)) +
                            score_norm_expected(spec, t, ScoreNormVariant::Unconditional) -
                            std::exp(t) / (1.0 + (std::exp(t) - 1.0)) * spec.lambda(0);
    // dominated by lambda_1 / (1 - e^{-t}) ~ 1000
    CHECK(std::abs(mc.value - expected) / expected < 0.05);
}

TEST_CASE("SeparablePrior lattice validation catches violations") {
    SeparablePrior bad;
    bad.k_bound = 2.0;
    bad.l_bound = 0.1;
    bad.psi.assign(1, [](double x0, double) { return 1.0 + 0.5 * std::tanh(x0); });
    // true Lipschitz constant 0.5 exceeds the declared 0.1
    CHECK_THROWS(bad.validate_on_lattice(-2.0, 2.0, -1.0, 1.0));

    SeparablePrior out_of_band;
    out_of_band.k_bound = 1.5;
    out_of_band.l_bound = 3.0;
    out_of_band.psi.assign(1, [](double x0, double) { return 2.0 + std::sin(x0); });
    CHECK_THROWS(out_of_band.validate_on_lattice(-2.0, 2.0, -1.0, 1.0));

    CHECK_THROWS(SeparablePrior{{}, 0.5, 0.0}.validate_on_lattice(-1.0, 1.0, -1.0, 1.0));
}

TEST_CASE("quadrature and sampling preconditions are rejected") {
    const ProblemSpec spec = two_mode_problem();
    const SeparablePrior prior = gaussian_separable_prior(2);
    QuadratureSpec even;
    even.n_nodes = 800;
    CHECK_THROWS(oracle_conditional_mean(spec, prior, 0, 0.5, 0.0, 0.0, even));
    QuadratureSpec tiny;
    tiny.n_nodes = 21;
    CHECK_THROWS(oracle_conditional_mean(spec, prior, 0, 0.5, 0.0, 0.0, tiny));
    CHECK_THROWS(oracle_conditional_mean(spec, prior, 0, 0.0, 0.0, 0.0));
    QuadratureSpec quad;
    Rng rng(1);
    CHECK_THROWS(mc_score_norm(spec, prior, ModeVector(2), 0.5, 100, quad, rng));
}
