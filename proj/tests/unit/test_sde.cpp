#include <doctest.h>

#include <cmath>
#include <vector>

#include "hsl/gaussian.hpp"
#include "hsl/rng.hpp"
#include "hsl/sde.hpp"
#include "hsl/stats.hpp"

using namespace hsl;

namespace {

ProblemSpec crit_problem(double horizon = 2.0) {
    // D = 8, mu_j = lambda_j = j^-2, modes 1-3 observed with q = 1
    CovarianceSpectrum cmu = build_spectrum(DecayLaw::Polynomial, 2.0, 8);
    ObservationModel obs;
    obs.observed_indices = {1, 2, 3};
    obs.sigma_b = 1.0;
    obs.mode_sigmas = {std::sqrt(cmu.eigenvalues[0]), std::sqrt(cmu.eigenvalues[1]),
                       std::sqrt(cmu.eigenvalues[2])};
    return ProblemSpec(cmu, cmu, obs, horizon);
}

ModeVector crit_y(const ProblemSpec& spec) {
    ModeVector y(spec.dim());
    y[0] = 2.0;
    y[1] = -1.0;
    y[2] = 0.5;
    return y;
}

}  // namespace

TEST_CASE("forward_transition identity at t = 0") {
    const ProblemSpec spec = crit_problem();
    Rng rng(1);
    ModeVector x0(spec.dim());
    for (std::size_t j = 0; j < spec.dim(); ++j) x0[j] = static_cast<double>(j) - 3.0;
    const ModeVector out = forward_transition(spec, x0, 0.0, rng);
    for (std::size_t j = 0; j < spec.dim(); ++j) CHECK(out[j] == x0[j]);
}

TEST_CASE("forward_transition matches the invariant measure for large t") {
    const ProblemSpec spec = crit_problem();
    Rng rng(2);
    ModeVector x0(spec.dim(), 5.0);
    const std::size_t n = 100000;
    std::vector<double> sum(spec.dim(), 0.0), sum2(spec.dim(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const ModeVector v = forward_transition(spec, x0, 50.0, rng);
        for (std::size_t j = 0; j < spec.dim(); ++j) {
            sum[j] += v[j];
            sum2[j] += v[j] * v[j];
        }
    }
    for (std::size_t j = 0; j < spec.dim(); ++j) {
        const double mean = sum[j] / static_cast<double>(n);
        const double var = sum2[j] / static_cast<double>(n) - mean * mean;
        const double lambda = spec.lambda(j);
        CHECK(std::abs(mean) < 3.0 * std::sqrt(lambda / static_cast<double>(n)));
        // sampling noise of a Gaussian variance estimate: sd = var * sqrt(2/n)
        CHECK(std::abs(var - lambda) < 3.0 * lambda * std::sqrt(2.0 / static_cast<double>(n)));
    }
}

TEST_CASE("forward_transition one-step moments at t = ln 2") {
    // x0 = 2 on mode 1, lambda_1 = 1: mean 2/sqrt(2), var 0.5
    ObservationModel obs;
    const ProblemSpec spec(build_spectrum(DecayLaw::Flat, 1.0, 1),
                           build_spectrum(DecayLaw::Flat, 1.0, 1), obs, 2.0);
    Rng rng(3);
    ModeVector x0(1);
    x0[0] = 2.0;
    const std::size_t n = 100000;
    std::vector<double> xs(n);
    for (std::size_t i = 0; i < n; ++i) xs[i] = forward_transition(spec, x0, std::log(2.0), rng)[0];
    const MeanVar mv = mean_var(xs);
    CHECK(std::abs(mv.mean - std::sqrt(2.0)) < 3.0 * std::sqrt(0.5 / static_cast<double>(n)));
    CHECK(std::abs(mv.variance - 0.5) < 3.0 * 0.5 * std::sqrt(2.0 / static_cast<double>(n)));
}

TEST_CASE("forward_transition is exactly Gaussian (KS, mode 1)") {
    const ProblemSpec spec = crit_problem();
    const std::size_t n = 10000;
    ModeVector x0(spec.dim());
    x0[0] = 1.5;
    for (double t : {0.1, 1.0, 5.0}) {
        Rng rng(100 + static_cast<std::uint64_t>(t * 10));
        const double mean = std::exp(-0.5 * t) * x0[0];
        const double sd = std::sqrt(spec.lambda(0) * (1.0 - std::exp(-t)));
        std::vector<double> xs(n);
        for (std::size_t i = 0; i < n; ++i) xs[i] = forward_transition(spec, x0, t, rng)[0];
        const double d = ks_statistic(xs, [&](double x) { return normal_cdf(x, mean, sd); });
        CHECK(d < ks_one_sample_threshold(n, 1e-3));
    }
}

TEST_CASE("reverse_integrate with zero score and zero diffusion is the linear ODE") {
    // dZ = Z/2 dtau: z(T - t_floor) = z0 e^{(T - t_floor)/2}; Euler converges
    ObservationModel obs;
    CovarianceSpectrum lambda0;
    lambda0.eigenvalues = {1e-30};  // degenerate diffusion
    const ProblemSpec spec(build_spectrum(DecayLaw::Flat, 1.0, 1), lambda0, obs, 2.0);
    ScoreFunction zero_score;
    zero_score.t_floor = 1e-3;
    zero_score.eval = [](double, const ModeVector&, const ModeVector&, ModeVector& out) {
        out[0] = 0.0;
    };
    ModeVector z0(1);
    z0[0] = 1.0;
    ModeVector y(1);
    Rng rng(5);
    const double span = 2.0 - 1e-3;
    const double exact = std::exp(0.5 * span);
    double prev_err = 1e9;
    for (std::size_t steps : {100, 1000, 10000}) {
        const ReverseResult r = reverse_integrate(spec, zero_score, y, z0, steps, rng);
        const double err = std::abs(r.terminal[0] - exact);
        CHECK(err < prev_err);
        prev_err = err;
    }
    CHECK(prev_err < 1e-4 * exact);
}

TEST_CASE("reverse_integrate records a path and rejects bad input") {
    const ProblemSpec spec = crit_problem();
    const ScoreFunction score = analytic_gaussian_score(spec);
    const ModeVector y = crit_y(spec);
    ModeVector z0(spec.dim());
    Rng rng(6);
    const ReverseResult r = reverse_integrate(spec, score, y, z0, 16, rng, true);
    REQUIRE(r.path.has_value());
    CHECK(r.path->times.size() == 17);
    CHECK(r.path->states.size() == 17);
    CHECK(r.path->times.front() == 0.0);
    CHECK(r.path->times.back() == doctest::Approx(spec.horizon_t - score.t_floor));
    for (std::size_t j = 0; j < spec.dim(); ++j)
        CHECK(r.path->states.back()[j] == r.terminal[j]);

    CHECK_THROWS(reverse_integrate(spec, score, y, z0, 0, rng));
    CHECK_THROWS(reverse_integrate(spec, score, y, ModeVector(3), 8, rng));
}

TEST_CASE("reverse_integrate reports the offending step on blow-up") {
    const ProblemSpec spec = crit_problem();
    ScoreFunction exploding;
    exploding.t_floor = 1e-3;
    exploding.eval = [](double, const ModeVector& x, const ModeVector&, ModeVector& out) {
        for (std::size_t j = 0; j < x.dim(); ++j) out[j] = 1e308;
    };
    ModeVector z0(spec.dim());
    Rng rng(7);
    CHECK_THROWS_WITH_AS(reverse_integrate(spec, exploding, crit_y(spec), z0, 4, rng),
                         doctest::Contains("non-finite state"), std::runtime_error);
}

TEST_CASE("ensemble_sample is deterministic and thread-count independent") {
    const ProblemSpec spec = crit_problem();
    const ScoreFunction score = analytic_gaussian_score(spec);
    const ModeVector y = crit_y(spec);
    const auto a = ensemble_sample(spec, score, y, 64, 50, 42, 1);
    const auto b = ensemble_sample(spec, score, y, 64, 50, 42, 2);
    const auto c = ensemble_sample(spec, score, y, 64, 50, 42, 0);
    REQUIRE(a.size() == 64);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < spec.dim(); ++j) {
            CHECK(a[i][j] == b[i][j]);
            CHECK(a[i][j] == c[i][j]);
        }
    }
}

TEST_CASE("posterior sampling matches the closed form (reduced-size run)") {
    // Reduced version of the acceptance run: n = 20000 paths, 400 steps.
    const ProblemSpec spec = crit_problem();
    const ScoreFunction score = analytic_gaussian_score(spec, 1e-3);
    const ModeVector y = crit_y(spec);
    const std::size_t n = 20000;
    const auto samples = ensemble_sample(spec, score, y, n, 400, 1234, 0);
    const ModeMoments mm = empirical_moments(samples);
    const ModeMoments post = posterior_moments(spec, y);
    for (std::size_t j = 0; j < spec.dim(); ++j) {
        const double se = std::sqrt(post.variance[j] / static_cast<double>(n));
        CHECK(std::abs(mm.mean[j] - post.mean[j]) < 3.5 * se + 0.02 * std::abs(post.mean[j]));
        CHECK(std::abs(mm.variance[j] - post.variance[j]) < 0.05 * post.variance[j]);
    }
}

TEST_CASE("unconditional ensemble reproduces the prior") {
    // q = 0 everywhere: terminal law is N(0, C_mu)
    ObservationModel obs;
    CovarianceSpectrum cmu = build_spectrum(DecayLaw::Polynomial, 2.0, 4);
    const ProblemSpec spec(cmu, cmu, obs, 2.0);
    const ScoreFunction score = analytic_gaussian_score(spec);
    const std::size_t n = 20000;
    const auto samples = ensemble_sample(spec, score, ModeVector(4), n, 400, 99, 0);
    const ModeMoments mm = empirical_moments(samples);
    for (std::size_t j = 0; j < spec.dim(); ++j) {
        CHECK(std::abs(mm.mean[j]) < 3.5 * std::sqrt(spec.mu(j) / static_cast<double>(n)));
        CHECK(std::abs(mm.variance[j] - spec.mu(j)) < 0.05 * spec.mu(j));
    }
}

TEST_CASE("Euler weak error against the closed-form moments has order ~1") {
    // The Euler chain for the linear reverse SDE has exact moment
    // recursions; integrating them is the deterministic cross-check of the
    // closed forms, with no Monte Carlo noise in the weak-error measurement.
    CovarianceSpectrum cmu = build_spectrum(DecayLaw::Flat, 1.0, 1);
    ObservationModel obs;
    obs.observed_indices = {1};
    obs.sigma_b = 1.0 / 3.0;  // q = 9
    const ProblemSpec spec(cmu, cmu, obs, 2.0);
    ModeVector y(1);
    y[0] = 3.0;
    const double t_floor = 1e-3;

    // Z_{T - t_floor} from the exact start has the law of X_{t_floor} | Y.
    const ModeMoments target = marginal_t_moments(spec, y, t_floor);
    const ModeMoments start = exact_start_moments(spec, y);

    std::vector<double> log_h, log_err_mean, log_err_var;
    for (std::size_t steps : {250, 500, 1000, 2000}) {
        const double h = (spec.horizon_t - t_floor) / static_cast<double>(steps);
        double m = start.mean[0], v = start.variance[0];
        for (std::size_t k = 0; k < steps; ++k) {
            const double t = spec.horizon_t - h * static_cast<double>(k);
            const ScoreCoeffs c = score_coeffs(spec, t);
            const double alpha = 1.0 + h * (0.5 + c.a[0]);
            m = alpha * m + h * c.b[0] * y[0];
            v = alpha * alpha * v + spec.lambda(0) * h;
        }
        log_h.push_back(std::log(h));
        log_err_mean.push_back(std::log(std::abs(m - target.mean[0])));
        log_err_var.push_back(std::log(std::abs(v - target.variance[0])));
    }
    const LineFit fit_mean = fit_line(log_h, log_err_mean);
    const LineFit fit_var = fit_line(log_h, log_err_var);
    CHECK(fit_mean.slope > 1.0 - 0.3);
    CHECK(fit_mean.slope < 1.0 + 0.3);
    CHECK(fit_var.slope > 1.0 - 0.3);
    CHECK(fit_var.slope < 1.0 + 0.3);
}

TEST_CASE("score-norm Monte Carlo matches the closed form at several times") {
    const ProblemSpec spec = crit_problem();
    const ModeVector y = crit_y(spec);
    const std::size_t n = 100000;
    for (double t : {0.05, 0.5, 2.0}) {
        Rng rng(1000 + static_cast<std::uint64_t>(100 * t));
        const ModeMoments marg = marginal_t_moments(spec, y, t);
        const ScoreCoeffs c = score_coeffs(spec, t);
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double norm2 = 0.0;
            for (std::size_t j = 0; j < spec.dim(); ++j) {
                const double xt = marg.mean[j] + std::sqrt(marg.variance[j]) * rng.normal();
                const double s = c.a[j] * xt + c.b[j] * y[j];
                norm2 += s * s;
            }
            acc += norm2;
        }
        acc /= static_cast<double>(n);
        const double expected = score_norm_expected(spec, t, ScoreNormVariant::Conditional);
        CHECK(std::abs(acc - expected) / expected < 0.01);
    }
}

TEST_CASE("empirical_moments basics") {
    ModeVector v(2);
    v[0] = 1.0;
    v[1] = -2.0;
    const ModeMoments same = empirical_moments({v, v});
    CHECK(same.mean[0] == 1.0);
    CHECK(same.variance[0] == 0.0);
    CHECK(same.variance[1] == 0.0);

    ModeVector p(1), m(1);
    p[0] = 3.0;
    m[0] = -3.0;
    const ModeMoments pm = empirical_moments({p, m});
    CHECK(pm.mean[0] == 0.0);
    CHECK(pm.variance[0] == doctest::Approx(18.0));  // 2 c^2 with c = 3

    CHECK_THROWS(empirical_moments({v}));

    // CLT check against sample_gaussian(flat(1), 0)
    const CovarianceSpectrum flat = build_spectrum(DecayLaw::Flat, 1.0, 1);
    Rng rng(8);
    std::vector<ModeVector> draws;
    draws.reserve(100000);
    for (int i = 0; i < 100000; ++i) draws.push_back(sample_gaussian(flat, ModeVector(1), rng));
    const ModeMoments mm = empirical_moments(draws);
    CHECK(std::abs(mm.mean[0]) < 0.013);
    CHECK(std::abs(mm.variance[0] - 1.0) < 0.013);
}
