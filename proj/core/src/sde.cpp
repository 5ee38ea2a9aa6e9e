#include "hsl/sde.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "hsl/parallel.hpp"

namespace hsl {

ScoreFunction analytic_gaussian_score(const ProblemSpec& spec, double t_floor) {
    // Inline the coefficient formulas; this is the hot path of ensemble runs.
    std::vector<double> pq(spec.dim()), pqq(spec.dim());
    std::vector<bool> pinned(spec.dim());
    for (std::size_t j = 0; j < spec.dim(); ++j) {
        const double q = spec.q(j);
        pinned[j] = std::isinf(q);
        pq[j] = pinned[j] ? 0.0 : spec.p(j) * (1.0 + q);
        pqq[j] = pinned[j] ? 0.0 : spec.p(j) * q;
    }
    ScoreFunction s;
    s.t_floor = t_floor;
    s.eval = [pq = std::move(pq), pqq = std::move(pqq), pinned = std::move(pinned)](
                 double t, const ModeVector& x, const ModeVector& y, ModeVector& out) {
        const double em1 = std::expm1(t);
        const double et = std::exp(t);
        const double et2 = std::exp(0.5 * t);
        for (std::size_t j = 0; j < out.dim(); ++j) {
            if (pinned[j]) {
                out[j] = (-et * x[j] + et2 * y[j]) / em1;
            } else {
                const double den = 1.0 + em1 * pq[j];
                out[j] = (-et * pq[j] * x[j] + et2 * pqq[j] * y[j]) / den;
            }
        }
    };
    return s;
}

ModeVector forward_transition(const ProblemSpec& spec, const ModeVector& x0, double t, Rng& rng) {
    if (t < 0.0) throw std::invalid_argument("forward_transition: requires t >= 0");
    if (x0.dim() != spec.dim())
        throw std::invalid_argument("forward_transition: x0 length mismatch");
    const double half_decay = std::exp(-0.5 * t);
    const double noise_scale = -std::expm1(-t);
    ModeVector out(spec.dim());
    for (std::size_t j = 0; j < spec.dim(); ++j)
        out[j] = half_decay * x0[j] + std::sqrt(spec.lambda(j) * noise_scale) * rng.normal();
    return out;
}

ReverseResult reverse_integrate(const ProblemSpec& spec, const ScoreFunction& score,
                                const ModeVector& y, const ModeVector& z0, std::size_t steps,
                                Rng& rng, bool record) {
    if (steps < 1) throw std::invalid_argument("reverse_integrate: steps must be >= 1");
    if (z0.dim() != spec.dim()) throw std::invalid_argument("reverse_integrate: z0 length mismatch");
    if (y.dim() != spec.dim()) throw std::invalid_argument("reverse_integrate: y length mismatch");
    const double span = spec.horizon_t - score.t_floor;
    if (!(span > 0.0)) throw std::invalid_argument("reverse_integrate: t_floor >= horizon");

    const double h = span / static_cast<double>(steps);
    const std::size_t d = spec.dim();

    std::vector<double> noise_scale(d);
    for (std::size_t j = 0; j < d; ++j) noise_scale[j] = std::sqrt(spec.lambda(j) * h);

    ReverseResult result;
    result.terminal = z0;
    ModeVector drift(d);
    if (record) {
        result.path.emplace();
        result.path->times.reserve(steps + 1);
        result.path->states.reserve(steps + 1);
        result.path->times.push_back(0.0);
        result.path->states.push_back(z0);
    }

    ModeVector& z = result.terminal;
    for (std::size_t k = 0; k < steps; ++k) {
        const double tau = h * static_cast<double>(k);
        score.eval(spec.horizon_t - tau, z, y, drift);
        for (std::size_t j = 0; j < d; ++j) {
            z[j] += (0.5 * z[j] + drift[j]) * h + noise_scale[j] * rng.normal();
            if (!std::isfinite(z[j]))
                throw std::runtime_error("reverse_integrate: non-finite state at step " +
                                         std::to_string(k + 1) + ", mode " + std::to_string(j + 1));
        }
        if (record) {
            result.path->times.push_back(h * static_cast<double>(k + 1));
            result.path->states.push_back(z);
        }
    }
    return result;
}

std::vector<ModeVector> ensemble_sample(const ProblemSpec& spec, const ScoreFunction& score,
                                        const ModeVector& y, std::size_t n_paths,
                                        std::size_t steps, std::uint64_t seed, int threads) {
    if (n_paths < 1) throw std::invalid_argument("ensemble_sample: n_paths must be >= 1");
    const ModeMoments start = exact_start_moments(spec, y);
    std::vector<double> start_scale(spec.dim());
    for (std::size_t j = 0; j < spec.dim(); ++j) start_scale[j] = std::sqrt(start.variance[j]);

    std::vector<ModeVector> out(n_paths);
    parallel_for(n_paths, threads, [&](std::size_t i) {
        Rng rng = Rng::substream(seed, i);
        ModeVector z0(spec.dim());
        for (std::size_t j = 0; j < spec.dim(); ++j)
            z0[j] = start.mean[j] + start_scale[j] * rng.normal();
        out[i] = reverse_integrate(spec, score, y, z0, steps, rng, false).terminal;
    });
    return out;
}

ModeMoments empirical_moments(const std::vector<ModeVector>& samples) {
    if (samples.size() < 2)
        throw std::invalid_argument("empirical_moments: need at least 2 samples");
    const std::size_t d = samples.front().dim();
    const double n = static_cast<double>(samples.size());
    ModeMoments out(d);
    for (const ModeVector& s : samples) {
        if (s.dim() != d) throw std::invalid_argument("empirical_moments: ragged samples");
        for (std::size_t j = 0; j < d; ++j) out.mean[j] += s[j];
    }
    for (std::size_t j = 0; j < d; ++j) out.mean[j] /= n;
    for (const ModeVector& s : samples) {
        for (std::size_t j = 0; j < d; ++j) {
            const double dj = s[j] - out.mean[j];
            out.variance[j] += dj * dj;
        }
    }
    for (std::size_t j = 0; j < d; ++j) out.variance[j] /= (n - 1.0);
    return out;
}

}  // namespace hsl
