#include "hsl/dsm.hpp"

#include <cmath>
#include <stdexcept>

#include "hsl/csv.hpp"
#include "hsl/parallel.hpp"
#include "hsl/sde.hpp"

namespace hsl {

ModeVector dsm_target(const ModeVector& x0, const ModeVector& xt, double t) {
    if (!(t > 0.0)) throw std::invalid_argument("dsm_target: requires t > 0");
    if (x0.dim() != xt.dim()) throw std::invalid_argument("dsm_target: length mismatch");
    const double inv = 1.0 / (-std::expm1(-t));
    const double half_decay = std::exp(-0.5 * t);
    ModeVector out(x0.dim());
    for (std::size_t j = 0; j < x0.dim(); ++j) out[j] = -inv * (xt[j] - half_decay * x0[j]);
    return out;
}

PriorSampler gaussian_prior_sampler(const ProblemSpec& spec) {
    return [spec](Rng& rng) {
        ModeVector x0 = sample_gaussian(spec.prior, ModeVector(spec.dim()), rng);
        ModeVector y(spec.dim());
        for (std::size_t k = 0; k < spec.obs.observed_indices.size(); ++k) {
            const std::size_t j = spec.obs.observed_indices[k] - 1;
            const double sigma =
                spec.obs.mode_sigmas.empty() ? spec.obs.sigma_b : spec.obs.mode_sigmas[k];
            y[j] = x0[j] + sigma * rng.normal();
        }
        return std::make_pair(std::move(x0), std::move(y));
    };
}

std::vector<DsmSample> make_dsm_dataset(const ProblemSpec& spec, const PriorSampler& sampler,
                                        std::size_t n, double t_floor, std::uint64_t seed,
                                        int threads) {
    if (n < 1) throw std::invalid_argument("make_dsm_dataset: need n >= 1");
    if (!(t_floor >= 0.0 && t_floor < spec.horizon_t))
        throw std::invalid_argument("make_dsm_dataset: t_floor outside [0, T)");
    std::vector<DsmSample> out(n);
    parallel_for(n, threads, [&](std::size_t i) {
        Rng rng = Rng::substream(seed, i);
        DsmSample& s = out[i];
        s.t = rng.uniform(t_floor, spec.horizon_t);
        auto [x0, y] = sampler(rng);
        s.x0 = std::move(x0);
        s.y = std::move(y);
        s.xt = forward_transition(spec, s.x0, s.t, rng);
    });
    return out;
}

LinearFit fit_linear_score(const std::vector<DsmSample>& dataset, std::size_t mode, double t_lo,
                           double t_hi) {
    // Accumulate the 2x2 normal equations for target ~ a*xt + b*y (no
    // intercept; the population target is exactly linear with zero offset).
    double sxx = 0.0, sxy = 0.0, syy = 0.0, sxt = 0.0, syt = 0.0, stt = 0.0;
    std::size_t n = 0;
    for (const DsmSample& s : dataset) {
        if (s.t < t_lo || s.t >= t_hi) continue;
        const ModeVector target = dsm_target(s.x0, s.xt, s.t);
        const double x = s.xt[mode];
        const double y = s.y[mode];
        const double g = target[mode];
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
        sxt += x * g;
        syt += y * g;
        stt += g * g;
        ++n;
    }
    if (n < 100) throw std::invalid_argument("fit_linear_score: fewer than 100 samples in bin");

    LinearFit fit;
    fit.n = n;
    const double det = sxx * syy - sxy * sxy;
    const double scale = sxx * syy;
    if (syy <= 0.0 || det <= 1e-12 * scale) {
        // Unobserved mode (y identically 0) or otherwise singular design:
        // pin b to its true value 0 and regress on xt alone.
        fit.b_pinned = true;
        fit.a = sxt / sxx;
        fit.b = 0.0;
        const double rss = std::max(0.0, stt - fit.a * sxt);
        const double sigma2 = rss / static_cast<double>(n - 1);
        fit.se_a = std::sqrt(sigma2 / sxx);
        fit.se_b = 0.0;
        return fit;
    }
    fit.a = (syy * sxt - sxy * syt) / det;
    fit.b = (sxx * syt - sxy * sxt) / det;
    const double rss = std::max(0.0, stt - fit.a * sxt - fit.b * syt);
    const double sigma2 = rss / static_cast<double>(n - 2);
    fit.se_a = std::sqrt(sigma2 * syy / det);
    fit.se_b = std::sqrt(sigma2 * sxx / det);
    return fit;
}

std::size_t LinearScoreModel::bin_of(double t) const {
    if (bin_edges.size() < 2) throw std::logic_error("LinearScoreModel: empty model");
    if (t <= bin_edges.front()) return 0;
    for (std::size_t b = 0; b + 1 < bin_edges.size(); ++b)
        if (t < bin_edges[b + 1]) return b;
    return n_bins() - 1;
}

void LinearScoreModel::evaluate(double t, const ModeVector& x, const ModeVector& y,
                                ModeVector& out) const {
    const std::vector<LinearFit>& f = fit[bin_of(t)];
    for (std::size_t j = 0; j < x.dim(); ++j) out[j] = f[j].a * x[j] + f[j].b * y[j];
}

LinearScoreModel fit_linear_score_model(const std::vector<DsmSample>& dataset,
                                        const ProblemSpec& spec, std::size_t n_bins,
                                        double t_floor) {
    if (n_bins < 1) throw std::invalid_argument("fit_linear_score_model: need >= 1 bin");
    LinearScoreModel model;
    model.bin_edges.resize(n_bins + 1);
    const double width = (spec.horizon_t - t_floor) / static_cast<double>(n_bins);
    for (std::size_t b = 0; b <= n_bins; ++b)
        model.bin_edges[b] = t_floor + width * static_cast<double>(b);
    model.bin_edges.back() = spec.horizon_t + 1e-12;  // include samples at exactly T
    model.fit.resize(n_bins);
    for (std::size_t b = 0; b < n_bins; ++b) {
        model.fit[b].reserve(spec.dim());
        for (std::size_t j = 0; j < spec.dim(); ++j)
            model.fit[b].push_back(
                fit_linear_score(dataset, j, model.bin_edges[b], model.bin_edges[b + 1]));
    }
    return model;
}

double dsm_loss(const ScoreModelFn& model, const std::vector<DsmSample>& batch) {
    if (batch.empty()) throw std::invalid_argument("dsm_loss: empty batch");
    double acc = 0.0;
    ModeVector predicted(batch.front().x0.dim());
    for (const DsmSample& s : batch) {
        const ModeVector target = dsm_target(s.x0, s.xt, s.t);
        model(s.t, s.xt, s.y, predicted);
        for (std::size_t j = 0; j < target.dim(); ++j) {
            const double r = target[j] - predicted[j];
            acc += r * r;
        }
    }
    return acc / static_cast<double>(batch.size());
}

void export_dsm_csv(std::ostream& out, const std::vector<DsmSample>& dataset) {
    out << "t,mode,x0,xt,y\n";
    for (const DsmSample& s : dataset) {
        for (std::size_t j = 0; j < s.x0.dim(); ++j) {
            out << format_double(s.t) << ',' << (j + 1) << ',' << format_double(s.x0[j]) << ','
                << format_double(s.xt[j]) << ',' << format_double(s.y[j]) << '\n';
        }
    }
}

}  // namespace hsl
