#include "hsl/train.hpp"

#include <algorithm>
#include <cmath>

#include "hsl/dsm.hpp"
#include "hsl/sde.hpp"

namespace hsl {

void NoiseSchedule::validate() const {
    if (n_steps < 2) throw std::invalid_argument("NoiseSchedule: need at least 2 steps");
    if (!(variance_start > 0.0 && variance_end < 1.0 && variance_start < variance_end))
        throw std::invalid_argument(
            "NoiseSchedule: variances must be strictly increasing inside (0, 1)");
}

std::vector<double> NoiseSchedule::betas() const {
    validate();
    std::vector<double> b(static_cast<std::size_t>(n_steps));
    const double step = (variance_end - variance_start) / static_cast<double>(n_steps - 1);
    for (int k = 0; k < n_steps; ++k)
        b[static_cast<std::size_t>(k)] = variance_start + step * static_cast<double>(k);
    return b;
}

std::vector<double> NoiseSchedule::ou_times() const {
    const std::vector<double> b = betas();
    std::vector<double> t(b.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < b.size(); ++k) {
        acc -= std::log1p(-b[k]);
        t[k] = acc;
    }
    return t;
}

std::vector<double> StylizedFamily::sample_function(const Grid& grid, Rng& rng) const {
    const double a = rng.uniform() < 0.5 ? -quadratic_scale : quadratic_scale;
    const double eps = rng.exponential(gamma_scale);
    std::vector<double> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double s = grid.points[i];
        out[i] = a * s * s + eps;
    }
    return out;
}

Grid StylizedFamily::random_grid(Rng& rng) const {
    const auto span = static_cast<std::uint64_t>(grid_max - grid_min + 1);
    const auto n = static_cast<std::size_t>(grid_min) +
                   static_cast<std::size_t>(rng.uniform_index(span));
    std::vector<double> pts(n);
    // interior points jittered inside their cells; endpoints pinned so the
    // domain is always covered
    pts.front() = domain_min;
    pts.back() = domain_max;
    const double cell = (domain_max - domain_min) / static_cast<double>(n - 1);
    for (std::size_t i = 1; i + 1 < n; ++i)
        pts[i] = domain_min + cell * (static_cast<double>(i) + 0.8 * (rng.uniform() - 0.5));
    return Grid::from_points(std::move(pts), domain_min, domain_max);
}

FnoBatch make_stylized_batch(const StylizedFamily& family, const NoiseSchedule& schedule,
                             std::size_t batch, Rng& rng) {
    const std::vector<double> times = schedule.ou_times();
    FnoBatch out;
    out.grid = family.random_grid(rng);
    const auto n = static_cast<Eigen::Index>(out.grid.size());
    const auto b = static_cast<Eigen::Index>(batch);
    out.ts.resize(batch);
    out.weights.resize(batch);
    out.y_vals.resize(b, n);
    out.x_vals.resize(b, n);
    out.targets.resize(b, n);
    for (Eigen::Index i = 0; i < n; ++i)
        out.y_vals.col(i).setConstant(out.grid.points[static_cast<std::size_t>(i)]);

    for (std::size_t s = 0; s < batch; ++s) {
        const std::size_t k = rng.uniform_index(times.size());
        const double t = times[k];
        out.ts[s] = t;
        out.weights[s] = -std::expm1(-t);  // noise-unit reduction of the same minimizer
        const std::vector<double> x0 = family.sample_function(out.grid, rng);
        const double half_decay = std::exp(-0.5 * t);
        const double noise_sd = std::sqrt(-std::expm1(-t));
        const double inv = 1.0 / (-std::expm1(-t));
        for (Eigen::Index i = 0; i < n; ++i) {
            const double xt =
                half_decay * x0[static_cast<std::size_t>(i)] + noise_sd * rng.normal();
            out.x_vals(static_cast<Eigen::Index>(s), i) = xt;
            out.targets(static_cast<Eigen::Index>(s), i) =
                -inv * (xt - half_decay * x0[static_cast<std::size_t>(i)]);
        }
    }
    return out;
}

FnoBatch make_gaussian_dsm_batch(const ProblemSpec& spec, const Grid& grid, double t_floor,
                                 std::size_t batch, Rng& rng) {
    const PriorSampler sampler = gaussian_prior_sampler(spec);
    FnoBatch out;
    out.grid = grid;
    const auto n = static_cast<Eigen::Index>(grid.size());
    const auto b = static_cast<Eigen::Index>(batch);
    out.ts.resize(batch);
    out.weights.assign(batch, 1.0);
    out.y_vals.resize(b, n);
    out.x_vals.resize(b, n);
    out.targets.resize(b, n);
    for (std::size_t s = 0; s < batch; ++s) {
        const double t = rng.uniform(t_floor, spec.horizon_t);
        out.ts[s] = t;
        auto [x0, y] = sampler(rng);
        const ModeVector xt = forward_transition(spec, x0, t, rng);
        const ModeVector target = dsm_target(x0, xt, t);
        const std::vector<double> yg = evaluate_on_grid(y, grid);
        const std::vector<double> xg = evaluate_on_grid(xt, grid);
        const std::vector<double> tg = evaluate_on_grid(target, grid);
        for (Eigen::Index i = 0; i < n; ++i) {
            out.y_vals(static_cast<Eigen::Index>(s), i) = yg[static_cast<std::size_t>(i)];
            out.x_vals(static_cast<Eigen::Index>(s), i) = xg[static_cast<std::size_t>(i)];
            out.targets(static_cast<Eigen::Index>(s), i) = tg[static_cast<std::size_t>(i)];
        }
    }
    return out;
}

double scheduled_lr(const AdamOptions& opt, std::size_t step, std::size_t total_steps) {
    if (total_steps == 0) return opt.lr_initial;
    const double ratio = opt.lr_final / opt.lr_initial;
    // (1 + c*total)^power = ratio  =>  c = (ratio^{1/power} - 1) / total
    const double c = (std::pow(ratio, 1.0 / opt.decay_power) - 1.0) /
                     static_cast<double>(total_steps);
    return opt.lr_initial *
           std::pow(1.0 + c * static_cast<double>(step), opt.decay_power);
}

Adam::Adam(std::size_t n_params, AdamOptions options)
    : opt_(options), m_(n_params, 0.0), v_(n_params, 0.0) {}

void Adam::step(OperatorParams& params, OperatorParams& grad, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    std::size_t offset = 0;
    std::vector<std::pair<double*, std::size_t>> gslots;
    grad.visit_arrays([&gslots](const std::string&, double* p, std::size_t n) {
        gslots.emplace_back(p, n);
    });
    std::size_t slot = 0;
    params.visit_arrays([&](const std::string&, double* p, std::size_t n) {
        const double* g = gslots[slot].first;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t k = offset + i;
            m_[k] = opt_.beta1 * m_[k] + (1.0 - opt_.beta1) * g[i];
            v_[k] = opt_.beta2 * v_[k] + (1.0 - opt_.beta2) * g[i] * g[i];
            p[i] -= lr * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + opt_.epsilon);
        }
        offset += n;
        ++slot;
    });
}

namespace {

// Channel statistics over calibration batches; x/y/s means and spreads.
ChannelStats calibrate_stats(const BatchSource& source, const TrainOptions& options) {
    double sum_s = 0.0, sum_s2 = 0.0, sum_y = 0.0, sum_y2 = 0.0, sum_x = 0.0, sum_x2 = 0.0;
    double count = 0.0;
    for (std::size_t k = 0; k < options.stats_batches; ++k) {
        Rng rng = Rng::substream(options.seed, 0x5ca1ab1e00000000ULL + k);
        const FnoBatch batch = source(k, rng);
        for (std::size_t b = 0; b < batch.batch_size(); ++b) {
            for (std::size_t i = 0; i < batch.grid.size(); ++i) {
                const double s = batch.grid.points[i];
                const double y = batch.y_vals(static_cast<Eigen::Index>(b),
                                              static_cast<Eigen::Index>(i));
                const double x = batch.x_vals(static_cast<Eigen::Index>(b),
                                              static_cast<Eigen::Index>(i));
                sum_s += s;
                sum_s2 += s * s;
                sum_y += y;
                sum_y2 += y * y;
                sum_x += x;
                sum_x2 += x * x;
                count += 1.0;
            }
        }
    }
    const auto finalize = [count](double sum, double sum2, double& mean, double& sd) {
        mean = sum / count;
        const double var = std::max(sum2 / count - mean * mean, 1e-12);
        sd = std::sqrt(var);
    };
    ChannelStats st;
    finalize(sum_s, sum_s2, st.mean_s, st.sd_s);
    finalize(sum_y, sum_y2, st.mean_y, st.sd_y);
    finalize(sum_x, sum_x2, st.mean_x, st.sd_x);
    return st;
}

double zero_model_loss(const BatchSource& source, const TrainOptions& options) {
    double acc = 0.0;
    for (std::size_t k = 0; k < options.stats_batches; ++k) {
        Rng rng = Rng::substream(options.seed, 0x5ca1ab1e00000000ULL + k);
        const FnoBatch batch = source(k, rng);
        const auto n = static_cast<double>(batch.grid.size());
        double batch_acc = 0.0;
        for (std::size_t b = 0; b < batch.batch_size(); ++b) {
            const double weight = batch.weights.empty() ? 1.0 : batch.weights[b];
            batch_acc += weight / n *
                         batch.targets.row(static_cast<Eigen::Index>(b)).squaredNorm();
        }
        acc += batch_acc / static_cast<double>(batch.batch_size());
    }
    return acc / static_cast<double>(options.stats_batches);
}

}  // namespace

TrainResult train(OperatorParams init, const BatchSource& source, const TrainOptions& options) {
    TrainResult result;
    result.params = std::move(init);
    result.params.stats = calibrate_stats(source, options);
    result.baseline_loss = zero_model_loss(source, options);
    result.trajectory.reserve(options.steps);

    Adam adam(result.params.parameter_count(), options.adam);
    OperatorParams grad = OperatorParams::zeros(result.params.arch);

    double initial_loss = 0.0;
    std::size_t high_loss_streak = 0;
    for (std::size_t step = 0; step < options.steps; ++step) {
        Rng rng = Rng::substream(options.seed, step);
        const FnoBatch batch = source(step, rng);
        const double loss = op_backward(result.params, batch, grad, options.threads);
        const double lr = scheduled_lr(options.adam, step, options.steps);
        adam.step(result.params, grad, lr);
        result.trajectory.push_back({step, loss, lr});

        if (step == 0) initial_loss = loss;
        if (loss > 10.0 * initial_loss) {
            if (++high_loss_streak >= 100)
                throw TrainingDiverged("train: loss exceeded 10x the initial loss for 100 "
                                       "consecutive steps",
                                       result.trajectory);
        } else {
            high_loss_streak = 0;
        }
    }
    return result;
}

Eigen::MatrixXd sample_stylized(const OperatorParams& params, const std::vector<double>& y_vals,
                                const Grid& grid, const NoiseSchedule& schedule,
                                std::size_t n_samples, std::uint64_t seed, int threads) {
    if (y_vals.size() != grid.size())
        throw std::invalid_argument("sample_stylized: y length mismatch with grid");
    if (n_samples < 1) throw std::invalid_argument("sample_stylized: need n_samples >= 1");
    const std::vector<double> times = schedule.ou_times();
    const auto n = static_cast<Eigen::Index>(grid.size());

    // Sub-batched so workspaces stay small; per-sample substreams keep the
    // result independent of the batching and the thread count.
    constexpr std::size_t kSampleBlock = 256;
    Eigen::MatrixXd out(static_cast<Eigen::Index>(n_samples), n);
    for (std::size_t lo = 0; lo < n_samples; lo += kSampleBlock) {
        const std::size_t hi = std::min(n_samples, lo + kSampleBlock);
        const auto nb = static_cast<Eigen::Index>(hi - lo);
        std::vector<Rng> streams;
        streams.reserve(hi - lo);
        for (std::size_t i = lo; i < hi; ++i) streams.push_back(Rng::substream(seed, i));

        FnoBatch batch;
        batch.grid = grid;
        batch.ts.assign(hi - lo, times.back());
        batch.y_vals.resize(nb, n);
        batch.x_vals.resize(nb, n);
        for (Eigen::Index b = 0; b < nb; ++b)
            for (Eigen::Index i = 0; i < n; ++i)
                batch.y_vals(b, i) = y_vals[static_cast<std::size_t>(i)];

        // invariant start N(0, I) of the white-noise forward dynamics
        for (Eigen::Index b = 0; b < nb; ++b)
            for (Eigen::Index i = 0; i < n; ++i)
                batch.x_vals(b, i) = streams[static_cast<std::size_t>(b)].normal();

        for (std::size_t k = times.size(); k-- > 1;) {
            const double t = times[k];
            const double h = times[k] - times[k - 1];
            const double noise_sd = std::sqrt(h);
            std::fill(batch.ts.begin(), batch.ts.end(), t);
            const Eigen::MatrixXd score = op_forward_batch(params, batch, threads);
            for (Eigen::Index b = 0; b < nb; ++b) {
                Rng& rng = streams[static_cast<std::size_t>(b)];
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double z = batch.x_vals(b, i);
                    batch.x_vals(b, i) =
                        z + (0.5 * z + score(b, i)) * h + noise_sd * rng.normal();
                }
            }
        }
        out.middleRows(static_cast<Eigen::Index>(lo), nb) = batch.x_vals;
    }
    return out;
}

std::vector<double> marginal_at(const Eigen::MatrixXd& samples, const Grid& grid, double s) {
    const auto& pts = grid.points;
    if (s < pts.front() || s > pts.back())
        throw std::invalid_argument("marginal_at: query outside the grid hull");
    std::size_t hi = 1;
    while (hi + 1 < pts.size() && pts[hi] < s) ++hi;
    const std::size_t lo = hi - 1;
    const double span = pts[hi] - pts[lo];
    const double frac = span > 0.0 ? (s - pts[lo]) / span : 0.0;
    std::vector<double> out(static_cast<std::size_t>(samples.rows()));
    for (Eigen::Index r = 0; r < samples.rows(); ++r)
        out[static_cast<std::size_t>(r)] =
            (1.0 - frac) * samples(r, static_cast<Eigen::Index>(lo)) +
            frac * samples(r, static_cast<Eigen::Index>(hi));
    return out;
}

}  // namespace hsl
