#include "hsl/fno.hpp"

#include <atomic>
#include <cmath>
#include <condition_variable>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "hsl/parallel.hpp"

namespace hsl {

namespace {

constexpr std::size_t kChunk = 16;  // fixed reduction granularity

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

void add_in_place(OperatorParams& dst, const OperatorParams& src) {
    std::vector<std::pair<double*, std::size_t>> slots;
    dst.visit_arrays([&slots](const std::string&, double* p, std::size_t n) {
        slots.emplace_back(p, n);
    });
    std::size_t k = 0;
    src.visit_arrays([&slots, &k](const std::string&, const double* p, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) slots[k].first[i] += p[i];
        ++k;
    });
}
double softplus_grad(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double ramp(double x) { return x > 0.0 ? x : 0.0; }
double ramp_grad(double x) { return x > 0.0 ? 1.0 : 0.0; }

double inv_sqrt_noise(double t) { return 1.0 / std::sqrt(-std::expm1(-t)); }

// Truncated DFT tables for a grid of size n: analysis rows for the kept
// modes and the symmetry weights of the real inverse transform.
struct DftTables {
    Eigen::MatrixXd cos_mat;  // m_eff x n
    Eigen::MatrixXd sin_mat;  // m_eff x n
    Eigen::VectorXd sym;      // m_eff
    int m_eff = 0;
};

DftTables make_dft_tables(int n, int modes) {
    DftTables t;
    t.m_eff = std::min(modes, n / 2 + 1);
    t.cos_mat.resize(t.m_eff, n);
    t.sin_mat.resize(t.m_eff, n);
    t.sym.resize(t.m_eff);
    for (int m = 0; m < t.m_eff; ++m) {
        t.sym(m) = (m == 0 || 2 * m == n) ? 1.0 : 2.0;
        for (int i = 0; i < n; ++i) {
            const double angle =
                2.0 * std::numbers::pi * static_cast<double>(m) * static_cast<double>(i) /
                static_cast<double>(n);
            t.cos_mat(m, i) = std::cos(angle);
            t.sin_mat(m, i) = std::sin(angle);
        }
    }
    return t;
}

struct LayerCache {
    Eigen::MatrixXd input;    // rows x W
    Eigen::MatrixXd preact;   // rows x W
    Eigen::MatrixXd hat_re;   // (samples*m_eff) x W
    Eigen::MatrixXd hat_im;
};

struct ForwardCache {
    Eigen::MatrixXd features;  // rows x C
    std::vector<LayerCache> layers;
    Eigen::MatrixXd proj_pre;  // rows x W, pre-ramp
    Eigen::MatrixXd proj_act;  // rows x W
    Eigen::MatrixXd raw;       // rows x 1
};

void assemble_features(const OperatorParams& params, const FnoBatch& batch, std::size_t b_lo,
                       std::size_t b_hi, Eigen::MatrixXd& features) {
    const OperatorArch& arch = params.arch;
    const ChannelStats& st = params.stats;
    const auto n = static_cast<Eigen::Index>(batch.grid.size());
    const auto rows = static_cast<Eigen::Index>(b_hi - b_lo) * n;
    features.resize(rows, arch.in_channels());
    const int pairs = arch.time_features / 2;
    for (std::size_t b = b_lo; b < b_hi; ++b) {
        const double z = std::log(batch.ts[b]);
        const auto row0 = static_cast<Eigen::Index>(b - b_lo) * n;
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::Index r = row0 + i;
            double omega = 0.25;
            for (int k = 0; k < pairs; ++k) {
                features(r, 2 * k) = std::sin(omega * z);
                features(r, 2 * k + 1) = std::cos(omega * z);
                omega *= 2.0;
            }
            const double s = batch.grid.points[static_cast<std::size_t>(i)];
            features(r, arch.time_features + 0) = (s - st.mean_s) / st.sd_s;
            features(r, arch.time_features + 1) =
                (batch.y_vals(static_cast<Eigen::Index>(b), i) - st.mean_y) / st.sd_y;
            features(r, arch.time_features + 2) =
                (batch.x_vals(static_cast<Eigen::Index>(b), i) - st.mean_x) / st.sd_x;
        }
    }
}

// Forward pass for samples [b_lo, b_hi); raw (unscaled) outputs in cache.raw.
void forward_chunk(const OperatorParams& params, const FnoBatch& batch, const DftTables& dft,
                   std::size_t b_lo, std::size_t b_hi, ForwardCache& cache) {
    const auto n = static_cast<Eigen::Index>(batch.grid.size());
    const auto nb = static_cast<Eigen::Index>(b_hi - b_lo);
    const int w = params.arch.lift_width;
    const int m_eff = dft.m_eff;

    assemble_features(params, batch, b_lo, b_hi, cache.features);

    cache.layers.resize(params.layers.size());
    Eigen::MatrixXd h = (cache.features * params.lift_w).rowwise() + params.lift_b;

    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const SpectralLayerParams& layer = params.layers[l];
        LayerCache& lc = cache.layers[l];
        lc.input = h;

        lc.hat_re.resize(nb * m_eff, w);
        lc.hat_im.resize(nb * m_eff, w);
        Eigen::MatrixXd spectral = Eigen::MatrixXd::Zero(nb * n, w);
        Eigen::MatrixXd g_re(m_eff, w), g_im(m_eff, w);
        for (Eigen::Index b = 0; b < nb; ++b) {
            const auto rows = lc.input.middleRows(b * n, n);
            auto a_re = lc.hat_re.middleRows(b * m_eff, m_eff);
            auto a_im = lc.hat_im.middleRows(b * m_eff, m_eff);
            a_re.noalias() = dft.cos_mat * rows;
            a_im.noalias() = -(dft.sin_mat * rows);
            for (int m = 0; m < m_eff; ++m) {
                g_re.row(m).noalias() =
                    a_re.row(m) * layer.filter_re[static_cast<std::size_t>(m)] -
                    a_im.row(m) * layer.filter_im[static_cast<std::size_t>(m)];
                g_im.row(m).noalias() =
                    a_re.row(m) * layer.filter_im[static_cast<std::size_t>(m)] +
                    a_im.row(m) * layer.filter_re[static_cast<std::size_t>(m)];
            }
            g_re.array().colwise() *= dft.sym.array();
            g_im.array().colwise() *= dft.sym.array();
            spectral.middleRows(b * n, n).noalias() =
                (dft.cos_mat.transpose() * g_re - dft.sin_mat.transpose() * g_im) /
                static_cast<double>(n);
        }

        lc.preact = spectral;
        lc.preact.noalias() += lc.input * layer.skip_w;
        lc.preact.rowwise() += layer.skip_b;
        h = lc.preact.unaryExpr([](double v) { return softplus(v); });
    }

    cache.proj_pre = (h * params.proj1_w).rowwise() + params.proj1_b;
    cache.proj_act = cache.proj_pre.unaryExpr([](double v) { return ramp(v); });
    cache.raw = (cache.proj_act * params.proj2_w).rowwise() + params.proj2_b;

    // keep the last hidden state for the projection backward
    cache.layers.emplace_back();
    cache.layers.back().input = std::move(h);
}

// Loss contribution and parameter gradients for one chunk.
double backward_chunk(const OperatorParams& params, const FnoBatch& batch, const DftTables& dft,
                      std::size_t b_lo, std::size_t b_hi, OperatorParams& grad) {
    const auto n = static_cast<Eigen::Index>(batch.grid.size());
    const auto nb = static_cast<Eigen::Index>(b_hi - b_lo);
    const int w = params.arch.lift_width;
    const int m_eff = dft.m_eff;
    const double batch_total = static_cast<double>(batch.batch_size());

    ForwardCache cache;
    forward_chunk(params, batch, dft, b_lo, b_hi, cache);

    // Residuals in score units; loss is the weighted mean-square residual.
    double loss = 0.0;
    Eigen::MatrixXd d_raw(nb * n, 1);
    for (Eigen::Index b = 0; b < nb; ++b) {
        const std::size_t bi = b_lo + static_cast<std::size_t>(b);
        const double scale = inv_sqrt_noise(batch.ts[bi]);
        const double weight = batch.weights.empty() ? 1.0 : batch.weights[bi];
        const double norm = weight / (batch_total * static_cast<double>(n));
        for (Eigen::Index i = 0; i < n; ++i) {
            const double out = cache.raw(b * n + i, 0) * scale;
            const double r = out - batch.targets(static_cast<Eigen::Index>(bi), i);
            loss += norm * r * r;
            d_raw(b * n + i, 0) = 2.0 * norm * r * scale;
        }
    }

    const Eigen::MatrixXd& last_h = cache.layers.back().input;
    grad.proj2_w.noalias() += cache.proj_act.transpose() * d_raw;
    grad.proj2_b += d_raw.colwise().sum();
    Eigen::MatrixXd d_proj_act = d_raw * params.proj2_w.transpose();
    Eigen::MatrixXd d_proj_pre =
        d_proj_act.array() * cache.proj_pre.unaryExpr([](double v) { return ramp_grad(v); }).array();
    grad.proj1_w.noalias() += last_h.transpose() * d_proj_pre;
    grad.proj1_b += d_proj_pre.colwise().sum();
    Eigen::MatrixXd d_h = d_proj_pre * params.proj1_w.transpose();

    Eigen::MatrixXd dg_re(m_eff, w), dg_im(m_eff, w);
    for (std::size_t l = params.layers.size(); l-- > 0;) {
        const SpectralLayerParams& layer = params.layers[l];
        SpectralLayerParams& glayer = grad.layers[l];
        const LayerCache& lc = cache.layers[l];

        Eigen::MatrixXd d_pre =
            d_h.array() * lc.preact.unaryExpr([](double v) { return softplus_grad(v); }).array();

        glayer.skip_w.noalias() += lc.input.transpose() * d_pre;
        glayer.skip_b += d_pre.colwise().sum();
        Eigen::MatrixXd d_input = d_pre * layer.skip_w.transpose();

        for (Eigen::Index b = 0; b < nb; ++b) {
            const auto d_spec = d_pre.middleRows(b * n, n);
            const auto a_re = lc.hat_re.middleRows(b * m_eff, m_eff);
            const auto a_im = lc.hat_im.middleRows(b * m_eff, m_eff);
            dg_re.noalias() = dft.cos_mat * d_spec / static_cast<double>(n);
            dg_im.noalias() = -(dft.sin_mat * d_spec) / static_cast<double>(n);
            dg_re.array().colwise() *= dft.sym.array();
            dg_im.array().colwise() *= dft.sym.array();
            Eigen::MatrixXd da_re(m_eff, w), da_im(m_eff, w);
            for (int m = 0; m < m_eff; ++m) {
                const auto mm = static_cast<std::size_t>(m);
                glayer.filter_re[mm].noalias() += a_re.row(m).transpose() * dg_re.row(m) +
                                                  a_im.row(m).transpose() * dg_im.row(m);
                glayer.filter_im[mm].noalias() += a_re.row(m).transpose() * dg_im.row(m) -
                                                  a_im.row(m).transpose() * dg_re.row(m);
                da_re.row(m).noalias() = dg_re.row(m) * layer.filter_re[mm].transpose() +
                                         dg_im.row(m) * layer.filter_im[mm].transpose();
                da_im.row(m).noalias() = dg_im.row(m) * layer.filter_re[mm].transpose() -
                                         dg_re.row(m) * layer.filter_im[mm].transpose();
            }
            d_input.middleRows(b * n, n).noalias() += dft.cos_mat.transpose() * da_re;
            d_input.middleRows(b * n, n).noalias() -= dft.sin_mat.transpose() * da_im;
        }
        d_h = std::move(d_input);
    }

    grad.lift_w.noalias() += cache.features.transpose() * d_h;
    grad.lift_b += d_h.colwise().sum();
    return loss;
}

}  // namespace

void OperatorArch::validate() const {
    if (lift_width < 1 || n_spectral_layers < 1 || n_modes_kept < 1)
        throw std::invalid_argument("OperatorArch: width, layers, and modes must be >= 1");
    if (time_features < 2 || time_features % 2 != 0)
        throw std::invalid_argument("OperatorArch: time_features must be even and >= 2");
}

void FnoBatch::validate(bool with_targets) const {
    const auto b = static_cast<Eigen::Index>(ts.size());
    const auto n = static_cast<Eigen::Index>(grid.size());
    if (b == 0) throw std::invalid_argument("FnoBatch: empty batch");
    if (y_vals.rows() != b || y_vals.cols() != n || x_vals.rows() != b || x_vals.cols() != n)
        throw std::invalid_argument("FnoBatch: y/x shape mismatch with grid and batch");
    if (with_targets && (targets.rows() != b || targets.cols() != n))
        throw std::invalid_argument("FnoBatch: target shape mismatch");
    if (!weights.empty() && weights.size() != ts.size())
        throw std::invalid_argument("FnoBatch: weights length mismatch");
    for (double t : ts)
        if (!(t > 0.0)) throw std::invalid_argument("FnoBatch: diffusion times must be > 0");
}

OperatorParams OperatorParams::zeros(const OperatorArch& arch) {
    arch.validate();
    OperatorParams p;
    p.arch = arch;
    const int w = arch.lift_width;
    p.lift_w = Eigen::MatrixXd::Zero(arch.in_channels(), w);
    p.lift_b = Eigen::RowVectorXd::Zero(w);
    p.layers.resize(static_cast<std::size_t>(arch.n_spectral_layers));
    for (auto& layer : p.layers) {
        layer.filter_re.assign(static_cast<std::size_t>(arch.n_modes_kept),
                               Eigen::MatrixXd::Zero(w, w));
        layer.filter_im.assign(static_cast<std::size_t>(arch.n_modes_kept),
                               Eigen::MatrixXd::Zero(w, w));
        layer.skip_w = Eigen::MatrixXd::Zero(w, w);
        layer.skip_b = Eigen::RowVectorXd::Zero(w);
    }
    p.proj1_w = Eigen::MatrixXd::Zero(w, w);
    p.proj1_b = Eigen::RowVectorXd::Zero(w);
    p.proj2_w = Eigen::MatrixXd::Zero(w, 1);
    p.proj2_b = Eigen::RowVectorXd::Zero(1);
    return p;
}

OperatorParams OperatorParams::init(const OperatorArch& arch, std::uint64_t seed) {
    OperatorParams p = zeros(arch);
    Rng rng(seed);
    const int w = arch.lift_width;
    const auto glorot = [&rng](Eigen::MatrixXd& m) {
        const double a = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-a, a);
    };
    glorot(p.lift_w);
    const double filter_scale = 1.0 / static_cast<double>(w * w);
    for (auto& layer : p.layers) {
        for (std::size_t m = 0; m < layer.filter_re.size(); ++m) {
            for (Eigen::Index j = 0; j < layer.filter_re[m].cols(); ++j) {
                for (Eigen::Index i = 0; i < layer.filter_re[m].rows(); ++i) {
                    layer.filter_re[m](i, j) = filter_scale * rng.uniform();
                    layer.filter_im[m](i, j) = filter_scale * rng.uniform();
                }
            }
        }
        glorot(layer.skip_w);
    }
    glorot(p.proj1_w);
    glorot(p.proj2_w);
    return p;
}

std::size_t OperatorParams::parameter_count() const {
    std::size_t total = 0;
    const_cast<OperatorParams*>(this)->visit_arrays(
        [&total](const std::string&, double*, std::size_t n) { total += n; });
    return total;
}

void OperatorParams::set_zero() {
    visit_arrays([](const std::string&, double* data, std::size_t n) {
        std::fill(data, data + n, 0.0);
    });
}

void OperatorParams::visit_arrays(
    const std::function<void(const std::string&, double*, std::size_t)>& fn) {
    fn("lift_w", lift_w.data(), static_cast<std::size_t>(lift_w.size()));
    fn("lift_b", lift_b.data(), static_cast<std::size_t>(lift_b.size()));
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const std::string prefix = "layer" + std::to_string(l) + ".";
        for (std::size_t m = 0; m < layers[l].filter_re.size(); ++m) {
            fn(prefix + "filter_re" + std::to_string(m), layers[l].filter_re[m].data(),
               static_cast<std::size_t>(layers[l].filter_re[m].size()));
            fn(prefix + "filter_im" + std::to_string(m), layers[l].filter_im[m].data(),
               static_cast<std::size_t>(layers[l].filter_im[m].size()));
        }
        fn(prefix + "skip_w", layers[l].skip_w.data(),
           static_cast<std::size_t>(layers[l].skip_w.size()));
        fn(prefix + "skip_b", layers[l].skip_b.data(),
           static_cast<std::size_t>(layers[l].skip_b.size()));
    }
    fn("proj1_w", proj1_w.data(), static_cast<std::size_t>(proj1_w.size()));
    fn("proj1_b", proj1_b.data(), static_cast<std::size_t>(proj1_b.size()));
    fn("proj2_w", proj2_w.data(), static_cast<std::size_t>(proj2_w.size()));
    fn("proj2_b", proj2_b.data(), static_cast<std::size_t>(proj2_b.size()));
}

void OperatorParams::visit_arrays(
    const std::function<void(const std::string&, const double*, std::size_t)>& fn) const {
    const_cast<OperatorParams*>(this)->visit_arrays(
        [&fn](const std::string& name, double* data, std::size_t n) { fn(name, data, n); });
}

std::vector<double> op_forward(const OperatorParams& params, double t,
                               const std::vector<double>& y_vals,
                               const std::vector<double>& x_vals, const Grid& grid) {
    if (y_vals.size() != grid.size() || x_vals.size() != grid.size())
        throw std::invalid_argument("op_forward: y/x length mismatch with grid");
    FnoBatch batch;
    batch.grid = grid;
    batch.ts = {t};
    const auto n = static_cast<Eigen::Index>(grid.size());
    batch.y_vals = Eigen::Map<const Eigen::MatrixXd>(y_vals.data(), 1, n);
    batch.x_vals = Eigen::Map<const Eigen::MatrixXd>(x_vals.data(), 1, n);
    batch.validate(false);

    const DftTables dft = make_dft_tables(static_cast<int>(grid.size()), params.arch.n_modes_kept);
    ForwardCache cache;
    forward_chunk(params, batch, dft, 0, 1, cache);
    const double scale = inv_sqrt_noise(t);
    std::vector<double> out(grid.size());
    for (Eigen::Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = cache.raw(i, 0) * scale;
    return out;
}

Eigen::MatrixXd op_forward_batch(const OperatorParams& params, const FnoBatch& batch,
                                 int threads) {
    batch.validate(false);
    const auto n = static_cast<Eigen::Index>(batch.grid.size());
    const std::size_t b_total = batch.batch_size();
    const DftTables dft =
        make_dft_tables(static_cast<int>(batch.grid.size()), params.arch.n_modes_kept);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(b_total), n);
    const std::size_t n_chunks = (b_total + kChunk - 1) / kChunk;
    parallel_for(n_chunks, threads, [&](std::size_t c) {
        const std::size_t lo = c * kChunk;
        const std::size_t hi = std::min(b_total, lo + kChunk);
        ForwardCache cache;
        forward_chunk(params, batch, dft, lo, hi, cache);
        for (std::size_t b = lo; b < hi; ++b) {
            const double scale = inv_sqrt_noise(batch.ts[b]);
            for (Eigen::Index i = 0; i < n; ++i)
                out(static_cast<Eigen::Index>(b), i) =
                    cache.raw(static_cast<Eigen::Index>(b - lo) * n + i, 0) * scale;
        }
    });
    return out;
}

double op_backward(const OperatorParams& params, const FnoBatch& batch, OperatorParams& grad,
                   int threads) {
    batch.validate(true);
    grad = OperatorParams::zeros(params.arch);
    grad.stats = params.stats;
    const std::size_t b_total = batch.batch_size();
    const std::size_t n_chunks = (b_total + kChunk - 1) / kChunk;
    const DftTables dft =
        make_dft_tables(static_cast<int>(batch.grid.size()), params.arch.n_modes_kept);

    // Chunk partials merged in chunk order in both the serial and parallel
    // paths, so the floating-point accumulation order is identical for every
    // thread count.
    const int nt = std::min<std::size_t>(resolve_threads(threads), n_chunks);
    if (nt <= 1) {
        double loss = 0.0;
        OperatorParams partial = OperatorParams::zeros(params.arch);
        for (std::size_t c = 0; c < n_chunks; ++c) {
            const std::size_t lo = c * kChunk;
            partial.set_zero();
            loss +=
                backward_chunk(params, batch, dft, lo, std::min(b_total, lo + kChunk), partial);
            add_in_place(grad, partial);
        }
        return loss;
    }

    // Parallel chunk evaluation with strictly ordered merging, so the
    // floating-point accumulation order never depends on the thread count.
    std::atomic<std::size_t> next_work{0};
    std::size_t merge_turn = 0;
    double loss = 0.0;
    std::mutex merge_mutex;
    std::condition_variable merge_cv;
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(nt));
    for (int tix = 0; tix < nt; ++tix) {
        pool.emplace_back([&, tix]() {
            try {
                OperatorParams partial = OperatorParams::zeros(params.arch);
                while (true) {
                    const std::size_t c = next_work.fetch_add(1);
                    if (c >= n_chunks) break;
                    partial.set_zero();
                    const std::size_t lo = c * kChunk;
                    const double chunk_loss = backward_chunk(params, batch, dft, lo,
                                                             std::min(b_total, lo + kChunk), partial);
                    std::unique_lock<std::mutex> lock(merge_mutex);
                    merge_cv.wait(lock, [&]() { return merge_turn >= c; });
                    if (merge_turn == static_cast<std::size_t>(-1)) break;
                    loss += chunk_loss;
                    add_in_place(grad, partial);
                    ++merge_turn;
                    merge_cv.notify_all();
                }
            } catch (...) {
                errors[static_cast<std::size_t>(tix)] = std::current_exception();
                std::lock_guard<std::mutex> lock(merge_mutex);
                merge_turn = static_cast<std::size_t>(-1);  // release waiters
                merge_cv.notify_all();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return loss;
}

}  // namespace hsl
