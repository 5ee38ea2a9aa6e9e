// fno.hpp — a minimal discretization-invariant spectral operator for the
// amortized conditional score s(t, x_t, y) on 1D grids.
//
// Architecture: per grid point the input channels (sinusoidal features of
// log t, coordinate s, y(s), x_t(s)) are lifted to a W-channel space, pass
// through spectral layers (truncated discrete Fourier filter + pointwise
// skip + smooth ramp), and project back to one channel through two affine
// maps separated by a ramp. The raw output is scaled by (1-e^{-t})^{-1/2}
// so the network regresses an O(1) quantity at every diffusion time while
// the operator output stays in score units.
//
// Parameter shapes depend on the architecture only, never on the grid size;
// kept Fourier modes beyond a grid's Nyquist index are simply inactive on
// that grid. Gradients are hand-derived reverse mode, verified against
// central finite differences. Batch reductions run over fixed-size chunks
// merged in index order, so results are independent of the thread count.

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hsl/rng.hpp"
#include "hsl/spectral.hpp"

namespace hsl {

struct OperatorArch {
    int lift_width = 128;
    int n_spectral_layers = 5;
    int n_modes_kept = 5;
    int time_features = 8;  // sin/cos pairs of log t

    int in_channels() const { return time_features + 3; }
    void validate() const;
};

// Per-channel standardization applied to the (s, y, x) input channels.
struct ChannelStats {
    double mean_s = 0.0, sd_s = 1.0;
    double mean_y = 0.0, sd_y = 1.0;
    double mean_x = 0.0, sd_x = 1.0;
};

struct SpectralLayerParams {
    std::vector<Eigen::MatrixXd> filter_re;  // n_modes_kept matrices, W x W
    std::vector<Eigen::MatrixXd> filter_im;
    Eigen::MatrixXd skip_w;   // W x W
    Eigen::RowVectorXd skip_b;  // W
};

struct OperatorParams {
    OperatorArch arch;
    ChannelStats stats;
    Eigen::MatrixXd lift_w;  // in_channels x W
    Eigen::RowVectorXd lift_b;
    std::vector<SpectralLayerParams> layers;
    Eigen::MatrixXd proj1_w;  // W x W
    Eigen::RowVectorXd proj1_b;
    Eigen::MatrixXd proj2_w;  // W x 1
    Eigen::RowVectorXd proj2_b;  // 1

    static OperatorParams init(const OperatorArch& arch, std::uint64_t seed);
    static OperatorParams zeros(const OperatorArch& arch);

    std::size_t parameter_count() const;
    void set_zero();

    // Visits every parameter array in a fixed order (the checkpoint section
    // order and the optimizer state layout).
    void visit_arrays(const std::function<void(const std::string&, double*, std::size_t)>& fn);
    void visit_arrays(
        const std::function<void(const std::string&, const double*, std::size_t)>& fn) const;
};

// A training/evaluation batch sharing one grid; per-sample diffusion times.
struct FnoBatch {
    Grid grid{Grid::uniform(0.0, 1.0, 2)};
    std::vector<double> ts;   // B
    Eigen::MatrixXd y_vals;   // B x N
    Eigen::MatrixXd x_vals;   // B x N
    Eigen::MatrixXd targets;  // B x N, score units (backward only)
    std::vector<double> weights;  // optional per-sample loss weights

    std::size_t batch_size() const { return ts.size(); }
    void validate(bool with_targets) const;
};

// Score values on the grid for one (t, y, x) triple.
std::vector<double> op_forward(const OperatorParams& params, double t,
                               const std::vector<double>& y_vals,
                               const std::vector<double>& x_vals, const Grid& grid);

// Batched forward; row b holds the output for sample b.
Eigen::MatrixXd op_forward_batch(const OperatorParams& params, const FnoBatch& batch,
                                 int threads = 0);

// Mean over samples of weight_b * mean over grid points of the squared
// residual, plus exact gradients accumulated into `grad` (overwritten).
double op_backward(const OperatorParams& params, const FnoBatch& batch, OperatorParams& grad,
                   int threads = 0);

}  // namespace hsl
