// config.hpp — experiment configuration: INI-style sections of key = value
// pairs with strict unknown-key rejection, full defaults for every field,
// and a canonical serialization used for config hashing and round trips.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hsl/gaussian.hpp"
#include "hsl/spectral.hpp"

namespace hsl {

struct ProblemConfig {
    std::size_t d = 8;
    std::string prior_law = "polynomial";
    double prior_param = 2.0;
    std::string diffusion_law = "polynomial";
    double diffusion_param = 2.0;
    std::vector<std::size_t> observed = {1, 2, 3};
    double sigma_b = 0.5;
    double q_target = 1.0;  // > 0: per-observed-mode sigma = sqrt(mu_j / q_target)
    std::vector<double> y_observed = {2.0, -1.0, 0.5};
    double horizon_t = 2.0;
};

struct SdeConfig {
    std::size_t steps = 1000;
    double t_floor = 1e-3;
    std::size_t n_paths = 100000;
    std::uint64_t seed = 1;
};

struct DsmConfig {
    std::size_t n_samples = 1000000;
    std::size_t bins = 8;
    bool export_csv = false;
};

struct OracleConfig {
    std::string prior = "gaussian";  // gaussian | mixture | tanh | expsin
    double psi_param = 0.5;
    double k_bound = 2.0;
    double l_bound = 1.0;
    std::size_t quad_nodes = 801;
    double quad_half_width = 10.0;
    std::size_t mc_samples = 10000;
    double t_min = 0.01;
    std::size_t t_count = 12;
    std::size_t lattice_points = 21;
    double lattice_half_width = 3.0;
    std::vector<double> t_lattice = {0.01, 0.1, 1.0};
};

struct ScoreNormConfig {
    std::vector<double> t_list = {0.05, 0.5, 2.0};
    double blowup_t_min = 1e-4;
    double blowup_t_max = 1e-2;
    std::size_t blowup_t_count = 9;
    std::size_t mc_samples = 100000;
};

struct TrainConfig {
    int lift_width = 48;
    int layers = 4;
    int modes = 5;
    int time_features = 8;
    std::size_t batch = 128;
    std::size_t steps = 5000;
    double lr_initial = 1e-3;
    double lr_final = 5e-4;
    int grid_min = 15;
    int grid_max = 50;
    double beta_start = 1e-4;
    double beta_end = 2e-2;
    int schedule_steps = 500;
    std::string checkpoint = "checkpoint.bin";
};

struct SampleConfig {
    std::string checkpoint;  // defaults to <out>/checkpoint.bin
    std::size_t n_samples = 2000;
    std::vector<std::size_t> grid_sizes = {20, 25, 30, 35, 40};
    std::size_t extra_grid = 60;  // 0 disables the extrapolation grid
    std::vector<double> marginals_at = {-1.0, 0.0, 0.5};
    std::size_t kde_points = 256;
    std::size_t hist_bins = 40;
    double separation_min = 1.0;
};

struct OutputConfig {
    std::string directory = "out";
    std::string formats = "csv";
};

struct ExperimentConfig {
    ProblemConfig problem;
    SdeConfig sde;
    DsmConfig dsm;
    OracleConfig oracle;
    ScoreNormConfig score_norm;
    TrainConfig train;
    SampleConfig sample;
    OutputConfig output;
};

// Parses an INI-style config; unknown sections or keys are rejected with the
// offending line number in the message.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

// Canonical serialization with every default applied; identical configs
// serialize to identical text.
std::string serialize_config(const ExperimentConfig& config);

// Builds the mode-space problem from the [problem] section.
ProblemSpec make_problem(const ProblemConfig& p);

}  // namespace hsl
