// stats.hpp — small statistical toolbox used by tests, the CLI checks, and the
// stylized-example analysis: moment summaries, Kolmogorov–Smirnov distances,
// least-squares line fits, a two-component 1D Gaussian mixture fit, kernel
// density estimates, and a stable content hash for manifests.

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace hsl {

struct MeanVar {
    double mean = 0.0;
    double variance = 0.0;  // unbiased
    std::size_t n = 0;

    double stderr_mean() const;
};

MeanVar mean_var(const std::vector<double>& xs);

// Sup distance between the empirical CDF of xs and a reference CDF.
double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf);

// Two-sample sup distance between empirical CDFs.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

// Critical value c(alpha) * sqrt((n+m)/(n*m)) of the two-sample KS test.
double ks_two_sample_threshold(std::size_t n, std::size_t m, double alpha);

// One-sample KS critical value c(alpha) / sqrt(n).
double ks_one_sample_threshold(std::size_t n, double alpha);

double normal_cdf(double x, double mean = 0.0, double sd = 1.0);

// Least-squares fit y ~ intercept + slope * x.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// Two-component 1D Gaussian mixture fitted by EM from a deterministic
// quartile initialization.
struct Gmm2 {
    double weight1 = 0.5;
    double mean1 = 0.0, sd1 = 1.0;
    double mean2 = 0.0, sd2 = 1.0;

    // Ashman separation D = |mean1-mean2| * sqrt(2 / (sd1^2 + sd2^2)).
    double separation() const;
};
Gmm2 fit_gmm2(const std::vector<double>& xs, int iterations = 300);

// Silverman's rule-of-thumb bandwidth.
double silverman_bandwidth(const std::vector<double>& xs);

// Gaussian KDE evaluated on an equispaced grid spanning the data hull plus
// three bandwidths of margin.
struct Kde {
    std::vector<double> x;
    std::vector<double> density;
    double bandwidth = 0.0;
};
Kde kde_silverman(const std::vector<double>& xs, std::size_t grid_points = 256);

// Equal-width histogram density (normalized to integrate to 1).
struct Histogram {
    std::vector<double> edges;    // size bins+1
    std::vector<double> density;  // size bins
};
Histogram histogram_density(const std::vector<double>& xs, std::size_t bins);

// Sliding-window median, for trend checks on noisy trajectories.
std::vector<double> median_filter(const std::vector<double>& xs, std::size_t window);

// FNV-1a, for config hashes in manifests.
std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace hsl
