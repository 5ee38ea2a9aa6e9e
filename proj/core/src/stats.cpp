#include "hsl/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace hsl {

double MeanVar::stderr_mean() const { return n > 1 ? std::sqrt(variance / static_cast<double>(n)) : 0.0; }

MeanVar mean_var(const std::vector<double>& xs) {
    if (xs.empty()) throw std::invalid_argument("mean_var: empty input");
    MeanVar out;
    out.n = xs.size();
    out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double acc = 0.0;
        for (double x : xs) acc += (x - out.mean) * (x - out.mean);
        out.variance = acc / static_cast<double>(xs.size() - 1);
    }
    return out;
}

double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
    if (xs.empty()) throw std::invalid_argument("ks_statistic: empty sample");
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double sup = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        sup = std::max(sup, std::abs(static_cast<double>(i + 1) / n - f));
        sup = std::max(sup, std::abs(f - static_cast<double>(i) / n));
    }
    return sup;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double sup = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= v) ++i;
        while (j < b.size() && b[j] <= v) ++j;
        sup = std::max(sup, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return sup;
}

namespace {
double ks_c(double alpha) { return std::sqrt(-0.5 * std::log(alpha / 2.0)); }
}  // namespace

double ks_two_sample_threshold(std::size_t n, std::size_t m, double alpha) {
    const double dn = static_cast<double>(n), dm = static_cast<double>(m);
    return ks_c(alpha) * std::sqrt((dn + dm) / (dn * dm));
}

double ks_one_sample_threshold(std::size_t n, double alpha) {
    return ks_c(alpha) / std::sqrt(static_cast<double>(n));
}

double normal_cdf(double x, double mean, double sd) {
    return 0.5 * std::erfc(-(x - mean) / (sd * std::numbers::sqrt2));
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_line: need matched inputs of size >= 2");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_line: degenerate abscissa");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    return fit;
}

double Gmm2::separation() const {
    return std::abs(mean1 - mean2) * std::sqrt(2.0 / (sd1 * sd1 + sd2 * sd2));
}

namespace {
double normal_pdf(double x, double mean, double sd) {
    const double z = (x - mean) / sd;
    return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}
}  // namespace

Gmm2 fit_gmm2(const std::vector<double>& xs, int iterations) {
    if (xs.size() < 10) throw std::invalid_argument("fit_gmm2: need at least 10 samples");
    std::vector<double> sorted = xs;
    std::sort(sorted.begin(), sorted.end());
    const auto quantile = [&](double p) {
        return sorted[static_cast<std::size_t>(p * static_cast<double>(sorted.size() - 1))];
    };
    Gmm2 g;
    g.mean1 = quantile(0.25);
    g.mean2 = quantile(0.75);
    const MeanVar mv = mean_var(xs);
    g.sd1 = g.sd2 = std::max(1e-6, std::sqrt(mv.variance));
    g.weight1 = 0.5;

    const std::size_t n = xs.size();
    std::vector<double> resp(n);
    for (int it = 0; it < iterations; ++it) {
        double w_acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double p1 = g.weight1 * normal_pdf(xs[i], g.mean1, g.sd1);
            const double p2 = (1.0 - g.weight1) * normal_pdf(xs[i], g.mean2, g.sd2);
            resp[i] = p1 / (p1 + p2 + 1e-300);
            w_acc += resp[i];
        }
        const double w1 = w_acc / static_cast<double>(n);
        if (w_acc < 1e-9 || w_acc > static_cast<double>(n) - 1e-9) break;  // one component died
        double m1 = 0.0, m2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            m1 += resp[i] * xs[i];
            m2 += (1.0 - resp[i]) * xs[i];
        }
        m1 /= w_acc;
        m2 /= (static_cast<double>(n) - w_acc);
        double v1 = 0.0, v2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            v1 += resp[i] * (xs[i] - m1) * (xs[i] - m1);
            v2 += (1.0 - resp[i]) * (xs[i] - m2) * (xs[i] - m2);
        }
        v1 /= w_acc;
        v2 /= (static_cast<double>(n) - w_acc);
        g.weight1 = w1;
        g.mean1 = m1;
        g.mean2 = m2;
        g.sd1 = std::sqrt(std::max(v1, 1e-12));
        g.sd2 = std::sqrt(std::max(v2, 1e-12));
    }
    return g;
}

double silverman_bandwidth(const std::vector<double>& xs) {
    if (xs.size() < 2) throw std::invalid_argument("silverman_bandwidth: need >= 2 samples");
    std::vector<double> sorted = xs;
    std::sort(sorted.begin(), sorted.end());
    const MeanVar mv = mean_var(xs);
    const double sd = std::sqrt(mv.variance);
    const auto quantile = [&](double p) {
        return sorted[static_cast<std::size_t>(p * static_cast<double>(sorted.size() - 1))];
    };
    const double iqr = quantile(0.75) - quantile(0.25);
    double spread = std::min(sd, iqr / 1.34);
    if (spread <= 0.0) spread = std::max(sd, 1e-12);
    return 0.9 * spread * std::pow(static_cast<double>(xs.size()), -0.2);
}

Kde kde_silverman(const std::vector<double>& xs, std::size_t grid_points) {
    Kde out;
    out.bandwidth = silverman_bandwidth(xs);
    const auto [lo_it, hi_it] = std::minmax_element(xs.begin(), xs.end());
    const double lo = *lo_it - 3.0 * out.bandwidth;
    const double hi = *hi_it + 3.0 * out.bandwidth;
    out.x.resize(grid_points);
    out.density.resize(grid_points);
    const double step = (hi - lo) / static_cast<double>(grid_points - 1);
    for (std::size_t i = 0; i < grid_points; ++i) {
        const double g = lo + step * static_cast<double>(i);
        out.x[i] = g;
        double acc = 0.0;
        for (double x : xs) acc += normal_pdf(g, x, out.bandwidth);
        out.density[i] = acc / static_cast<double>(xs.size());
    }
    return out;
}

Histogram histogram_density(const std::vector<double>& xs, std::size_t bins) {
    if (bins < 1 || xs.empty()) throw std::invalid_argument("histogram_density: bad input");
    const auto [lo_it, hi_it] = std::minmax_element(xs.begin(), xs.end());
    double lo = *lo_it, hi = *hi_it;
    if (hi <= lo) hi = lo + 1.0;
    Histogram h;
    h.edges.resize(bins + 1);
    h.density.assign(bins, 0.0);
    const double width = (hi - lo) / static_cast<double>(bins);
    for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + width * static_cast<double>(i);
    for (double x : xs) {
        auto b = static_cast<std::size_t>((x - lo) / width);
        if (b >= bins) b = bins - 1;
        h.density[b] += 1.0;
    }
    for (double& d : h.density) d /= static_cast<double>(xs.size()) * width;
    return h;
}

std::vector<double> median_filter(const std::vector<double>& xs, std::size_t window) {
    if (window < 1 || window % 2 == 0)
        throw std::invalid_argument("median_filter: window must be odd and >= 1");
    const std::size_t half = window / 2;
    std::vector<double> out(xs.size());
    std::vector<double> buf;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(xs.size(), i + half + 1);
        buf.assign(xs.begin() + static_cast<std::ptrdiff_t>(lo),
                   xs.begin() + static_cast<std::ptrdiff_t>(hi));
        std::nth_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(buf.size() / 2),
                         buf.end());
        out[i] = buf[buf.size() / 2];
    }
    return out;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace hsl
