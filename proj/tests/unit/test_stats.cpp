#include <doctest.h>

#include <cmath>
#include <vector>

#include "hsl/rng.hpp"
#include "hsl/stats.hpp"

using namespace hsl;

TEST_CASE("mean_var and stderr") {
    const MeanVar mv = mean_var({1.0, 2.0, 3.0, 4.0});
    CHECK(mv.mean == doctest::Approx(2.5));
    CHECK(mv.variance == doctest::Approx(5.0 / 3.0));
    CHECK(mv.stderr_mean() == doctest::Approx(std::sqrt(5.0 / 12.0)));
    CHECK_THROWS(mean_var({}));
}

TEST_CASE("one-sample KS accepts its own distribution and rejects a shifted one") {
    Rng rng(5);
    std::vector<double> xs(5000);
    for (double& x : xs) x = rng.normal();
    const double d0 = ks_statistic(xs, [](double x) { return normal_cdf(x); });
    CHECK(d0 < ks_one_sample_threshold(xs.size(), 1e-3));
    const double d1 = ks_statistic(xs, [](double x) { return normal_cdf(x, 0.5, 1.0); });
    CHECK(d1 > ks_one_sample_threshold(xs.size(), 1e-3));
}

TEST_CASE("two-sample KS distinguishes separated samples") {
    Rng rng(6);
    std::vector<double> a(3000), b(3000), c(3000);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = rng.normal();
        b[i] = rng.normal();
        c[i] = rng.normal() + 0.4;
    }
    CHECK(ks_two_sample(a, b) < ks_two_sample_threshold(a.size(), b.size(), 1e-3));
    CHECK(ks_two_sample(a, c) > ks_two_sample_threshold(a.size(), c.size(), 1e-3));
}

TEST_CASE("fit_line recovers exact linear data") {
    const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
    const std::vector<double> y{0.5, 2.5, 4.5, 6.5};
    const LineFit f = fit_line(x, y);
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(-1.5));
    CHECK_THROWS(fit_line({1.0, 1.0}, {2.0, 3.0}));
}

TEST_CASE("two-component mixture fit separates bimodal data, not Gaussian data") {
    Rng rng(7);
    std::vector<double> bimodal(4000), gauss(4000);
    for (std::size_t i = 0; i < bimodal.size(); ++i) {
        bimodal[i] = (rng.uniform() < 0.5 ? -2.0 : 2.0) + 0.6 * rng.normal();
        gauss[i] = 2.0 * rng.normal();
    }
    const Gmm2 b = fit_gmm2(bimodal);
    CHECK(b.separation() > 3.0);
    const Gmm2 g = fit_gmm2(gauss);
    CHECK(g.separation() < 1.0);
}

TEST_CASE("histogram and KDE integrate to one") {
    Rng rng(8);
    std::vector<double> xs(2000);
    for (double& x : xs) x = rng.normal();

    const Histogram h = histogram_density(xs, 32);
    double mass = 0.0;
    for (std::size_t b = 0; b < h.density.size(); ++b)
        mass += h.density[b] * (h.edges[b + 1] - h.edges[b]);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));

    const Kde k = kde_silverman(xs, 512);
    double kde_mass = 0.0;
    for (std::size_t i = 1; i < k.x.size(); ++i)
        kde_mass += 0.5 * (k.density[i] + k.density[i - 1]) * (k.x[i] - k.x[i - 1]);
    CHECK(std::abs(kde_mass - 1.0) < 0.01);
}

TEST_CASE("median filter flattens impulsive noise") {
    std::vector<double> xs(21, 1.0);
    xs[10] = 100.0;
    const std::vector<double> f = median_filter(xs, 5);
    for (double v : f) CHECK(v == 1.0);
    CHECK_THROWS(median_filter(xs, 4));
}

TEST_CASE("fnv1a64 is stable") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("hello") != fnv1a64("hellp"));
}

TEST_CASE("rng substreams are independent of each other and reproducible") {
    Rng a = Rng::substream(9, 0);
    Rng b = Rng::substream(9, 1);
    Rng a2 = Rng::substream(9, 0);
    bool any_diff = false;
    for (int i = 0; i < 16; ++i) {
        const double va = a.uniform();
        CHECK(va == a2.uniform());
        if (va != b.uniform()) any_diff = true;
    }
    CHECK(any_diff);
}

TEST_CASE("rng normal has standard moments") {
    Rng rng(10);
    const std::size_t n = 200000;
    double sum = 0.0, sum2 = 0.0, sum4 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sum2 += x * x;
        sum4 += x * x * x * x;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(std::abs(sum2 / n - 1.0) < 0.01);
    CHECK(std::abs(sum4 / n - 3.0) < 0.1);
}
