#include "hsl/spectral.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hsl {

DecayLaw decay_law_from_string(const std::string& name) {
    if (name == "polynomial") return DecayLaw::Polynomial;
    if (name == "exponential") return DecayLaw::Exponential;
    if (name == "flat") return DecayLaw::Flat;
    throw std::invalid_argument("unknown decay law: " + name);
}

std::string to_string(DecayLaw law) {
    switch (law) {
        case DecayLaw::Polynomial: return "polynomial";
        case DecayLaw::Exponential: return "exponential";
        case DecayLaw::Flat: return "flat";
    }
    return "?";
}

double CovarianceSpectrum::trace() const {
    double s = 0.0;
    for (double e : eigenvalues) s += e;
    return s;
}

CovarianceSpectrum build_spectrum(DecayLaw law, double param, std::size_t d) {
    if (d == 0) throw std::invalid_argument("build_spectrum: D must be >= 1");
    CovarianceSpectrum spec;
    spec.eigenvalues.resize(d);
    switch (law) {
        case DecayLaw::Polynomial:
            if (param <= 1.0)
                throw std::invalid_argument("build_spectrum: polynomial law needs alpha > 1");
            for (std::size_t j = 0; j < d; ++j)
                spec.eigenvalues[j] = std::pow(static_cast<double>(j + 1), -param);
            break;
        case DecayLaw::Exponential:
            if (param <= 0.0)
                throw std::invalid_argument("build_spectrum: exponential law needs gamma > 0");
            for (std::size_t j = 0; j < d; ++j)
                spec.eigenvalues[j] = std::exp(-param * static_cast<double>(j + 1));
            break;
        case DecayLaw::Flat:
            if (param <= 0.0) throw std::invalid_argument("build_spectrum: flat law needs c > 0");
            for (std::size_t j = 0; j < d; ++j) spec.eigenvalues[j] = param;
            break;
    }
    return spec;
}

Grid Grid::uniform(double a, double b, std::size_t n) {
    if (n < 2) throw std::invalid_argument("Grid: need at least 2 points");
    if (!(b > a)) throw std::invalid_argument("Grid: domain must have positive length");
    Grid g;
    g.domain_min = a;
    g.domain_max = b;
    g.points.resize(n);
    const double h = (b - a) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) g.points[i] = a + h * static_cast<double>(i);
    g.points.back() = b;
    return g;
}

Grid Grid::from_points(std::vector<double> pts) {
    if (pts.size() < 2) throw std::invalid_argument("Grid: need at least 2 points");
    const double a = pts.front();
    const double b = pts.back();
    return from_points(std::move(pts), a, b);
}

Grid Grid::from_points(std::vector<double> pts, double a, double b) {
    if (pts.size() < 2) throw std::invalid_argument("Grid: need at least 2 points");
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (!(pts[i] > pts[i - 1]))
            throw std::invalid_argument("Grid: points must be strictly increasing");
    }
    if (!(a <= pts.front()) || !(b >= pts.back()))
        throw std::invalid_argument("Grid: points outside domain interval");
    Grid g;
    g.points = std::move(pts);
    g.domain_min = a;
    g.domain_max = b;
    return g;
}

bool Grid::is_uniform(double rel_tol) const {
    const double h = (points.back() - points.front()) / static_cast<double>(points.size() - 1);
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (std::abs(points[i] - points[i - 1] - h) > rel_tol * h) return false;
    }
    return true;
}

double basis_value(std::size_t j, double s, double a, double b) {
    const double len = b - a;
    return std::sqrt(2.0 / len) *
           std::cos(static_cast<double>(j) * std::numbers::pi * (s - a) / len);
}

ModeVector sample_gaussian(const CovarianceSpectrum& spectrum, const ModeVector& mean, Rng& rng) {
    if (mean.dim() != spectrum.dim())
        throw std::invalid_argument("sample_gaussian: mean length does not match spectrum");
    ModeVector out(spectrum.dim());
    for (std::size_t j = 0; j < spectrum.dim(); ++j)
        out[j] = mean[j] + std::sqrt(spectrum.eigenvalues[j]) * rng.normal();
    return out;
}

std::vector<double> evaluate_on_grid(const ModeVector& v, const Grid& grid) {
    std::vector<double> out(grid.size(), 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < v.dim(); ++j)
            acc += v[j] * basis_value(j + 1, grid.points[i], grid.domain_min, grid.domain_max);
        out[i] = acc;
    }
    return out;
}

std::vector<double> trapezoid_weights(const Grid& grid) {
    const std::size_t n = grid.size();
    std::vector<double> w(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double h = grid.points[i + 1] - grid.points[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    return w;
}

ModeVector project_to_modes(const std::vector<double>& values, const Grid& grid, std::size_t d) {
    const std::size_t n = grid.size();
    if (values.size() != n) throw std::invalid_argument("project_to_modes: value/grid mismatch");
    if (n < d) throw std::invalid_argument("project_to_modes: need N >= D");

    Eigen::MatrixXd basis(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            basis(i, j) = basis_value(j + 1, grid.points[i], grid.domain_min, grid.domain_max);

    ModeVector out(d);
    if (grid.is_uniform() && n >= d + 2) {
        // Uniform grid: trapezoid quadrature is discretely orthogonal for the
        // cosine basis, so <f, v_j> is exact up to rounding.
        const std::vector<double> w = trapezoid_weights(grid);
        for (std::size_t j = 0; j < d; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += w[i] * values[i] * basis(i, j);
            out[j] = acc;
        }
        return out;
    }

    Eigen::Map<const Eigen::VectorXd> f(values.data(), n);
    Eigen::MatrixXd gram = basis.transpose() * basis;
    Eigen::VectorXd rhs = basis.transpose() * f;
    Eigen::LDLT<Eigen::MatrixXd> solver(gram);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("project_to_modes: singular normal equations");
    Eigen::VectorXd c = solver.solve(rhs);
    for (std::size_t j = 0; j < d; ++j) out[j] = c(j);
    return out;
}

}  // namespace hsl
