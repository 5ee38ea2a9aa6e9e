// spectral.hpp — truncated Karhunen–Loève representation.
//
// Functions are D coefficient vectors in a fixed orthonormal cosine basis
//   v_j(s) = sqrt(2/(b-a)) * cos(j*pi*(s-a)/(b-a)),   j = 1..D,
// shared by the prior and diffusion covariance operators. Covariance
// operators are diagonal in this basis and described by their eigenvalue
// sequence alone.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hsl/rng.hpp"

namespace hsl {

enum class DecayLaw { Polynomial, Exponential, Flat };

DecayLaw decay_law_from_string(const std::string& name);
std::string to_string(DecayLaw law);

// Eigenvalues of a trace-class covariance operator, truncated at D modes.
// All eigenvalues are positive; the decay law keeps the untruncated tail
// summable (polynomial requires alpha > 1).
struct CovarianceSpectrum {
    std::vector<double> eigenvalues;

    std::size_t dim() const { return eigenvalues.size(); }
    double trace() const;
};

// Truncated coefficient vector <x, v_j>, j = 1..D. The state of all SDEs.
struct ModeVector {
    std::vector<double> coeffs;

    ModeVector() = default;
    explicit ModeVector(std::size_t d, double fill = 0.0) : coeffs(d, fill) {}
    explicit ModeVector(std::vector<double> c) : coeffs(std::move(c)) {}

    std::size_t dim() const { return coeffs.size(); }
    double& operator[](std::size_t j) { return coeffs[j]; }
    double operator[](std::size_t j) const { return coeffs[j]; }
};

// Strictly increasing evaluation points inside a domain interval.
struct Grid {
    std::vector<double> points;
    double domain_min = 0.0;
    double domain_max = 1.0;

    static Grid uniform(double a, double b, std::size_t n);
    // Domain defaults to the hull of the points.
    static Grid from_points(std::vector<double> pts);
    static Grid from_points(std::vector<double> pts, double a, double b);

    std::size_t size() const { return points.size(); }
    bool is_uniform(double rel_tol = 1e-9) const;
};

// mu_j = j^-alpha (alpha > 1), e^(-gamma j) (gamma > 0), or the constant c.
CovarianceSpectrum build_spectrum(DecayLaw law, double param, std::size_t d);

// Basis function v_j (1-based) on [a, b].
double basis_value(std::size_t j, double s, double a, double b);

// KL draw: coeff_j = mean_j + sqrt(eigenvalue_j) * xi_j.
ModeVector sample_gaussian(const CovarianceSpectrum& spectrum, const ModeVector& mean, Rng& rng);

// sum_j coeffs_j * v_j(s) at each grid point.
std::vector<double> evaluate_on_grid(const ModeVector& v, const Grid& grid);

// Trapezoid quadrature weights for the grid spacing.
std::vector<double> trapezoid_weights(const Grid& grid);

// Projection onto the first D basis functions: quadrature on uniform grids,
// normal-equations least squares otherwise. Requires N >= D.
ModeVector project_to_modes(const std::vector<double>& values, const Grid& grid, std::size_t d);

}  // namespace hsl
