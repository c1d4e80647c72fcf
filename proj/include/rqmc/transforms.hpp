#pragma once

#include <span>
#include <vector>

#include "rqmc/matrix.hpp"
#include "rqmc/sequences.hpp"

namespace rqmc {

enum class Factorization { Cholesky, PCA };

struct GaussianSpec {
    std::vector<double> mu;
    Matrix sigma;  // symmetric positive semidefinite
    Factorization factorization = Factorization::Cholesky;
};

// Entries of T land in [0.5, 1.0], v in [50, 100], e in [2, 4].
struct TwoStageTuple {
    Matrix t;               // m x d
    std::vector<double> v;  // length m
    std::vector<double> e;  // length m
};

// Standard normal quantile, |error| <= 1e-9 on (0,1). Throws
// std::domain_error outside the open interval; callers map a generator's
// exact 0 to the smallest positive double first.
double norm_inv_cdf(double u);

// Lower-triangular L with L L^T = sigma. Throws std::runtime_error when a
// pivot is not positive.
Matrix cholesky_factor(const Matrix& sigma);

// Columns are eigenvectors scaled by sqrt(eigenvalue), descending, so the
// leading QMC coordinate feeds the largest-variance direction.
Matrix pca_factor(const Matrix& sigma);

// Row i -> mu + L * Phi^{-1}(row i), L per the factorization mode.
Matrix gaussian_transform(const PointSet& points, const GaussianSpec& spec);
Matrix gaussian_transform_serial(const PointSet& points, const GaussianSpec& spec);

// Row i -> mu + sqrt(12) * q * (u_i - 1/2).
Matrix uniform_affine_transform(const PointSet& points, const std::vector<double>& mu,
                                const Matrix& q);

// Splits a point in [0,1)^{m*d + 2m} into (T, v, e) with the ranges above;
// the first m*d coordinates fill T row-major.
TwoStageTuple reshape_two_stage(std::span<const double> point, std::size_t d, std::size_t m);

}  // namespace rqmc
