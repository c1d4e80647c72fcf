#include "rqmc/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rqmc/parallel.hpp"

namespace rqmc {

namespace {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double norm_pdf(double x) { return std::exp(-0.5 * x * x) * 0.39894228040143267794; }

void check_symmetric(const Matrix& sigma) {
    if (sigma.rows() != sigma.cols())
        throw std::invalid_argument("covariance matrix must be square");
    for (std::size_t i = 0; i < sigma.rows(); ++i)
        for (std::size_t j = i + 1; j < sigma.cols(); ++j)
            if (sigma(i, j) != sigma(j, i))
                throw std::invalid_argument("covariance matrix must be symmetric");
}

Matrix gaussian_transform_impl(const PointSet& points, const GaussianSpec& spec, bool parallel) {
    const std::size_t d = spec.mu.size();
    if (points.d != d || spec.sigma.rows() != d)
        throw std::invalid_argument("gaussian_transform: dimension mismatch");
    if (d > 64) throw std::invalid_argument("gaussian_transform: d must be <= 64");
    const Matrix l = spec.factorization == Factorization::Cholesky ? cholesky_factor(spec.sigma)
                                                                   : pca_factor(spec.sigma);
    Matrix out(points.n, d);
    parallel_for(points.n, parallel && points.n >= 1024, [&](std::size_t i) {
        double z[64];
        for (std::size_t j = 0; j < d; ++j) {
            double u = points.points(i, j);
            if (u <= 0.0) u = 0x1.0p-53;  // Sobol' point 0 is the origin
            z[j] = norm_inv_cdf(u);
        }
        for (std::size_t r = 0; r < d; ++r) {
            double s = spec.mu[r];
            for (std::size_t j = 0; j < d; ++j) s += l(r, j) * z[j];
            out(i, r) = s;
        }
    });
    return out;
}

}  // namespace

double norm_inv_cdf(double u) {
    if (!(u > 0.0 && u < 1.0)) throw std::domain_error("norm_inv_cdf: u must be in (0,1)");
    if (u == 0.5) return 0.0;
    // Abramowitz-Stegun 26.2.23 seed in the lower tail, then Newton on the
    // erfc-based CDF. Three corrections take the 4.5e-4 seed to full
    // double precision.
    const double p = u < 0.5 ? u : 1.0 - u;
    const double t = std::sqrt(-2.0 * std::log(p));
    double x = -(t - (2.30753 + 0.27061 * t) / (1.0 + t * (0.99229 + 0.04481 * t)));
    for (int it = 0; it < 3; ++it) x -= (norm_cdf(x) - p) / norm_pdf(x);
    return u < 0.5 ? x : -x;
}

Matrix cholesky_factor(const Matrix& sigma) {
    check_symmetric(sigma);
    const std::size_t d = sigma.rows();
    Matrix l(d, d);
    for (std::size_t j = 0; j < d; ++j) {
        double diag = sigma(j, j);
        for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
        if (diag <= 0.0) throw std::runtime_error("cholesky_factor: matrix is not positive definite");
        l(j, j) = std::sqrt(diag);
        for (std::size_t i = j + 1; i < d; ++i) {
            double s = sigma(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

Matrix pca_factor(const Matrix& sigma) {
    check_symmetric(sigma);
    const std::size_t d = sigma.rows();
    Matrix a = sigma;
    Matrix v = Matrix::identity(d);
    const double norm = frobenius_norm(sigma);
    const double tol = 1e-12 * (norm > 0.0 ? norm : 1.0);

    // Cyclic Jacobi sweeps.
    constexpr int kMaxSweeps = 100;
    int sweep = 0;
    for (; sweep < kMaxSweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = i + 1; j < d; ++j) off += 2.0 * a(i, j) * a(i, j);
        if (std::sqrt(off) <= tol) break;
        for (std::size_t p = 0; p < d; ++p)
            for (std::size_t q = p + 1; q < d; ++q) {
                if (a(p, q) == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double sign = theta >= 0.0 ? 1.0 : -1.0;
                const double t = sign / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < d; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < d; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < d; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
    }
    if (sweep == kMaxSweeps) throw std::runtime_error("pca_factor: Jacobi iteration did not converge");

    double trace = 0.0;
    for (std::size_t i = 0; i < d; ++i) trace += sigma(i, i);
    std::vector<std::size_t> order(d);
    for (std::size_t i = 0; i < d; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

    Matrix l(d, d);
    for (std::size_t col = 0; col < d; ++col) {
        double lambda = a(order[col], order[col]);
        if (lambda < -1e-10 * (trace > 0.0 ? trace : 1.0))
            throw std::invalid_argument("pca_factor: matrix is not positive semidefinite");
        if (lambda < 0.0) lambda = 0.0;
        const double scale = std::sqrt(lambda);
        for (std::size_t r = 0; r < d; ++r) l(r, col) = scale * v(r, order[col]);
    }
    return l;
}

Matrix gaussian_transform(const PointSet& points, const GaussianSpec& spec) {
    return gaussian_transform_impl(points, spec, true);
}

Matrix gaussian_transform_serial(const PointSet& points, const GaussianSpec& spec) {
    return gaussian_transform_impl(points, spec, false);
}

Matrix uniform_affine_transform(const PointSet& points, const std::vector<double>& mu,
                                const Matrix& q) {
    const std::size_t d = mu.size();
    if (points.d != d || q.rows() != d || q.cols() != d)
        throw std::invalid_argument("uniform_affine_transform: dimension mismatch");
    if (d > 64) throw std::invalid_argument("uniform_affine_transform: d must be <= 64");
    const double root12 = std::sqrt(12.0);
    Matrix out(points.n, d);
    parallel_for(points.n, points.n >= 4096, [&](std::size_t i) {
        double zeta[64];
        for (std::size_t j = 0; j < d; ++j) zeta[j] = points.points(i, j) - 0.5;
        for (std::size_t r = 0; r < d; ++r) {
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) s += q(r, j) * zeta[j];
            out(i, r) = mu[r] + root12 * s;
        }
    });
    return out;
}

TwoStageTuple reshape_two_stage(std::span<const double> point, std::size_t d, std::size_t m) {
    if (point.size() != m * d + 2 * m)
        throw std::invalid_argument("reshape_two_stage: point length must be m*d + 2m");
    TwoStageTuple tuple;
    tuple.t = Matrix(m, d);
    tuple.v.resize(m);
    tuple.e.resize(m);
    std::size_t k = 0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < d; ++j) tuple.t(i, j) = 0.5 + 0.5 * point[k++];
    for (std::size_t i = 0; i < m; ++i) tuple.v[i] = 50.0 + 50.0 * point[k++];
    for (std::size_t i = 0; i < m; ++i) tuple.e[i] = 2.0 + 2.0 * point[k++];
    return tuple;
}

}  // namespace rqmc
