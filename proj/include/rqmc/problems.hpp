#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rqmc/lp.hpp"
#include "rqmc/matrix.hpp"
#include "rqmc/sequences.hpp"
#include "rqmc/transforms.hpp"

namespace rqmc {

enum class PortfolioModel { Normal, UniformAffine };

struct PortfolioInstance {
    std::size_t d = 0;
    std::vector<double> mu;   // entries in [0.9, 1.2]
    Matrix q;                 // entries in [0, 0.1]
    Matrix sigma;             // q q^T
    double r_target = 1.05;
    double beta = 0.9;
    PortfolioModel model = PortfolioModel::Normal;
};

struct TwoStageInstance {
    std::size_t d = 0;
    std::size_t m = 0;
    std::vector<double> c;    // entries in [0, 1]
    double beta = 0.9;
};

PortfolioInstance gen_portfolio_instance(std::uint64_t seed, std::size_t d, double beta,
                                         double r_target, PortfolioModel model);
TwoStageInstance gen_two_stage_instance(std::uint64_t seed, std::size_t d, std::size_t m,
                                        double beta);

// Flat key-value serialization for reproducibility archives.
std::string serialize_portfolio_instance(const PortfolioInstance& inst);
std::string serialize_two_stage_instance(const TwoStageInstance& inst);

// Second-stage value min{y^T e : y >= v - T x, y >= 0}; separable because
// e >= 0, so it reduces to sum_j e_j * max(v_j - (T x)_j, 0).
double recourse_value(const std::vector<double>& x, const TwoStageTuple& tuple);

// The feasible region {sum x = 1, mu^T x >= R, x >= 0} as an LpProblem.
LpProblem portfolio_region(const PortfolioInstance& inst);

// Exact optimal value of the Normal-model portfolio problem,
// min -mu^T x + kappa(beta) sqrt(x^T Sigma x), via Kelley cutting planes.
double exact_portfolio_normal(const PortfolioInstance& inst, double tol = 1e-7);

struct SolveResult {
    double value = 0.0;
    std::vector<double> x;
};

// One sample-based solve. Small N goes through the explicit LP
// reformulation; larger N through cutting planes on the empirical CVaR
// objective (both routes agree, see tests).
SolveResult sample_based_solve(const PortfolioInstance& inst, Sampler sampler,
                               Factorization factorization, std::size_t n,
                               std::uint64_t rep_seed);
SolveResult sample_based_solve(const TwoStageInstance& inst, Sampler sampler, std::size_t n,
                               std::uint64_t rep_seed);

double sample_based_optimal_value(const PortfolioInstance& inst, Sampler sampler,
                                  Factorization factorization, std::size_t n,
                                  std::uint64_t rep_seed);
double sample_based_optimal_value(const TwoStageInstance& inst, Sampler sampler, std::size_t n,
                                  std::uint64_t rep_seed);

// Losses -xi^T x for a realization matrix; exposed for the diagnostics.
Matrix portfolio_samples(const PortfolioInstance& inst, Sampler sampler,
                         Factorization factorization, std::size_t n, std::uint64_t rep_seed);

}  // namespace rqmc
