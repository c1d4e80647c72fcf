#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "rqmc/matrix.hpp"
#include "rqmc/transforms.hpp"

namespace rqmc {

enum class Relation { LE, GE, EQ };
enum class LpStatus { Optimal, Infeasible, Unbounded };

// min objective^T x  s.t.  A x {<=,>=,=} rhs,  lower <= x <= upper.
// Default bounds are [0, +inf); lower = -inf marks a free variable.
struct LpProblem {
    std::vector<double> objective;
    Matrix a;
    std::vector<Relation> relations;
    std::vector<double> rhs;
    std::vector<double> lower;                 // empty means all-zero
    std::vector<std::optional<double>> upper;  // empty means none

    std::size_t num_vars() const { return objective.size(); }
    std::size_t num_rows() const { return rhs.size(); }
    void validate() const;  // throws std::invalid_argument on shape mismatch
};

struct LpSolution {
    LpStatus status = LpStatus::Optimal;
    double value = 0.0;
    std::vector<double> point;
    std::size_t iterations = 0;
};

// Two-phase dense simplex with Bland's anti-cycling rule. Infeasible and
// Unbounded come back as statuses; exceeding the iteration cap throws.
LpSolution solve_lp(const LpProblem& problem);

// Rockafellar-Uryasev reformulation of min_x CVaR_beta[-xi^T x] over
// {sum x = 1, mu^T x >= r_target, x >= 0}. Variables: x, t (free), u.
LpProblem build_portfolio_lp(const Matrix& samples, const std::vector<double>& mu,
                             double r_target, double beta);

// min c^T x + CVaR_beta[min{y^T e : y >= v - T x, y >= 0}] over x in [0,1]^d.
// Variables: x, t (free), u, and one recourse block y_i per sample.
LpProblem build_two_stage_lp(const std::vector<TwoStageTuple>& tuples,
                             const std::vector<double>& c, double beta);

// Value and one subgradient at a point.
using ConvexOracle = std::function<std::pair<double, std::vector<double>>(const std::vector<double>&)>;

struct KelleyResult {
    double value = 0.0;
    std::vector<double> point;
    std::size_t iterations = 0;
    double gap = 0.0;
    std::vector<double> lower_bounds;  // one master-LP bound per iteration
};

// Kelley cutting planes over the polytope described by `region` (its
// objective is ignored). Stops when best value minus LP lower bound <= tol;
// throws std::runtime_error with the residual gap if max_iters is hit.
KelleyResult kelley_minimize(const ConvexOracle& oracle, const LpProblem& region, double tol,
                             std::size_t max_iters);

}  // namespace rqmc
