#include "rqmc/problems.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "rqmc/risk.hpp"
#include "rqmc/rng.hpp"

namespace rqmc {

namespace {

// Sample counts up to these go through the explicit LP reformulation;
// larger ones through Kelley cuts on the empirical CVaR objective. The
// routes are equivalent (property-tested); the dense tableau just stops
// being the right tool once the u-block dominates.
constexpr std::size_t kPortfolioLpMaxN = 256;
constexpr std::size_t kTwoStageLpMaxN = 64;

// Tail weights of the CVaR dual representation at the current losses:
// 1/N above the beta-quantile, the fractional remainder split equally
// across atoms equal to it. Returns (value_weights, quantile).
std::pair<std::vector<double>, double> cvar_tail_weights(const std::vector<double>& losses,
                                                         double beta) {
    const std::size_t n = losses.size();
    const EmpiricalDistribution dist = empirical_from_values(losses);
    const double q = quantile(dist, beta);
    std::size_t above = 0, ties = 0;
    for (double l : losses) {
        if (l > q) ++above;
        else if (l == q) ++ties;
    }
    const double w_above = 1.0 / static_cast<double>(n);
    const double remainder = (1.0 - beta) - w_above * static_cast<double>(above);
    const double w_tie = ties > 0 ? std::max(remainder, 0.0) / static_cast<double>(ties) : 0.0;
    std::vector<double> w(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (losses[i] > q) w[i] = w_above;
        else if (losses[i] == q) w[i] = w_tie;
    }
    return {std::move(w), q};
}

}  // namespace

PortfolioInstance gen_portfolio_instance(std::uint64_t seed, std::size_t d, double beta,
                                         double r_target, PortfolioModel model) {
    if (d < 1) throw std::invalid_argument("gen_portfolio_instance: d must be >= 1");
    if (!(beta > 0.0 && beta < 1.0))
        throw std::invalid_argument("gen_portfolio_instance: beta must be in (0,1)");
    Rng rng(derive_seed(seed, 0x706f7274));
    PortfolioInstance inst;
    inst.d = d;
    inst.r_target = r_target;
    inst.beta = beta;
    inst.model = model;
    for (int attempt = 0; attempt < 100; ++attempt) {
        inst.mu.assign(d, 0.0);
        for (double& v : inst.mu) v = 0.9 + 0.3 * rng.next_double();
        inst.q = Matrix(d, d);
        for (double& v : inst.q.data()) v = 0.1 * rng.next_double();
        if (*std::max_element(inst.mu.begin(), inst.mu.end()) >= r_target) {
            inst.sigma = inst.q * inst.q.transposed();
            return inst;
        }
    }
    throw std::runtime_error("gen_portfolio_instance: r_target unreachable (max mu < 1.2)");
}

TwoStageInstance gen_two_stage_instance(std::uint64_t seed, std::size_t d, std::size_t m,
                                        double beta) {
    if (d < 1 || m < 1) throw std::invalid_argument("gen_two_stage_instance: d, m must be >= 1");
    if (!(beta > 0.0 && beta < 1.0))
        throw std::invalid_argument("gen_two_stage_instance: beta must be in (0,1)");
    Rng rng(derive_seed(seed, 0x74777374));
    TwoStageInstance inst;
    inst.d = d;
    inst.m = m;
    inst.beta = beta;
    inst.c.assign(d, 0.0);
    for (double& v : inst.c) v = rng.next_double();
    return inst;
}

std::string serialize_portfolio_instance(const PortfolioInstance& inst) {
    std::ostringstream out;
    out.precision(17);
    out << "problem = portfolio\n";
    out << "model = " << (inst.model == PortfolioModel::Normal ? "normal" : "uniform") << "\n";
    out << "d = " << inst.d << "\nbeta = " << inst.beta << "\nR = " << inst.r_target << "\n";
    out << "mu =";
    for (double v : inst.mu) out << ' ' << v;
    out << "\nq =";
    for (double v : inst.q.data()) out << ' ' << v;
    out << "\n";
    return out.str();
}

std::string serialize_two_stage_instance(const TwoStageInstance& inst) {
    std::ostringstream out;
    out.precision(17);
    out << "problem = two_stage\n";
    out << "d = " << inst.d << "\nm = " << inst.m << "\nbeta = " << inst.beta << "\n";
    out << "c =";
    for (double v : inst.c) out << ' ' << v;
    out << "\n";
    return out.str();
}

double recourse_value(const std::vector<double>& x, const TwoStageTuple& tuple) {
    const std::size_t m = tuple.v.size();
    if (tuple.t.rows() != m || tuple.t.cols() != x.size())
        throw std::invalid_argument("recourse_value: shape mismatch");
    const std::vector<double> tx = mat_vec(tuple.t, x);
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const double shortfall = tuple.v[j] - tx[j];
        if (shortfall > 0.0) total += tuple.e[j] * shortfall;
    }
    return total;
}

LpProblem portfolio_region(const PortfolioInstance& inst) {
    LpProblem region;
    region.objective.assign(inst.d, 0.0);
    region.a = Matrix(2, inst.d);
    for (std::size_t j = 0; j < inst.d; ++j) {
        region.a(0, j) = 1.0;
        region.a(1, j) = inst.mu[j];
    }
    region.relations = {Relation::EQ, Relation::GE};
    region.rhs = {1.0, inst.r_target};
    return region;
}

double exact_portfolio_normal(const PortfolioInstance& inst, double tol) {
    if (inst.model != PortfolioModel::Normal)
        throw std::invalid_argument("exact_portfolio_normal: Normal model only");
    const double kappa = cvar_normal_factor(inst.beta);
    ConvexOracle oracle = [&](const std::vector<double>& x) {
        const std::vector<double> sx = mat_vec(inst.sigma, x);
        const double var = std::max(dot(x, sx), 0.0);
        const double sd = std::sqrt(var);
        std::vector<double> g(inst.d);
        for (std::size_t j = 0; j < inst.d; ++j)
            g[j] = -inst.mu[j] + (sd > 0.0 ? kappa * sx[j] / sd : 0.0);
        return std::make_pair(-dot(inst.mu, x) + kappa * sd, std::move(g));
    };
    return kelley_minimize(oracle, portfolio_region(inst), tol, 500).value;
}

Matrix portfolio_samples(const PortfolioInstance& inst, Sampler sampler,
                         Factorization factorization, std::size_t n, std::uint64_t rep_seed) {
    const PointSet points = generate_points(sampler, rep_seed, n, inst.d);
    if (inst.model == PortfolioModel::Normal) {
        GaussianSpec spec{inst.mu, inst.sigma, factorization};
        return gaussian_transform(points, spec);
    }
    return uniform_affine_transform(points, inst.mu, inst.q);
}

SolveResult sample_based_solve(const PortfolioInstance& inst, Sampler sampler,
                               Factorization factorization, std::size_t n,
                               std::uint64_t rep_seed) {
    const Matrix samples = portfolio_samples(inst, sampler, factorization, n, rep_seed);
    if (n <= kPortfolioLpMaxN) {
        const LpSolution sol =
            solve_lp(build_portfolio_lp(samples, inst.mu, inst.r_target, inst.beta));
        if (sol.status != LpStatus::Optimal)
            throw std::runtime_error(std::string("portfolio LP ") +
                                     (sol.status == LpStatus::Infeasible ? "infeasible" : "unbounded"));
        return {sol.value, {sol.point.begin(), sol.point.begin() + inst.d}};
    }

    const double beta = inst.beta;
    ConvexOracle oracle = [&](const std::vector<double>& x) {
        std::vector<double> losses(n);
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < inst.d; ++j) s += samples(i, j) * x[j];
            losses[i] = -s;
        }
        auto [w, q] = cvar_tail_weights(losses, beta);
        double f = 0.0;
        std::vector<double> g(inst.d, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (w[i] == 0.0) continue;
            const double scale = w[i] / (1.0 - beta);
            f += scale * losses[i];
            for (std::size_t j = 0; j < inst.d; ++j) g[j] -= scale * samples(i, j);
        }
        (void)q;
        return std::make_pair(f, std::move(g));
    };
    const KelleyResult res = kelley_minimize(oracle, portfolio_region(inst), 1e-8, 2000);
    return {res.value, res.point};
}

SolveResult sample_based_solve(const TwoStageInstance& inst, Sampler sampler, std::size_t n,
                               std::uint64_t rep_seed) {
    const std::size_t dim = inst.m * inst.d + 2 * inst.m;
    const PointSet points = generate_points(sampler, rep_seed, n, dim);
    std::vector<TwoStageTuple> tuples;
    tuples.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        tuples.push_back(
            reshape_two_stage(std::span<const double>(points.points.row(i), dim), inst.d, inst.m));

    if (n <= kTwoStageLpMaxN) {
        const LpSolution sol = solve_lp(build_two_stage_lp(tuples, inst.c, inst.beta));
        if (sol.status != LpStatus::Optimal)
            throw std::runtime_error("two-stage LP not optimal");
        return {sol.value, {sol.point.begin(), sol.point.begin() + inst.d}};
    }

    const double beta = inst.beta;
    LpProblem box;
    box.objective.assign(inst.d, 0.0);
    box.a = Matrix(0, inst.d);
    box.upper.assign(inst.d, 1.0);
    ConvexOracle oracle = [&](const std::vector<double>& x) {
        std::vector<double> values(n);
        for (std::size_t i = 0; i < n; ++i) values[i] = recourse_value(x, tuples[i]);
        auto [w, q] = cvar_tail_weights(values, beta);
        double f = dot(inst.c, x);
        std::vector<double> g = inst.c;
        for (std::size_t i = 0; i < n; ++i) {
            if (w[i] == 0.0) continue;
            const double scale = w[i] / (1.0 - beta);
            f += scale * values[i];
            const auto& tp = tuples[i];
            const std::vector<double> tx = mat_vec(tp.t, x);
            for (std::size_t r = 0; r < inst.m; ++r)
                if (tp.v[r] - tx[r] > 0.0)
                    for (std::size_t j = 0; j < inst.d; ++j)
                        g[j] -= scale * tp.e[r] * tp.t(r, j);
        }
        (void)q;
        return std::make_pair(f, std::move(g));
    };
    const KelleyResult res = kelley_minimize(oracle, box, 1e-8, 2000);
    return {res.value, res.point};
}

double sample_based_optimal_value(const PortfolioInstance& inst, Sampler sampler,
                                  Factorization factorization, std::size_t n,
                                  std::uint64_t rep_seed) {
    return sample_based_solve(inst, sampler, factorization, n, rep_seed).value;
}

double sample_based_optimal_value(const TwoStageInstance& inst, Sampler sampler, std::size_t n,
                                  std::uint64_t rep_seed) {
    return sample_based_solve(inst, sampler, n, rep_seed).value;
}

}  // namespace rqmc
