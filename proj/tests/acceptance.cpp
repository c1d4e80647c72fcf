// End-to-end acceptance checks. Each criterion prints one [PASS]/[FAIL]
// line; the process exits nonzero if any of them fail.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <vector>

#include "rqmc/experiments.hpp"
#include "rqmc/lp.hpp"
#include "rqmc/problems.hpp"
#include "rqmc/risk.hpp"
#include "rqmc/rng.hpp"
#include "rqmc/sequences.hpp"
#include "rqmc/transforms.hpp"

using namespace rqmc;
using clock_type = std::chrono::steady_clock;

namespace {

int failures = 0;

void criterion(int num, const char* what, bool ok, double secs) {
    std::printf("[%s] criterion %d: %s (%.2fs)\n", ok ? "PASS" : "FAIL", num, what, secs);
    if (!ok) ++failures;
}

double cvar_grid_oracle(const std::vector<double>& atoms, const std::vector<double>& weights,
                        double beta) {
    auto objective = [&](double t) {
        double e = 0.0;
        for (std::size_t i = 0; i < atoms.size(); ++i)
            e += weights[i] * std::max(atoms[i] - t, 0.0);
        return t + e / (1.0 - beta);
    };
    const double lo = *std::min_element(atoms.begin(), atoms.end());
    const double hi = *std::max_element(atoms.begin(), atoms.end());
    double best = objective(lo);
    for (double t : atoms) best = std::min(best, objective(t));
    for (int k = 0; k <= 20000; ++k)
        best = std::min(best, objective(lo + (hi - lo) * k / 20000.0));
    return best;
}

double gaussian_tail_oracle(double beta) {
    auto phi = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi); };
    auto cdf = [&](double z) {
        const int steps = 4000;
        double s = 0.0;
        const double h = (z + 10.0) / steps;
        for (int i = 0; i < steps; ++i) {
            const double a = -10.0 + i * h;
            s += h / 6.0 * (phi(a) + 4.0 * phi(a + 0.5 * h) + phi(a + h));
        }
        return s;
    };
    double z_lo = -10.0, z_hi = 10.0;
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (z_lo + z_hi);
        (cdf(mid) < beta ? z_lo : z_hi) = mid;
    }
    const double z = 0.5 * (z_lo + z_hi);
    const int steps = 8000;
    const double h = (12.0 - z) / steps;
    double s = 0.0;
    for (int i = 0; i < steps; ++i) {
        const double a = z + i * h;
        auto f = [&](double t) { return t * phi(t); };
        s += h / 6.0 * (f(a) + 4.0 * f(a + 0.5 * h) + f(a + h));
    }
    return s / (1.0 - beta);
}

std::optional<std::vector<double>> solve_linear(Matrix a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        if (std::abs(a(piv, col)) < 1e-11) return std::nullopt;
        if (piv != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a(piv, c), a(col, c));
            std::swap(b[piv], b[col]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a(r, col) / a(col, col);
            for (std::size_t c = col; c < n; ++c) a(r, c) -= f * a(col, c);
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t c = i + 1; c < n; ++c) s -= a(i, c) * x[c];
        x[i] = s / a(i, i);
    }
    return x;
}

std::optional<double> vertex_oracle(const LpProblem& p) {
    const std::size_t n = p.num_vars();
    const std::size_t total = p.num_rows() + n;
    if (total < n) return std::nullopt;
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::optional<double> best;
    while (true) {
        Matrix a(n, n);
        std::vector<double> b(n);
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t c = idx[k];
            if (c < p.num_rows()) {
                for (std::size_t j = 0; j < n; ++j) a(k, j) = p.a(c, j);
                b[k] = p.rhs[c];
            } else {
                a(k, c - p.num_rows()) = 1.0;
            }
        }
        if (auto x = solve_linear(a, b)) {
            bool feasible = std::all_of(x->begin(), x->end(), [](double v) { return v >= -1e-9; });
            for (std::size_t r = 0; feasible && r < p.num_rows(); ++r) {
                double lhs = 0.0;
                for (std::size_t j = 0; j < n; ++j) lhs += p.a(r, j) * (*x)[j];
                switch (p.relations[r]) {
                    case Relation::LE: feasible = lhs <= p.rhs[r] + 1e-9; break;
                    case Relation::GE: feasible = lhs >= p.rhs[r] - 1e-9; break;
                    case Relation::EQ: feasible = std::abs(lhs - p.rhs[r]) <= 1e-9; break;
                }
            }
            if (feasible) {
                double v = 0.0;
                for (std::size_t j = 0; j < n; ++j) v += p.objective[j] * (*x)[j];
                if (!best || v < *best) best = v;
            }
        }
        std::size_t k = n;
        bool advanced = false;
        while (k-- > 0) {
            if (idx[k] + 1 <= total - (n - k)) {
                ++idx[k];
                for (std::size_t j = k + 1; j < n; ++j) idx[j] = idx[j - 1] + 1;
                advanced = true;
                break;
            }
            if (k == 0) return best;
        }
        if (!advanced || idx[0] > total - n) return best;
    }
}

double elapsed(clock_type::time_point start) {
    return std::chrono::duration<double>(clock_type::now() - start).count();
}

ExperimentConfig rate_config(Factorization factorization, std::vector<Sampler> samplers,
                             std::uint64_t master_seed) {
    ExperimentConfig cfg;
    cfg.problem = ProblemKind::PortfolioNormal;
    cfg.instance_seed = 1;
    cfg.d = 5;
    cfg.beta = 0.9;
    cfg.r_target = 1.05;
    cfg.factorization = factorization;
    cfg.samplers = std::move(samplers);
    cfg.n_schedule = {64, 128, 256, 512, 1024, 2048, 4096};
    cfg.replications = 30;
    cfg.master_seed = master_seed;
    cfg.ref_mode = RefMode::Exact;
    return cfg;
}

}  // namespace

int main() {
    {  // 1: exact dyadic stratification of (scrambled) nets
        const auto t0 = clock_type::now();
        bool ok = true;
        for (unsigned m = 1; m <= 12 && ok; ++m) {
            const std::size_t n = std::size_t{1} << m;
            ok = stratification_pass(n, 10, false, 0) && stratification_pass(n, 10, true, m);
        }
        criterion(1, "1-D dyadic stratification for m <= 12, d = 10", ok, elapsed(t0));
    }

    {  // 2: cvar against the grid-minimized objective
        const auto t0 = clock_type::now();
        Rng rng(1234);
        bool ok = true;
        for (int rep = 0; rep < 200 && ok; ++rep) {
            const std::size_t n = 1 + rng.next_below(20);
            std::vector<double> atoms(n);
            for (double& a : atoms) a = 10.0 * (rng.next_double() - 0.5);
            const double beta = 0.95 * rng.next_double();
            const std::vector<double> w(n, 1.0 / double(n));
            const double got = cvar(empirical_from_values(atoms), beta);
            const double want = cvar_grid_oracle(atoms, w, beta);
            ok = std::abs(got - want) <= 1e-9 * std::max(1.0, std::abs(want));
        }
        criterion(2, "cvar equals the grid oracle on 200 random distributions", ok, elapsed(t0));
    }

    {  // 3: the Gaussian CVaR constant, closed form and empirical
        const auto t0 = clock_type::now();
        const double closed = cvar_normal_closed_form(0.0, 1.0, 0.95);
        bool ok = std::abs(closed - gaussian_tail_oracle(0.95)) <= 1e-4 &&
                  std::abs(closed - 2.06271) <= 1e-4;
        const std::size_t n = std::size_t{1} << 14;
        const PointSet ps = sobol_points(n, 1, 9u);
        std::vector<double> z(n);
        for (std::size_t i = 0; i < n; ++i) {
            double u = ps.points(i, 0);
            if (u <= 0.0) u = 0x1.0p-53;
            z[i] = norm_inv_cdf(u);
        }
        ok = ok && std::abs(cvar(empirical_from_values(std::move(z)), 0.95) - closed) <= 1e-2;
        criterion(3, "gaussian CVaR constant 2.06271 and its empirical estimate", ok, elapsed(t0));
    }

    {  // 4: simplex vs vertex enumeration; recourse closed form vs inner LP
        const auto t0 = clock_type::now();
        Rng rng(2024);
        bool ok = true;
        for (int rep = 0; rep < 100 && ok; ++rep) {
            const std::size_t nv = 2 + rng.next_below(3);
            const std::size_t nr = 1 + rng.next_below(4);
            LpProblem p;
            p.objective.resize(nv);
            for (double& v : p.objective) v = 2.0 * rng.next_double() - 1.0;
            p.a = Matrix(nr + 1, nv);
            for (std::size_t r = 0; r < nr; ++r) {
                for (std::size_t j = 0; j < nv; ++j) p.a(r, j) = 2.0 * rng.next_double() - 1.0;
                p.relations.push_back(rng.next_below(4) == 0 ? Relation::GE : Relation::LE);
                p.rhs.push_back(2.0 * rng.next_double() - 0.5);
            }
            for (std::size_t j = 0; j < nv; ++j) p.a(nr, j) = 1.0;
            p.relations.push_back(Relation::LE);
            p.rhs.push_back(5.0);
            const LpSolution s = solve_lp(p);
            if (const auto oracle = vertex_oracle(p))
                ok = s.status == LpStatus::Optimal &&
                     std::abs(s.value - *oracle) <= 1e-8 * std::max(1.0, std::abs(*oracle));
            else
                ok = s.status == LpStatus::Infeasible;
        }
        Rng rng2(303);
        for (int rep = 0; rep < 500 && ok; ++rep) {
            const std::size_t d = 1 + rng2.next_below(4);
            const std::size_t m = 1 + rng2.next_below(4);
            TwoStageTuple tuple{Matrix(m, d), std::vector<double>(m), std::vector<double>(m)};
            for (double& v : tuple.t.data()) v = 0.5 + 0.5 * rng2.next_double();
            for (double& v : tuple.v) v = 50.0 + 50.0 * rng2.next_double();
            for (double& v : tuple.e) v = 2.0 + 2.0 * rng2.next_double();
            std::vector<double> x(d);
            for (double& v : x) v = (rep % 2 ? 1.0 : 150.0) * rng2.next_double();
            LpProblem inner;
            inner.objective = tuple.e;
            inner.a = Matrix::identity(m);
            inner.relations.assign(m, Relation::GE);
            const std::vector<double> tx = mat_vec(tuple.t, x);
            inner.rhs.resize(m);
            for (std::size_t j = 0; j < m; ++j) inner.rhs[j] = tuple.v[j] - tx[j];
            const LpSolution s = solve_lp(inner);
            const double closed = recourse_value(x, tuple);
            ok = s.status == LpStatus::Optimal &&
                 std::abs(s.value - closed) <= 1e-9 * std::max(1.0, std::abs(closed));
        }
        criterion(4, "LP vs vertex enumeration (100) and recourse vs inner LP (500)", ok,
                  elapsed(t0));
    }

    {  // 5: sampled optimal values agree with the exact normal solution
        const auto t0 = clock_type::now();
        const PortfolioInstance inst =
            gen_portfolio_instance(1, 3, 0.9, 1.05, PortfolioModel::Normal);
        const double exact = exact_portfolio_normal(inst, 1e-7);
        double mean = 0.0;
        for (std::uint64_t rep = 1; rep <= 10; ++rep)
            mean += sample_based_optimal_value(inst, Sampler::SobolScrambled, Factorization::PCA,
                                               std::size_t{1} << 14, rep);
        mean /= 10.0;
        criterion(5, "mean sampled value within 5e-3 of the exact normal optimum",
                  std::abs(mean - exact) <= 5e-3, elapsed(t0));
    }

    {  // 6: plain Monte Carlo error rate near N^{-1/2}
        const auto t0 = clock_type::now();
        const ExperimentReport rep =
            run_sweep(rate_config(Factorization::Cholesky, {Sampler::MC}, 1));
        const double slope = rep.fits[0].slope;
        criterion(6, "MC log2-RMSE slope within [-0.65, -0.35]",
                  slope >= -0.65 && slope <= -0.35, elapsed(t0));
    }

    {  // 7: scrambled nets never lose to MC, three master seeds
        const auto t0 = clock_type::now();
        bool ok = true;
        for (std::uint64_t seed = 1; seed <= 3 && ok; ++seed) {
            const ExperimentReport rep = run_sweep(
                rate_config(Factorization::PCA, {Sampler::MC, Sampler::SobolScrambled}, seed));
            const std::size_t last = rep.config.n_schedule.size() - 1;
            const double mc_rmse = rep.cells[last].rmse;
            const double sobol_rmse = rep.cells[rep.config.n_schedule.size() + last].rmse;
            ok = sobol_rmse <= mc_rmse && rep.fits[1].slope <= rep.fits[0].slope;
        }
        criterion(7, "scrambled-Sobol' RMSE and slope beat MC for 3/3 seeds", ok, elapsed(t0));
    }

    {  // 8: Wasserstein-2 distance to N(0,1) shrinks for every sampler
        const auto t0 = clock_type::now();
        bool ok = true;
        for (Sampler s : {Sampler::MC, Sampler::Sobol, Sampler::SobolScrambled, Sampler::Halton,
                          Sampler::HaltonShifted, Sampler::LHS}) {
            for (std::uint64_t seed = 1; seed <= 5 && ok; ++seed) {
                const auto rows =
                    wasserstein_decay(s, 2.0, {std::size_t{1} << 6, std::size_t{1} << 12}, seed);
                ok = rows[1].value < rows[0].value;
            }
            if (!ok) break;
        }
        criterion(8, "Wasserstein-2 decay from 2^6 to 2^12 for every sampler, 5/5 seeds", ok,
                  elapsed(t0));
    }

    {  // 9: uniform sup-error over the simplex grid shrinks
        const auto t0 = clock_type::now();
        const PortfolioInstance inst =
            gen_portfolio_instance(1, 2, 0.9, 1.05, PortfolioModel::Normal);
        bool ok = true;
        for (std::uint64_t seed = 1; seed <= 5 && ok; ++seed) {
            const auto rows = uniform_convergence_diagnostic(
                inst, 64, {std::size_t{1} << 6, std::size_t{1} << 12}, Sampler::SobolScrambled,
                seed);
            ok = rows[1].value < rows[0].value;
        }
        criterion(9, "uniform sup-error decay on the d = 2 simplex grid, 5/5 seeds", ok,
                  elapsed(t0));
    }

    {  // 10: the uniform-model sweep is byte-stable
        const auto t0 = clock_type::now();
        ExperimentConfig cfg;
        cfg.problem = ProblemKind::PortfolioUniform;
        cfg.instance_seed = 2;
        cfg.d = 3;
        cfg.r_target = 1.02;
        cfg.samplers = {Sampler::MC, Sampler::SobolScrambled};
        cfg.n_schedule = {64, 128, 256, 512, 1024};
        cfg.replications = 10;
        cfg.master_seed = 5;
        cfg.ref_mode = RefMode::HighN;
        cfg.ref_exponent = 11;
        cfg.ref_replications = 20;
        const std::string a = report_csv(run_sweep(cfg));
        const std::string b = report_csv(run_sweep(cfg));
        criterion(10, "uniform-model HighN sweep yields byte-identical CSV", !a.empty() && a == b,
                  elapsed(t0));
    }

    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
