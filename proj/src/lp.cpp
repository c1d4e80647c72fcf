#include "rqmc/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace rqmc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = 1e-9;
constexpr std::size_t kIterationCap = 1000000;

// Standard-form view of an LpProblem: min c z, S z = b, z >= 0.
struct StandardForm {
    Matrix s;                 // rows x cols, slacks included
    std::vector<double> b;
    std::vector<double> c;
    std::size_t structural_cols = 0;  // columns before artificials start
    std::vector<std::ptrdiff_t> slack_of_row;  // -1 for EQ rows
    // Per original variable: (column, sign) terms plus the lower-bound shift.
    std::vector<std::vector<std::pair<std::size_t, double>>> var_terms;
    std::vector<double> var_shift;
};

StandardForm to_standard_form(const LpProblem& p) {
    const std::size_t n = p.num_vars();
    const std::size_t m = p.num_rows();

    std::vector<double> lower(n, 0.0);
    if (!p.lower.empty()) lower = p.lower;
    std::vector<std::optional<double>> upper(n);
    if (!p.upper.empty()) upper = p.upper;

    StandardForm sf;
    sf.var_terms.resize(n);
    sf.var_shift.assign(n, 0.0);
    std::size_t cols = 0;
    for (std::size_t j = 0; j < n; ++j) {
        if (lower[j] == -kInf) {
            sf.var_terms[j] = {{cols, 1.0}, {cols + 1, -1.0}};  // free split
            cols += 2;
        } else {
            sf.var_terms[j] = {{cols, 1.0}};
            sf.var_shift[j] = lower[j];
            cols += 1;
        }
    }

    std::size_t upper_rows = 0;
    for (const auto& u : upper)
        if (u) ++upper_rows;
    const std::size_t rows = m + upper_rows;

    std::size_t slack_cols = 0;
    for (Relation r : p.relations)
        if (r != Relation::EQ) ++slack_cols;
    slack_cols += upper_rows;  // each bound row gets a slack

    sf.s = Matrix(rows, cols + slack_cols);
    sf.slack_of_row.assign(rows, -1);
    sf.b.assign(rows, 0.0);
    sf.c.assign(cols + slack_cols, 0.0);
    for (std::size_t j = 0; j < n; ++j)
        for (auto [col, sign] : sf.var_terms[j]) sf.c[col] = sign * p.objective[j];

    std::size_t slack = cols;
    for (std::size_t i = 0; i < m; ++i) {
        double rhs = p.rhs[i];
        for (std::size_t j = 0; j < n; ++j) {
            const double aij = p.a(i, j);
            if (aij == 0.0) continue;
            rhs -= aij * sf.var_shift[j];
            for (auto [col, sign] : sf.var_terms[j]) sf.s(i, col) += sign * aij;
        }
        if (p.relations[i] == Relation::LE) {
            sf.slack_of_row[i] = static_cast<std::ptrdiff_t>(slack);
            sf.s(i, slack++) = 1.0;
        } else if (p.relations[i] == Relation::GE) {
            sf.slack_of_row[i] = static_cast<std::ptrdiff_t>(slack);
            sf.s(i, slack++) = -1.0;
        }
        sf.b[i] = rhs;
    }
    std::size_t row = m;
    for (std::size_t j = 0; j < n; ++j) {
        if (!upper[j]) continue;
        for (auto [col, sign] : sf.var_terms[j]) sf.s(row, col) += sign;
        sf.slack_of_row[row] = static_cast<std::ptrdiff_t>(slack);
        sf.s(row, slack++) = 1.0;
        sf.b[row] = *upper[j] - sf.var_shift[j];
        ++row;
    }
    sf.structural_cols = cols + slack_cols;
    return sf;
}

class SimplexTableau {
public:
    SimplexTableau(StandardForm sf) : sf_(std::move(sf)) {
        const std::size_t rows = sf_.b.size();
        basis_.assign(rows, 0);

        // Normalize rhs >= 0, then take slacks with coefficient +1 as the
        // initial basis and append artificials elsewhere.
        for (std::size_t i = 0; i < rows; ++i)
            if (sf_.b[i] < 0.0) {
                sf_.b[i] = -sf_.b[i];
                for (std::size_t j = 0; j < sf_.s.cols(); ++j) sf_.s(i, j) = -sf_.s(i, j);
            }
        std::vector<std::size_t> needs_artificial;
        for (std::size_t i = 0; i < rows; ++i) {
            const std::ptrdiff_t slack = sf_.slack_of_row[i];
            if (slack >= 0 && sf_.s(i, static_cast<std::size_t>(slack)) == 1.0)
                basis_[i] = static_cast<std::size_t>(slack);
            else
                needs_artificial.push_back(i);
        }
        const std::size_t art0 = sf_.s.cols();
        if (!needs_artificial.empty()) {
            Matrix wide(rows, art0 + needs_artificial.size());
            for (std::size_t i = 0; i < rows; ++i)
                for (std::size_t j = 0; j < art0; ++j) wide(i, j) = sf_.s(i, j);
            for (std::size_t k = 0; k < needs_artificial.size(); ++k) {
                wide(needs_artificial[k], art0 + k) = 1.0;
                basis_[needs_artificial[k]] = art0 + k;
            }
            sf_.s = std::move(wide);
            sf_.c.resize(art0 + needs_artificial.size(), 0.0);
        }
        artificial_start_ = art0;
    }

    // Runs both phases; returns the status. On Optimal, z() holds the
    // standard-form solution.
    LpStatus optimize() {
        if (artificial_start_ < sf_.s.cols()) {
            std::vector<double> phase1_cost(sf_.s.cols(), 0.0);
            for (std::size_t j = artificial_start_; j < sf_.s.cols(); ++j) phase1_cost[j] = 1.0;
            if (run_phase(phase1_cost, artificial_start_) == LpStatus::Unbounded)
                throw std::runtime_error("solve_lp: phase-1 unbounded (internal error)");
            double infeas = 0.0;
            for (std::size_t i = 0; i < basis_.size(); ++i)
                if (basis_[i] >= artificial_start_) infeas += sf_.b[i];
            double scale = 1.0;
            for (double v : sf_.b) scale = std::max(scale, std::abs(v));
            if (infeas > 1e-7 * scale) return LpStatus::Infeasible;
            drive_out_artificials();
        }
        std::vector<double> cost = sf_.c;
        cost.resize(sf_.s.cols(), 0.0);
        return run_phase(cost, artificial_start_);
    }

    std::vector<double> z() const {
        std::vector<double> v(sf_.s.cols(), 0.0);
        for (std::size_t i = 0; i < basis_.size(); ++i) v[basis_[i]] = sf_.b[i];
        return v;
    }

    const StandardForm& sf() const { return sf_; }
    std::size_t iterations() const { return iterations_; }

private:
    // Bland's rule throughout: entering = lowest eligible column, leaving =
    // lowest basic index among minimal ratios.
    LpStatus run_phase(const std::vector<double>& cost, std::size_t allowed_cols) {
        const std::size_t rows = basis_.size();
        std::vector<double> reduced(sf_.s.cols());
        for (;;) {
            // Reduced costs from the current basis via duals on the tableau:
            // the tableau rows are already B^{-1}A, so c_B^T rows suffice.
            std::fill(reduced.begin(), reduced.end(), 0.0);
            for (std::size_t j = 0; j < allowed_cols; ++j) reduced[j] = cost[j];
            for (std::size_t i = 0; i < rows; ++i) {
                const double cb = cost[basis_[i]];
                if (cb == 0.0) continue;
                for (std::size_t j = 0; j < allowed_cols; ++j) reduced[j] -= cb * sf_.s(i, j);
            }
            std::size_t enter = allowed_cols;
            for (std::size_t j = 0; j < allowed_cols; ++j)
                if (reduced[j] < -kEps && !is_basic(j)) {
                    enter = j;
                    break;
                }
            if (enter == allowed_cols) return LpStatus::Optimal;

            std::size_t leave = rows;
            double best_ratio = kInf;
            for (std::size_t i = 0; i < rows; ++i) {
                const double piv = sf_.s(i, enter);
                if (piv <= kEps) continue;
                const double ratio = sf_.b[i] / piv;
                if (ratio < best_ratio - kEps ||
                    (ratio < best_ratio + kEps && (leave == rows || basis_[i] < basis_[leave]))) {
                    best_ratio = ratio;
                    leave = i;
                }
            }
            if (leave == rows) return LpStatus::Unbounded;
            pivot(leave, enter);
            if (++iterations_ > kIterationCap)
                throw std::runtime_error("solve_lp: iteration cap exceeded");
        }
    }

    bool is_basic(std::size_t j) const {
        if (in_basis_.size() != sf_.s.cols()) {
            in_basis_.assign(sf_.s.cols(), false);
            for (std::size_t b : basis_) in_basis_[b] = true;
        }
        return in_basis_[j];
    }

    void pivot(std::size_t row, std::size_t col) {
        if (in_basis_.size() == sf_.s.cols()) {
            in_basis_[basis_[row]] = false;
            in_basis_[col] = true;
        }
        const std::size_t cols = sf_.s.cols();
        const double piv = sf_.s(row, col);
        for (std::size_t j = 0; j < cols; ++j) sf_.s(row, j) /= piv;
        sf_.b[row] /= piv;
        sf_.s(row, col) = 1.0;
        for (std::size_t i = 0; i < basis_.size(); ++i) {
            if (i == row) continue;
            const double f = sf_.s(i, col);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < cols; ++j) sf_.s(i, j) -= f * sf_.s(row, j);
            sf_.s(i, col) = 0.0;
            sf_.b[i] -= f * sf_.b[row];
        }
        basis_[row] = col;
    }

    // Basic artificials at zero after phase 1: pivot them onto any
    // structural column, or leave the (redundant) row inert.
    void drive_out_artificials() {
        for (std::size_t i = 0; i < basis_.size(); ++i) {
            if (basis_[i] < artificial_start_) continue;
            for (std::size_t j = 0; j < artificial_start_; ++j) {
                if (std::abs(sf_.s(i, j)) > kEps && !is_basic(j)) {
                    pivot(i, j);
                    break;
                }
            }
        }
        // Artificials never re-enter: poison their columns.
        for (std::size_t i = 0; i < basis_.size(); ++i)
            if (basis_[i] >= artificial_start_)
                for (std::size_t k = 0; k < basis_.size(); ++k)
                    if (k != i) sf_.s(k, basis_[i]) = 0.0;
    }

    StandardForm sf_;
    std::vector<std::size_t> basis_;
    mutable std::vector<char> in_basis_;
    std::size_t artificial_start_ = 0;
    std::size_t iterations_ = 0;
};

}  // namespace

void LpProblem::validate() const {
    const std::size_t n = num_vars();
    const std::size_t m = num_rows();
    if (a.rows() != m || a.cols() != n || relations.size() != m)
        throw std::invalid_argument("LpProblem: shape mismatch");
    if (!lower.empty() && lower.size() != n)
        throw std::invalid_argument("LpProblem: lower bound size mismatch");
    if (!upper.empty() && upper.size() != n)
        throw std::invalid_argument("LpProblem: upper bound size mismatch");
}

LpSolution solve_lp(const LpProblem& problem) {
    problem.validate();
    SimplexTableau tableau(to_standard_form(problem));
    LpSolution sol;
    sol.status = tableau.optimize();
    sol.iterations = tableau.iterations();
    if (sol.status != LpStatus::Optimal) return sol;

    const StandardForm& sf = tableau.sf();
    const std::vector<double> z = tableau.z();
    sol.point.assign(problem.num_vars(), 0.0);
    for (std::size_t j = 0; j < problem.num_vars(); ++j) {
        double x = sf.var_shift[j];
        for (auto [col, sign] : sf.var_terms[j]) x += sign * z[col];
        sol.point[j] = x;
    }
    sol.value = dot(problem.objective, sol.point);

    // The optimality certificate we promise: the returned point satisfies
    // every row and bound to 1e-8 absolute (scaled).
    for (std::size_t i = 0; i < problem.num_rows(); ++i) {
        double lhs = 0.0;
        for (std::size_t j = 0; j < problem.num_vars(); ++j) lhs += problem.a(i, j) * sol.point[j];
        const double tol = 1e-8 * (1.0 + std::abs(problem.rhs[i]));
        const double diff = lhs - problem.rhs[i];
        const bool ok = problem.relations[i] == Relation::LE   ? diff <= tol
                        : problem.relations[i] == Relation::GE ? diff >= -tol
                                                               : std::abs(diff) <= tol;
        if (!ok) throw std::runtime_error("solve_lp: optimal point violates row " + std::to_string(i));
    }
    return sol;
}

LpProblem build_portfolio_lp(const Matrix& samples, const std::vector<double>& mu,
                             double r_target, double beta) {
    if (!(beta > 0.0 && beta < 1.0))
        throw std::invalid_argument("build_portfolio_lp: beta must be in (0,1)");
    const std::size_t n = samples.rows();
    const std::size_t d = samples.cols();
    if (n < 1 || d != mu.size()) throw std::invalid_argument("build_portfolio_lp: shape mismatch");

    // Variables: x (d), t (free), u (n).
    const std::size_t nv = d + 1 + n;
    LpProblem p;
    p.objective.assign(nv, 0.0);
    p.objective[d] = 1.0;
    for (std::size_t i = 0; i < n; ++i)
        p.objective[d + 1 + i] = 1.0 / ((1.0 - beta) * static_cast<double>(n));
    p.lower.assign(nv, 0.0);
    p.lower[d] = -kInf;

    p.a = Matrix(n + 2, nv);
    p.relations.assign(n + 2, Relation::GE);
    p.rhs.assign(n + 2, 0.0);
    for (std::size_t i = 0; i < n; ++i) {  // u_i + xi_i^T x + t >= 0
        for (std::size_t j = 0; j < d; ++j) p.a(i, j) = samples(i, j);
        p.a(i, d) = 1.0;
        p.a(i, d + 1 + i) = 1.0;
    }
    for (std::size_t j = 0; j < d; ++j) p.a(n, j) = 1.0;  // sum x = 1
    p.relations[n] = Relation::EQ;
    p.rhs[n] = 1.0;
    for (std::size_t j = 0; j < d; ++j) p.a(n + 1, j) = mu[j];  // mu^T x >= R
    p.rhs[n + 1] = r_target;
    return p;
}

LpProblem build_two_stage_lp(const std::vector<TwoStageTuple>& tuples,
                             const std::vector<double>& c, double beta) {
    if (!(beta > 0.0 && beta < 1.0))
        throw std::invalid_argument("build_two_stage_lp: beta must be in (0,1)");
    const std::size_t n = tuples.size();
    if (n < 1) throw std::invalid_argument("build_two_stage_lp: need at least one sample");
    const std::size_t d = c.size();
    const std::size_t m = tuples[0].v.size();

    // Variables: x (d, in [0,1]), t (free), u (n), then y_i (m each).
    const std::size_t nv = d + 1 + n + n * m;
    LpProblem p;
    p.objective.assign(nv, 0.0);
    for (std::size_t j = 0; j < d; ++j) p.objective[j] = c[j];
    p.objective[d] = 1.0;
    for (std::size_t i = 0; i < n; ++i)
        p.objective[d + 1 + i] = 1.0 / ((1.0 - beta) * static_cast<double>(n));
    p.lower.assign(nv, 0.0);
    p.lower[d] = -kInf;
    p.upper.assign(nv, std::nullopt);
    for (std::size_t j = 0; j < d; ++j) p.upper[j] = 1.0;

    const std::size_t rows = n * (m + 1);
    p.a = Matrix(rows, nv);
    p.relations.assign(rows, Relation::GE);
    p.rhs.assign(rows, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& tp = tuples[i];
        if (tp.v.size() != m || tp.e.size() != m || tp.t.rows() != m || tp.t.cols() != d)
            throw std::invalid_argument("build_two_stage_lp: inconsistent tuple shapes");
        const std::size_t y0 = d + 1 + n + i * m;
        for (std::size_t r = 0; r < m; ++r) {  // y_i + T_i x >= v_i
            const std::size_t row = i * m + r;
            for (std::size_t j = 0; j < d; ++j) p.a(row, j) = tp.t(r, j);
            p.a(row, y0 + r) = 1.0;
            p.rhs[row] = tp.v[r];
        }
        const std::size_t row = n * m + i;  // u_i + t - e_i^T y_i >= 0
        p.a(row, d) = 1.0;
        p.a(row, d + 1 + i) = 1.0;
        for (std::size_t r = 0; r < m; ++r) p.a(row, y0 + r) = -tp.e[r];
    }
    return p;
}

KelleyResult kelley_minimize(const ConvexOracle& oracle, const LpProblem& region, double tol,
                             std::size_t max_iters) {
    region.validate();
    const std::size_t d = region.num_vars();

    LpProblem feas = region;
    feas.objective.assign(d, 0.0);
    LpSolution start = solve_lp(feas);
    if (start.status != LpStatus::Optimal)
        throw std::runtime_error("kelley_minimize: feasible region is empty or unbounded");

    // Master LP over (x, z): min z subject to region rows and accumulated
    // cuts g^T x - z <= g^T x_k - f_k.
    LpProblem master;
    master.objective.assign(d + 1, 0.0);
    master.objective[d] = 1.0;
    master.lower.assign(d + 1, 0.0);
    if (!region.lower.empty()) std::copy(region.lower.begin(), region.lower.end(), master.lower.begin());
    master.lower[d] = -kInf;
    master.upper.assign(d + 1, std::nullopt);
    if (!region.upper.empty()) std::copy(region.upper.begin(), region.upper.end(), master.upper.begin());

    std::vector<std::vector<double>> rows;
    std::vector<Relation> rels;
    std::vector<double> rhs;
    for (std::size_t i = 0; i < region.num_rows(); ++i) {
        std::vector<double> row(d + 1, 0.0);
        for (std::size_t j = 0; j < d; ++j) row[j] = region.a(i, j);
        rows.push_back(std::move(row));
        rels.push_back(region.relations[i]);
        rhs.push_back(region.rhs[i]);
    }

    KelleyResult res;
    res.value = kInf;
    std::vector<double> x = start.point;
    for (std::size_t k = 1; k <= max_iters; ++k) {
        auto [fx, g] = oracle(x);
        if (g.size() != d) throw std::invalid_argument("kelley_minimize: subgradient size mismatch");
        if (fx < res.value) {
            res.value = fx;
            res.point = x;
        }
        std::vector<double> cut(d + 1, 0.0);
        double cut_rhs = -fx;
        for (std::size_t j = 0; j < d; ++j) {
            cut[j] = g[j];
            cut_rhs += g[j] * x[j];
        }
        cut[d] = -1.0;
        rows.push_back(std::move(cut));
        rels.push_back(Relation::LE);
        rhs.push_back(cut_rhs);

        master.a = Matrix(rows.size(), d + 1);
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = 0; j <= d; ++j) master.a(i, j) = rows[i][j];
        master.relations = rels;
        master.rhs = rhs;
        LpSolution sol = solve_lp(master);
        if (sol.status != LpStatus::Optimal)
            throw std::runtime_error("kelley_minimize: master LP not optimal");
        res.lower_bounds.push_back(sol.value);
        res.iterations = k;
        res.gap = res.value - sol.value;
        if (res.gap <= tol) return res;
        x.assign(sol.point.begin(), sol.point.begin() + d);
    }
    throw std::runtime_error("kelley_minimize: iteration cap exceeded, gap = " +
                             std::to_string(res.gap));
}

}  // namespace rqmc
