#include "doctest.h"

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "rqmc/problems.hpp"
#include "rqmc/risk.hpp"
#include "rqmc/rng.hpp"

using namespace rqmc;

namespace {

double inner_recourse_lp(const std::vector<double>& x, const TwoStageTuple& tuple) {
    const std::size_t m = tuple.v.size();
    LpProblem p;
    p.objective = tuple.e;
    p.a = Matrix::identity(m);
    p.relations.assign(m, Relation::GE);
    const std::vector<double> tx = mat_vec(tuple.t, x);
    p.rhs.resize(m);
    for (std::size_t j = 0; j < m; ++j) p.rhs[j] = tuple.v[j] - tx[j];
    const LpSolution s = solve_lp(p);
    REQUIRE(s.status == LpStatus::Optimal);
    return s.value;
}

}  // namespace

TEST_CASE("generated portfolio instances respect their ranges") {
    for (std::uint64_t seed : {1ull, 2ull, 77ull}) {
        const PortfolioInstance inst =
            gen_portfolio_instance(seed, 4, 0.9, 1.05, PortfolioModel::Normal);
        CHECK(inst.d == 4);
        CHECK(inst.mu.size() == 4);
        double mu_max = 0.0;
        for (double v : inst.mu) {
            CHECK(v >= 0.9);
            CHECK(v <= 1.2);
            mu_max = std::max(mu_max, v);
        }
        CHECK(mu_max >= inst.r_target);  // feasible by construction
        for (double v : inst.q.data()) {
            CHECK(v >= 0.0);
            CHECK(v <= 0.1);
        }
        // sigma really is q q^T
        const Matrix qqt = inst.q * inst.q.transposed();
        for (std::size_t i = 0; i < 16; ++i) CHECK(inst.sigma.data()[i] == qqt.data()[i]);
    }
    // identical seeds reproduce, r_target above the mu range cannot be met
    const PortfolioInstance a = gen_portfolio_instance(9, 3, 0.9, 1.05, PortfolioModel::Normal);
    const PortfolioInstance b = gen_portfolio_instance(9, 3, 0.9, 1.05, PortfolioModel::Normal);
    CHECK(a.mu == b.mu);
    CHECK(a.q.data() == b.q.data());
    CHECK_THROWS_AS((void)gen_portfolio_instance(1, 3, 0.9, 1.25, PortfolioModel::Normal),
                    std::runtime_error);
    CHECK_THROWS_AS((void)gen_portfolio_instance(1, 0, 0.9, 1.05, PortfolioModel::Normal),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)gen_portfolio_instance(1, 3, 1.0, 1.05, PortfolioModel::Normal),
                    std::invalid_argument);
}

TEST_CASE("generated two-stage instances respect their ranges") {
    const TwoStageInstance inst = gen_two_stage_instance(4, 3, 2, 0.9);
    CHECK(inst.d == 3);
    CHECK(inst.m == 2);
    CHECK(inst.c.size() == 3);
    for (double v : inst.c) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    const TwoStageInstance again = gen_two_stage_instance(4, 3, 2, 0.9);
    CHECK(inst.c == again.c);
    CHECK_THROWS_AS((void)gen_two_stage_instance(1, 0, 2, 0.9), std::invalid_argument);
    CHECK_THROWS_AS((void)gen_two_stage_instance(1, 2, 2, 1.5), std::invalid_argument);
}

TEST_CASE("closed-form recourse equals the inner LP on random cases") {
    Rng rng(303);
    for (int rep = 0; rep < 500; ++rep) {
        const std::size_t d = 1 + rng.next_below(4);
        const std::size_t m = 1 + rng.next_below(4);
        TwoStageTuple tuple{Matrix(m, d), std::vector<double>(m), std::vector<double>(m)};
        for (double& v : tuple.t.data()) v = 0.5 + 0.5 * rng.next_double();
        for (double& v : tuple.v) v = 50.0 + 50.0 * rng.next_double();
        for (double& v : tuple.e) v = 2.0 + 2.0 * rng.next_double();
        std::vector<double> x(d);
        for (double& v : x) v = rng.next_double();
        // Stretch some x so both recourse branches get exercised.
        if (rep % 2 == 0)
            for (double& v : x) v *= 150.0;
        const double closed = recourse_value(x, tuple);
        const double lp = inner_recourse_lp(x, tuple);
        CHECK(closed == doctest::Approx(lp).epsilon(1e-9));
        CHECK(closed >= 0.0);
    }
    CHECK_THROWS_AS((void)recourse_value({1.0}, TwoStageTuple{Matrix(2, 2), {1.0, 1.0}, {1.0, 1.0}}),
                    std::invalid_argument);
}

TEST_CASE("exact normal value in closed-form special cases") {
    const double beta = 0.9;
    const double kappa = cvar_normal_factor(beta);
    {
        // d = 1: the simplex pins x = 1, so the value is -mu_1 + kappa sigma_1.
        PortfolioInstance inst;
        inst.d = 1;
        inst.mu = {1.1};
        inst.q = Matrix(1, 1, 0.07);
        inst.sigma = inst.q * inst.q.transposed();
        inst.r_target = 1.05;
        inst.beta = beta;
        CHECK(exact_portfolio_normal(inst) == doctest::Approx(-1.1 + kappa * 0.07).epsilon(1e-7));
    }
    {
        // Symmetric d = 2 with sigma = s I: optimum at (1/2, 1/2).
        const double s = 0.0049;
        PortfolioInstance inst;
        inst.d = 2;
        inst.mu = {1.0, 1.0};
        inst.q = Matrix(2, 2);
        inst.q(0, 0) = inst.q(1, 1) = std::sqrt(s);
        inst.sigma = inst.q * inst.q.transposed();
        inst.r_target = 0.95;
        inst.beta = beta;
        CHECK(exact_portfolio_normal(inst) ==
              doctest::Approx(-1.0 + kappa * std::sqrt(s / 2.0)).epsilon(1e-6));
    }
    PortfolioInstance wrong = gen_portfolio_instance(1, 2, beta, 1.0, PortfolioModel::UniformAffine);
    CHECK_THROWS_AS((void)exact_portfolio_normal(wrong), std::invalid_argument);
}

TEST_CASE("portfolio sample matrices are deterministic and model-consistent") {
    const PortfolioInstance inst =
        gen_portfolio_instance(5, 3, 0.9, 1.0, PortfolioModel::UniformAffine);
    const Matrix a = portfolio_samples(inst, Sampler::SobolScrambled, Factorization::Cholesky, 64, 3);
    const Matrix b = portfolio_samples(inst, Sampler::SobolScrambled, Factorization::Cholesky, 64, 3);
    CHECK(a.data() == b.data());
    // Uniform-affine realizations stay inside mu plus/minus sqrt(12)/2 row sums.
    for (std::size_t i = 0; i < 64; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            double radius = 0.0;
            for (std::size_t k = 0; k < 3; ++k) radius += std::abs(inst.q(j, k));
            radius *= std::sqrt(12.0) / 2.0;
            CHECK(a(i, j) >= inst.mu[j] - radius - 1e-12);
            CHECK(a(i, j) <= inst.mu[j] + radius + 1e-12);
        }
}

TEST_CASE("portfolio cutting-plane route agrees with the explicit LP") {
    const PortfolioInstance inst = gen_portfolio_instance(11, 3, 0.9, 1.0, PortfolioModel::Normal);
    const std::size_t n = 512;  // above the internal LP cutoff
    const SolveResult via_kelley =
        sample_based_solve(inst, Sampler::SobolScrambled, Factorization::PCA, n, 21);
    const Matrix samples = portfolio_samples(inst, Sampler::SobolScrambled, Factorization::PCA, n, 21);
    const LpSolution via_lp = solve_lp(build_portfolio_lp(samples, inst.mu, inst.r_target, inst.beta));
    REQUIRE(via_lp.status == LpStatus::Optimal);
    CHECK(via_kelley.value == doctest::Approx(via_lp.value).epsilon(1e-7));
    // And just below the cutoff both callers see the LP route.
    const SolveResult small =
        sample_based_solve(inst, Sampler::SobolScrambled, Factorization::PCA, 256, 21);
    const Matrix small_samples =
        portfolio_samples(inst, Sampler::SobolScrambled, Factorization::PCA, 256, 21);
    const LpSolution small_lp =
        solve_lp(build_portfolio_lp(small_samples, inst.mu, inst.r_target, inst.beta));
    CHECK(small.value == doctest::Approx(small_lp.value).epsilon(1e-12));
}

TEST_CASE("two-stage cutting-plane route agrees with the explicit LP") {
    const TwoStageInstance inst = gen_two_stage_instance(7, 2, 2, 0.8);
    const std::size_t n = 128;  // above the internal LP cutoff
    const SolveResult via_kelley = sample_based_solve(inst, Sampler::SobolScrambled, n, 4);

    const std::size_t dim = inst.m * inst.d + 2 * inst.m;
    const PointSet points = generate_points(Sampler::SobolScrambled, 4, n, dim);
    std::vector<TwoStageTuple> tuples;
    for (std::size_t i = 0; i < n; ++i)
        tuples.push_back(
            reshape_two_stage(std::span<const double>(points.points.row(i), dim), inst.d, inst.m));
    const LpSolution via_lp = solve_lp(build_two_stage_lp(tuples, inst.c, inst.beta));
    REQUIRE(via_lp.status == LpStatus::Optimal);
    CHECK(via_kelley.value == doctest::Approx(via_lp.value).epsilon(1e-6));
}

TEST_CASE("sample-based solves are reproducible and expose their minimizer") {
    const PortfolioInstance inst = gen_portfolio_instance(3, 3, 0.9, 1.0, PortfolioModel::Normal);
    const SolveResult a = sample_based_solve(inst, Sampler::MC, Factorization::Cholesky, 128, 9);
    const SolveResult b = sample_based_solve(inst, Sampler::MC, Factorization::Cholesky, 128, 9);
    CHECK(a.value == b.value);
    CHECK(a.x == b.x);
    CHECK(a.x.size() == inst.d);
    double total = 0.0, ret = 0.0;
    for (std::size_t j = 0; j < inst.d; ++j) {
        CHECK(a.x[j] >= -1e-9);
        total += a.x[j];
        ret += inst.mu[j] * a.x[j];
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(ret >= inst.r_target - 1e-9);
    CHECK(sample_based_optimal_value(inst, Sampler::MC, Factorization::Cholesky, 128, 9) == a.value);

    const TwoStageInstance ts = gen_two_stage_instance(2, 2, 1, 0.85);
    const SolveResult t1 = sample_based_solve(ts, Sampler::LHS, 32, 5);
    const SolveResult t2 = sample_based_solve(ts, Sampler::LHS, 32, 5);
    CHECK(t1.value == t2.value);
    CHECK(t1.x.size() == ts.d);
    for (double v : t1.x) {
        CHECK(v >= -1e-9);
        CHECK(v <= 1.0 + 1e-9);
    }
    CHECK(sample_based_optimal_value(ts, Sampler::LHS, 32, 5) == t1.value);
}

TEST_CASE("instance serialization is flat, keyed, and deterministic") {
    const PortfolioInstance inst = gen_portfolio_instance(8, 2, 0.9, 1.02, PortfolioModel::Normal);
    const std::string s = serialize_portfolio_instance(inst);
    CHECK(s.find("problem = portfolio\n") != std::string::npos);
    CHECK(s.find("model = normal\n") != std::string::npos);
    CHECK(s.find("d = 2\n") != std::string::npos);
    CHECK(s.find("R = 1.02") != std::string::npos);
    CHECK(s.find("mu =") != std::string::npos);
    CHECK(s.find("q =") != std::string::npos);
    CHECK(s == serialize_portfolio_instance(inst));

    const PortfolioInstance un = gen_portfolio_instance(8, 2, 0.9, 1.02, PortfolioModel::UniformAffine);
    CHECK(serialize_portfolio_instance(un).find("model = uniform\n") != std::string::npos);

    const TwoStageInstance ts = gen_two_stage_instance(8, 2, 3, 0.95);
    const std::string t = serialize_two_stage_instance(ts);
    CHECK(t.find("problem = two_stage\n") != std::string::npos);
    CHECK(t.find("m = 3\n") != std::string::npos);
    CHECK(t.find("c =") != std::string::npos);
    CHECK(t == serialize_two_stage_instance(ts));
}
