#pragma once

#include <cstddef>
#include <vector>

namespace rqmc {

enum class RiskKind { Expectation, CVaR };

struct RiskSpec {
    RiskKind kind = RiskKind::CVaR;
    double beta = 0.9;  // ignored for Expectation
};

// Finite distribution on the real line. Atoms are kept sorted ascending
// (duplicates preserved) so quantile lookups are a binary search over the
// cumulative weights.
class EmpiricalDistribution {
public:
    // Equal weights 1/N.
    static EmpiricalDistribution from_values(std::vector<double> values);
    // General nonnegative weights; they must sum to 1 within 1e-12.
    EmpiricalDistribution(std::vector<double> atoms, std::vector<double> weights);

    std::size_t size() const { return atoms_.size(); }
    const std::vector<double>& atoms() const { return atoms_; }
    const std::vector<double>& weights() const { return weights_; }
    const std::vector<double>& cumulative() const { return cum_; }

private:
    std::vector<double> atoms_;    // sorted ascending
    std::vector<double> weights_;
    std::vector<double> cum_;      // running weight sums, cum_.back() == 1
};

inline EmpiricalDistribution empirical_from_values(std::vector<double> values) {
    return EmpiricalDistribution::from_values(std::move(values));
}

// Generalized inverse CDF, H(t) = inf{z : F(z) >= t}, t in (0,1).
double quantile(const EmpiricalDistribution& dist, double t);

double expectation(const EmpiricalDistribution& dist);

// CVaR at level beta in [0,1); beta = 0 is the plain expectation.
double cvar(const EmpiricalDistribution& dist, double beta);

double apply_risk(const EmpiricalDistribution& dist, const RiskSpec& spec);

// L^p distance between the two quantile functions, integrated exactly over
// the merged breakpoints of (0,1).
double wasserstein_p(const EmpiricalDistribution& a, const EmpiricalDistribution& b, double p);

// Same integral against the N(mu, sigma^2) quantile function, by
// Gauss-Legendre quadrature on each atom interval.
double wasserstein_p_to_normal(const EmpiricalDistribution& dist, double mu, double sigma,
                               double p);

// CVaR_beta of N(mu, sigma^2): mu + sigma * phi(Phi^{-1}(beta)) / (1 - beta).
double cvar_normal_closed_form(double mu, double sigma, double beta);

// The kappa(beta) factor above, for sigma = 1, mu = 0.
double cvar_normal_factor(double beta);

}  // namespace rqmc
