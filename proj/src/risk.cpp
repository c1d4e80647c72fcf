#include "rqmc/risk.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "rqmc/transforms.hpp"

namespace rqmc {

namespace {

double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

// Smallest atom index whose cumulative weight reaches t.
std::size_t quantile_index(const EmpiricalDistribution& dist, double t) {
    const auto& cum = dist.cumulative();
    const auto it = std::lower_bound(cum.begin(), cum.end(), t);
    return it == cum.end() ? cum.size() - 1 : static_cast<std::size_t>(it - cum.begin());
}

}  // namespace

EmpiricalDistribution EmpiricalDistribution::from_values(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("empirical_from_values: empty input");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    std::vector<double> weights(n, 1.0 / static_cast<double>(n));
    EmpiricalDistribution dist(std::move(values), std::move(weights));
    // Exact cumulative weights (i+1)/n keep quantile boundaries sharp.
    for (std::size_t i = 0; i < n; ++i)
        dist.cum_[i] = static_cast<double>(i + 1) / static_cast<double>(n);
    return dist;
}

EmpiricalDistribution::EmpiricalDistribution(std::vector<double> atoms,
                                             std::vector<double> weights) {
    if (atoms.empty() || atoms.size() != weights.size())
        throw std::invalid_argument("EmpiricalDistribution: bad atom/weight shapes");
    std::vector<std::size_t> order(atoms.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return atoms[a] < atoms[b]; });
    atoms_.reserve(atoms.size());
    weights_.reserve(atoms.size());
    double total = 0.0;
    for (std::size_t i : order) {
        if (weights[i] < 0.0) throw std::invalid_argument("EmpiricalDistribution: negative weight");
        atoms_.push_back(atoms[i]);
        weights_.push_back(weights[i]);
        total += weights[i];
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("EmpiricalDistribution: weights must sum to 1");
    cum_.resize(atoms_.size());
    double run = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
        run += weights_[i];
        cum_[i] = run;
    }
    cum_.back() = 1.0;
}

double quantile(const EmpiricalDistribution& dist, double t) {
    if (!(t > 0.0 && t < 1.0)) throw std::domain_error("quantile: t must be in (0,1)");
    return dist.atoms()[quantile_index(dist, t)];
}

double expectation(const EmpiricalDistribution& dist) {
    double s = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) s += dist.weights()[i] * dist.atoms()[i];
    return s;
}

double cvar(const EmpiricalDistribution& dist, double beta) {
    if (!(beta >= 0.0 && beta < 1.0)) throw std::domain_error("cvar: beta must be in [0,1)");
    if (beta == 0.0) return expectation(dist);
    // Rockafellar-Uryasev objective evaluated at its minimizer t = H(beta);
    // the q-anchored form handles fractional tail weight at atom boundaries.
    const double q = quantile(dist, beta);
    double tail = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        const double excess = dist.atoms()[i] - q;
        if (excess > 0.0) tail += dist.weights()[i] * excess;
    }
    return q + tail / (1.0 - beta);
}

double apply_risk(const EmpiricalDistribution& dist, const RiskSpec& spec) {
    return spec.kind == RiskKind::Expectation ? expectation(dist) : cvar(dist, spec.beta);
}

double wasserstein_p(const EmpiricalDistribution& a, const EmpiricalDistribution& b, double p) {
    if (p < 1.0) throw std::invalid_argument("wasserstein_p: p must be >= 1");
    double integral = 0.0;
    double t = 0.0;
    std::size_t ia = 0, ib = 0;
    while (t < 1.0) {
        const double ca = a.cumulative()[ia];
        const double cb = b.cumulative()[ib];
        const double next = std::min(ca, cb);
        const double len = next - t;
        if (len > 0.0) integral += std::pow(std::abs(a.atoms()[ia] - b.atoms()[ib]), p) * len;
        // Advance every exhausted side; both cumulatives end at exactly 1,
        // so the loop cannot stall even across zero-weight atoms.
        if (ca <= next && ia + 1 < a.size()) ++ia;
        if (cb <= next && ib + 1 < b.size()) ++ib;
        t = next;
    }
    return std::pow(integral, 1.0 / p);
}

double wasserstein_p_to_normal(const EmpiricalDistribution& dist, double mu, double sigma,
                               double p) {
    if (p < 1.0) throw std::invalid_argument("wasserstein_p_to_normal: p must be >= 1");
    // Midpoint rule per atom interval; nodes stay interior, where the normal
    // quantile is finite.
    constexpr int kNodes = 16;
    double integral = 0.0;
    double lo = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        const double hi = dist.cumulative()[i];
        const double len = hi - lo;
        if (len > 0.0) {
            const double h = len / kNodes;
            for (int k = 0; k < kNodes; ++k) {
                const double t = lo + (k + 0.5) * h;
                const double ref = mu + sigma * norm_inv_cdf(t);
                integral += std::pow(std::abs(dist.atoms()[i] - ref), p) * h;
            }
        }
        lo = hi;
    }
    return std::pow(integral, 1.0 / p);
}

double cvar_normal_factor(double beta) {
    if (!(beta > 0.0 && beta < 1.0))
        throw std::domain_error("cvar_normal_factor: beta must be in (0,1)");
    return normal_pdf(norm_inv_cdf(beta)) / (1.0 - beta);
}

double cvar_normal_closed_form(double mu, double sigma, double beta) {
    if (sigma < 0.0) throw std::invalid_argument("cvar_normal_closed_form: sigma must be >= 0");
    return mu + sigma * cvar_normal_factor(beta);
}

}  // namespace rqmc
