#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rqmc/problems.hpp"
#include "rqmc/sequences.hpp"
#include "rqmc/transforms.hpp"

namespace rqmc {

enum class ProblemKind { PortfolioNormal, PortfolioUniform, TwoStage, Stub };
enum class RefMode { Exact, HighN };

const char* problem_kind_name(ProblemKind k);

struct ExperimentConfig {
    ProblemKind problem = ProblemKind::PortfolioNormal;
    std::uint64_t instance_seed = 1;
    std::size_t d = 3;
    std::size_t m = 2;  // two-stage only
    double beta = 0.9;
    double r_target = 1.05;
    Factorization factorization = Factorization::Cholesky;
    std::vector<Sampler> samplers{Sampler::MC, Sampler::SobolScrambled};
    std::vector<std::size_t> n_schedule{64, 128, 256, 512, 1024};
    std::size_t replications = 10;  // M
    std::uint64_t master_seed = 1;
    RefMode ref_mode = RefMode::HighN;
    unsigned ref_exponent = 12;
    std::size_t ref_replications = 100;  // M_ref
    double stub_bias = 0.1;             // synthetic estimator offset
    std::string output_path;
    bool parallel = true;

    void validate() const;  // M >= 2, n_schedule strictly increasing, ...
};

// Flat `key = value` config text; unknown keys are an error.
ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);

struct CellStats {
    Sampler sampler;
    std::size_t n = 0;
    std::vector<double> values;  // one per replication, replication order
    double mean = 0.0;
    double bias = 0.0;
    double rmse = 0.0;
    double variance = 0.0;
};

struct SamplerFit {
    Sampler sampler;
    double slope = 0.0;
    double intercept = 0.0;
};

struct ExperimentReport {
    ExperimentConfig config;
    double reference = 0.0;
    std::vector<CellStats> cells;  // sampler-major, n ascending
    std::vector<SamplerFit> fits;
};

double reference_value(const ExperimentConfig& config);
ExperimentReport run_sweep(const ExperimentConfig& config);

// Ordinary least squares; throws on fewer than two points or constant x.
std::pair<double, double> fit_slope(const std::vector<double>& log2_n,
                                    const std::vector<double>& log2_rmse);

void write_report_csv(const ExperimentReport& report, const std::string& path);
std::string report_csv(const ExperimentReport& report);
void write_report_svg(const ExperimentReport& report, const std::string& path);

// --- Convergence diagnostics ---

struct DecayRow {
    std::size_t n = 0;
    double value = 0.0;
};

// W_p distance between the empirical law of Phi^{-1}(points) and N(0,1).
std::vector<DecayRow> wasserstein_decay(Sampler sampler, double p,
                                        const std::vector<std::size_t>& n_schedule,
                                        std::uint64_t seed);

// sup over a simplex grid of |empirical CVaR of -xi^T x - exact Gaussian
// CVaR|; Normal model, d <= 3.
std::vector<DecayRow> uniform_convergence_diagnostic(const PortfolioInstance& inst,
                                                     std::size_t grid_resolution,
                                                     const std::vector<std::size_t>& n_schedule,
                                                     Sampler sampler, std::uint64_t rep_seed);

// Exact 1-D dyadic stratification of the first n = 2^m Sobol' points.
bool stratification_pass(std::size_t n, std::size_t d, bool scrambled, std::uint64_t seed);

}  // namespace rqmc
