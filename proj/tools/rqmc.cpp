#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rqmc/experiments.hpp"
#include "rqmc/parallel.hpp"
#include "rqmc/problems.hpp"
#include "rqmc/risk.hpp"
#include "rqmc/sequences.hpp"

using namespace rqmc;

namespace {

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Relative output paths land in $RQMC_OUT_DIR when it is set.
std::string resolve_output(const std::string& path) {
    if (path.empty() || path.front() == '/') return path;
    const char* dir = std::getenv("RQMC_OUT_DIR");
    if (!dir || !*dir) return path;
    std::string d(dir);
    if (d.back() != '/') d += '/';
    return d + path;
}

int cmd_sample(const std::string& sampler_name_str, std::size_t n, std::size_t d,
               std::uint64_t seed, const std::string& out_path) {
    const auto sampler = sampler_from_name(sampler_name_str);
    if (!sampler) {
        std::cerr << "unknown sampler: " << sampler_name_str << "\n";
        return 2;
    }
    const PointSet ps = generate_points(*sampler, seed, n, d);
    std::ostringstream out;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            if (j) out << ',';
            out << g17(ps.points(i, j));
        }
        out << '\n';
    }
    if (out_path.empty()) {
        std::cout << out.str();
    } else {
        std::ofstream f(resolve_output(out_path), std::ios::binary);
        if (!f) throw std::runtime_error("cannot open output: " + out_path);
        f << out.str();
    }
    return 0;
}

int cmd_solve(const std::string& problem, const std::string& model, const std::string& sampler_str,
              std::size_t n, std::uint64_t instance_seed, std::uint64_t rep_seed, double beta,
              double r_target, std::size_t d, std::size_t m, const std::string& factorization_str) {
    const auto sampler = sampler_from_name(sampler_str);
    if (!sampler) {
        std::cerr << "unknown sampler: " << sampler_str << "\n";
        return 2;
    }
    const Factorization factorization =
        factorization_str == "pca" ? Factorization::PCA : Factorization::Cholesky;
    if (problem == "portfolio") {
        const PortfolioModel pm =
            model == "uniform" ? PortfolioModel::UniformAffine : PortfolioModel::Normal;
        const PortfolioInstance inst = gen_portfolio_instance(instance_seed, d, beta, r_target, pm);
        const SolveResult res = sample_based_solve(inst, *sampler, factorization, n, rep_seed);
        std::cout << "value = " << g17(res.value) << "\nx =";
        for (double v : res.x) std::cout << ' ' << g17(v);
        std::cout << "\n" << serialize_portfolio_instance(inst);
    } else if (problem == "two_stage") {
        const TwoStageInstance inst = gen_two_stage_instance(instance_seed, d, m, beta);
        const SolveResult res = sample_based_solve(inst, *sampler, n, rep_seed);
        std::cout << "value = " << g17(res.value) << "\nx =";
        for (double v : res.x) std::cout << ' ' << g17(v);
        std::cout << "\n" << serialize_two_stage_instance(inst);
    } else {
        std::cerr << "unknown problem: " << problem << "\n";
        return 2;
    }
    return 0;
}

int cmd_experiment(const std::string& config_path, const std::string& output_override,
                   const std::string& svg_path, std::optional<std::size_t> replications,
                   std::optional<std::uint64_t> master_seed, int threads) {
    ExperimentConfig cfg = load_experiment_config(config_path);
    if (!output_override.empty()) cfg.output_path = output_override;
    if (replications) cfg.replications = *replications;
    if (master_seed) cfg.master_seed = *master_seed;
    if (threads > 0) set_max_threads(threads);
    cfg.validate();

    const std::string out_path = resolve_output(cfg.output_path);
    ExperimentReport report;
    try {
        report = run_sweep(cfg);
    } catch (const std::exception& e) {
        // Leave a partial artifact so a failed CI run is inspectable.
        if (!out_path.empty()) {
            std::ofstream f(out_path, std::ios::binary);
            f << "# rqmc-risk sweep v1\n# error = " << e.what() << "\n";
        }
        throw;
    }
    if (!out_path.empty()) write_report_csv(report, out_path);
    if (!svg_path.empty()) write_report_svg(report, resolve_output(svg_path));
    if (out_path.empty()) std::cout << report_csv(report);

    std::cout << "reference = " << g17(report.reference) << "\n";
    std::cout << "sampler,n,mean,bias,rmse\n";
    for (const CellStats& cell : report.cells)
        std::cout << sampler_name(cell.sampler) << ',' << cell.n << ',' << g17(cell.mean) << ','
                  << g17(cell.bias) << ',' << g17(cell.rmse) << "\n";
    for (const SamplerFit& fit : report.fits)
        std::cout << "slope " << sampler_name(fit.sampler) << " = " << g17(fit.slope) << "\n";
    return 0;
}

int cmd_diagnose(const std::string& kind, const std::string& sampler_str, double p,
                 std::vector<std::size_t> schedule, std::uint64_t seed, std::size_t d,
                 double beta, double r_target, std::size_t resolution, std::size_t n,
                 bool scrambled) {
    const auto sampler = sampler_from_name(sampler_str);
    if (!sampler) {
        std::cerr << "unknown sampler: " << sampler_str << "\n";
        return 2;
    }
    if (schedule.empty()) schedule = {64, 256, 1024, 4096};
    if (kind == "wasserstein") {
        std::cout << "n,wasserstein_" << g17(p) << "\n";
        for (const DecayRow& row : wasserstein_decay(*sampler, p, schedule, seed))
            std::cout << row.n << ',' << g17(row.value) << "\n";
        return 0;
    }
    if (kind == "uniform") {
        const PortfolioInstance inst =
            gen_portfolio_instance(seed, d, beta, r_target, PortfolioModel::Normal);
        std::cout << "n,sup_error\n";
        for (const DecayRow& row :
             uniform_convergence_diagnostic(inst, resolution, schedule, *sampler, seed))
            std::cout << row.n << ',' << g17(row.value) << "\n";
        return 0;
    }
    if (kind == "stratification") {
        const bool ok = stratification_pass(n, d, scrambled, seed);
        std::cout << "stratification n=" << n << " d=" << d
                  << (scrambled ? " scrambled" : " plain") << ": " << (ok ? "pass" : "FAIL")
                  << "\n";
        return ok ? 0 : 1;
    }
    std::cerr << "unknown diagnostic kind: " << kind << "\n";
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sample-based risk functional toolkit"};
    app.require_subcommand(1);

    std::string sampler = "mc", out_path, problem = "portfolio", model = "normal";
    std::string factorization = "cholesky", config_path, svg_path, kind;
    std::size_t n = 0, d = 1, m = 2, resolution = 16;
    std::uint64_t seed = 0, rep_seed = 1;
    double beta = 0.9, r_target = 1.05, p = 2.0;
    std::vector<std::size_t> schedule;
    std::optional<std::size_t> replications;
    std::optional<std::uint64_t> master_seed;
    int threads = 0;
    bool scrambled = false;

    CLI::App* sample = app.add_subcommand("sample", "Write a point set as CSV");
    sample->add_option("--sampler", sampler, "mc|sobol|sobol_scrambled|halton|halton_shifted|lhs");
    sample->add_option("--n", n, "number of points")->required();
    sample->add_option("--d", d, "dimension")->required();
    sample->add_option("--seed", seed, "randomization seed");
    sample->add_option("--out", out_path, "output file (stdout if omitted)");

    CLI::App* solve = app.add_subcommand("solve", "One sample-based solve");
    solve->add_option("--problem", problem, "portfolio|two_stage");
    solve->add_option("--model", model, "normal|uniform (portfolio only)");
    solve->add_option("--sampler", sampler, "point sampler");
    solve->add_option("--n", n, "sample size")->required();
    solve->add_option("--instance-seed", seed, "instance generator seed");
    solve->add_option("--rep-seed", rep_seed, "replication seed");
    solve->add_option("--beta", beta, "CVaR level");
    solve->add_option("--R", r_target, "portfolio return target");
    solve->add_option("--d", d, "decision dimension");
    solve->add_option("--m", m, "second-stage rows (two_stage)");
    solve->add_option("--factorization", factorization, "cholesky|pca");

    CLI::App* experiment = app.add_subcommand("experiment", "Run an RMSE/bias sweep");
    experiment->add_option("--config", config_path, "flat key = value config file")->required();
    experiment->add_option("--output", out_path, "override the config output path");
    experiment->add_option("--svg", svg_path, "also write an SVG rate plot");
    experiment->add_option("--replications", replications, "override replication count");
    experiment->add_option("--master-seed", master_seed, "override the master seed");
    experiment->add_option("--threads", threads, "cap worker threads (0 = default)");

    CLI::App* diagnose = app.add_subcommand("diagnose", "Convergence diagnostics");
    diagnose->add_option("--kind", kind, "wasserstein|uniform|stratification")->required();
    diagnose->add_option("--sampler", sampler, "point sampler");
    diagnose->add_option("--p", p, "Wasserstein order");
    diagnose->add_option("--n-schedule", schedule, "sample sizes");
    diagnose->add_option("--seed", seed, "seed");
    diagnose->add_option("--d", d, "dimension");
    diagnose->add_option("--beta", beta, "CVaR level");
    diagnose->add_option("--R", r_target, "portfolio return target");
    diagnose->add_option("--resolution", resolution, "simplex grid resolution");
    diagnose->add_option("--n", n, "point count (stratification)");
    diagnose->add_flag("--scrambled", scrambled, "scramble the net (stratification)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (sample->parsed()) return cmd_sample(sampler, n, d, seed, out_path);
        if (solve->parsed())
            return cmd_solve(problem, model, sampler, n, seed, rep_seed, beta, r_target, d, m,
                             factorization);
        if (experiment->parsed())
            return cmd_experiment(config_path, out_path, svg_path, replications, master_seed,
                                  threads);
        if (diagnose->parsed())
            return cmd_diagnose(kind, sampler, p, schedule, seed, d, beta, r_target, resolution, n,
                                scrambled);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
