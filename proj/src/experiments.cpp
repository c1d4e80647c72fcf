#include "rqmc/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rqmc/parallel.hpp"
#include "rqmc/risk.hpp"
#include "rqmc/rng.hpp"

namespace rqmc {

namespace {

constexpr std::uint64_t kRefStreamTag = 0x5245464dULL;  // keeps reference seeds off the sweep streams

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const char* factorization_name(Factorization f) {
    return f == Factorization::Cholesky ? "cholesky" : "pca";
}

const char* ref_mode_name(RefMode m) { return m == RefMode::Exact ? "exact" : "highn"; }

double solve_one(const ExperimentConfig& cfg, const PortfolioInstance* pinst,
                 const TwoStageInstance* tinst, double reference, Sampler sampler, std::size_t n,
                 std::uint64_t seed) {
    switch (cfg.problem) {
        case ProblemKind::PortfolioNormal:
        case ProblemKind::PortfolioUniform:
            return sample_based_optimal_value(*pinst, sampler, cfg.factorization, n, seed);
        case ProblemKind::TwoStage:
            return sample_based_optimal_value(*tinst, sampler, n, seed);
        case ProblemKind::Stub:
            return reference + cfg.stub_bias;
    }
    throw std::invalid_argument("unknown problem kind");
}

}  // namespace

const char* problem_kind_name(ProblemKind k) {
    switch (k) {
        case ProblemKind::PortfolioNormal: return "portfolio_normal";
        case ProblemKind::PortfolioUniform: return "portfolio_uniform";
        case ProblemKind::TwoStage: return "two_stage";
        case ProblemKind::Stub: return "stub";
    }
    return "?";
}

void ExperimentConfig::validate() const {
    if (replications < 2) throw std::invalid_argument("config: replications must be >= 2");
    if (samplers.empty()) throw std::invalid_argument("config: at least one sampler");
    if (n_schedule.empty()) throw std::invalid_argument("config: empty n_schedule");
    for (std::size_t i = 1; i < n_schedule.size(); ++i)
        if (n_schedule[i] <= n_schedule[i - 1])
            throw std::invalid_argument("config: n_schedule must be strictly increasing");
    if (ref_mode == RefMode::Exact && problem != ProblemKind::PortfolioNormal &&
        problem != ProblemKind::Stub)
        throw std::invalid_argument("config: exact reference needs the normal portfolio problem");
}

ExperimentConfig parse_experiment_config(const std::string& text) {
    ExperimentConfig cfg;
    cfg.samplers.clear();
    cfg.n_schedule.clear();
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw std::invalid_argument("config: expected `key = value`: " + line);
            continue;
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        std::istringstream vs(value);
        if (key == "problem") {
            if (value == "portfolio_normal") cfg.problem = ProblemKind::PortfolioNormal;
            else if (value == "portfolio_uniform") cfg.problem = ProblemKind::PortfolioUniform;
            else if (value == "two_stage") cfg.problem = ProblemKind::TwoStage;
            else if (value == "stub") cfg.problem = ProblemKind::Stub;
            else throw std::invalid_argument("config: unknown problem: " + value);
        } else if (key == "instance_seed") vs >> cfg.instance_seed;
        else if (key == "d") vs >> cfg.d;
        else if (key == "m") vs >> cfg.m;
        else if (key == "beta") vs >> cfg.beta;
        else if (key == "R") vs >> cfg.r_target;
        else if (key == "factorization") {
            if (value == "cholesky") cfg.factorization = Factorization::Cholesky;
            else if (value == "pca") cfg.factorization = Factorization::PCA;
            else throw std::invalid_argument("config: unknown factorization: " + value);
        } else if (key == "samplers") {
            std::string name;
            while (vs >> name) {
                auto s = sampler_from_name(name);
                if (!s) throw std::invalid_argument("config: unknown sampler: " + name);
                cfg.samplers.push_back(*s);
            }
        } else if (key == "n_schedule") {
            std::size_t n;
            while (vs >> n) cfg.n_schedule.push_back(n);
        } else if (key == "replications") vs >> cfg.replications;
        else if (key == "master_seed") vs >> cfg.master_seed;
        else if (key == "ref_mode") {
            if (value == "exact") cfg.ref_mode = RefMode::Exact;
            else if (value == "highn") cfg.ref_mode = RefMode::HighN;
            else throw std::invalid_argument("config: unknown ref_mode: " + value);
        } else if (key == "ref_exponent") vs >> cfg.ref_exponent;
        else if (key == "ref_replications") vs >> cfg.ref_replications;
        else if (key == "stub_bias") vs >> cfg.stub_bias;
        else if (key == "output") cfg.output_path = value;
        else if (key == "parallel") cfg.parallel = value == "true" || value == "1";
        else throw std::invalid_argument("config: unknown key: " + key);
        if (vs.fail() && key != "problem" && key != "factorization" && key != "ref_mode" &&
            key != "output" && key != "samplers" && key != "n_schedule" && key != "parallel")
            throw std::invalid_argument("config: bad value for " + key + ": " + value);
    }
    if (cfg.samplers.empty())
        cfg.samplers = {Sampler::MC, Sampler::SobolScrambled};
    if (cfg.n_schedule.empty()) cfg.n_schedule = {64, 128, 256, 512, 1024};
    cfg.validate();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_experiment_config(buf.str());
}

double reference_value(const ExperimentConfig& config) {
    config.validate();
    if (config.problem == ProblemKind::Stub) return 0.0;
    if (config.ref_mode == RefMode::Exact) {
        const PortfolioInstance inst =
            gen_portfolio_instance(config.instance_seed, config.d, config.beta, config.r_target,
                                   PortfolioModel::Normal);
        return exact_portfolio_normal(inst, 1e-7);
    }
    // HighN: average M_ref scrambled-Sobol' solves at 2^ref with derived seeds.
    const std::size_t n = std::size_t{1} << config.ref_exponent;
    const std::size_t m_ref = config.ref_replications;
    std::vector<double> values(m_ref);
    const PortfolioInstance pinst =
        config.problem == ProblemKind::TwoStage
            ? PortfolioInstance{}
            : gen_portfolio_instance(config.instance_seed, config.d, config.beta, config.r_target,
                                     config.problem == ProblemKind::PortfolioNormal
                                         ? PortfolioModel::Normal
                                         : PortfolioModel::UniformAffine);
    const TwoStageInstance tinst =
        config.problem == ProblemKind::TwoStage
            ? gen_two_stage_instance(config.instance_seed, config.d, config.m, config.beta)
            : TwoStageInstance{};
    parallel_for(m_ref, config.parallel, [&](std::size_t i) {
        const std::uint64_t seed = derive_seed(config.master_seed, kRefStreamTag, i);
        values[i] = config.problem == ProblemKind::TwoStage
                        ? sample_based_optimal_value(tinst, Sampler::SobolScrambled, n, seed)
                        : sample_based_optimal_value(pinst, Sampler::SobolScrambled,
                                                     config.factorization, n, seed);
    });
    double sum = 0.0;
    for (double v : values) sum += v;  // fixed-order reduction
    return sum / static_cast<double>(m_ref);
}

std::pair<double, double> fit_slope(const std::vector<double>& log2_n,
                                    const std::vector<double>& log2_rmse) {
    if (log2_n.size() != log2_rmse.size() || log2_n.size() < 2)
        throw std::invalid_argument("fit_slope: need at least two points");
    const double n = static_cast<double>(log2_n.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < log2_n.size(); ++i) {
        sx += log2_n[i];
        sy += log2_rmse[i];
        sxx += log2_n[i] * log2_n[i];
        sxy += log2_n[i] * log2_rmse[i];
    }
    const double det = n * sxx - sx * sx;
    if (det == 0.0) throw std::invalid_argument("fit_slope: degenerate abscissae");
    const double slope = (n * sxy - sx * sy) / det;
    return {slope, (sy - slope * sx) / n};
}

ExperimentReport run_sweep(const ExperimentConfig& config) {
    config.validate();
    ExperimentReport report;
    report.config = config;
    report.reference = reference_value(config);

    const bool is_portfolio = config.problem == ProblemKind::PortfolioNormal ||
                              config.problem == ProblemKind::PortfolioUniform;
    const PortfolioInstance pinst =
        is_portfolio ? gen_portfolio_instance(config.instance_seed, config.d, config.beta,
                                              config.r_target,
                                              config.problem == ProblemKind::PortfolioNormal
                                                  ? PortfolioModel::Normal
                                                  : PortfolioModel::UniformAffine)
                     : PortfolioInstance{};
    const TwoStageInstance tinst =
        config.problem == ProblemKind::TwoStage
            ? gen_two_stage_instance(config.instance_seed, config.d, config.m, config.beta)
            : TwoStageInstance{};

    const std::size_t num_cells = config.samplers.size() * config.n_schedule.size();
    const std::size_t m = config.replications;
    report.cells.resize(num_cells);
    for (std::size_t s = 0; s < config.samplers.size(); ++s)
        for (std::size_t k = 0; k < config.n_schedule.size(); ++k) {
            CellStats& cell = report.cells[s * config.n_schedule.size() + k];
            cell.sampler = config.samplers[s];
            cell.n = config.n_schedule[k];
            cell.values.assign(m, 0.0);
        }

    // Replications are the parallel unit; every task writes its own slot,
    // and all reductions below run serially in index order.
    parallel_for(num_cells * m, config.parallel, [&](std::size_t task) {
        const std::size_t cell_idx = task / m;
        const std::size_t rep = task % m;
        const std::size_t s = cell_idx / config.n_schedule.size();
        const std::size_t k = cell_idx % config.n_schedule.size();
        const std::uint64_t seed = derive_seed(config.master_seed, s, k, rep);
        report.cells[cell_idx].values[rep] = solve_one(config, &pinst, &tinst, report.reference,
                                                       config.samplers[s], config.n_schedule[k],
                                                       seed);
    });

    for (CellStats& cell : report.cells) {
        double sum = 0.0, sq = 0.0;
        for (double v : cell.values) {
            sum += v;
            sq += (v - report.reference) * (v - report.reference);
        }
        cell.mean = sum / static_cast<double>(m);
        cell.bias = cell.mean - report.reference;
        cell.rmse = std::sqrt(sq / static_cast<double>(m));
        double var = 0.0;
        for (double v : cell.values) var += (v - cell.mean) * (v - cell.mean);
        cell.variance = var / static_cast<double>(m);
    }

    for (std::size_t s = 0; s < config.samplers.size(); ++s) {
        std::vector<double> lx, ly;
        for (std::size_t k = 0; k < config.n_schedule.size(); ++k) {
            const CellStats& cell = report.cells[s * config.n_schedule.size() + k];
            lx.push_back(std::log2(static_cast<double>(cell.n)));
            ly.push_back(std::log2(std::max(cell.rmse, 1e-300)));
        }
        const auto [slope, intercept] = fit_slope(lx, ly);
        report.fits.push_back({config.samplers[s], slope, intercept});
    }
    return report;
}

std::string report_csv(const ExperimentReport& report) {
    const ExperimentConfig& cfg = report.config;
    std::ostringstream out;
    out << "# rqmc-risk sweep v1\n";
    out << "# problem = " << problem_kind_name(cfg.problem) << "\n";
    out << "# instance_seed = " << cfg.instance_seed << "\n";
    out << "# d = " << cfg.d << "\n# m = " << cfg.m << "\n";
    out << "# beta = " << format_g17(cfg.beta) << "\n# R = " << format_g17(cfg.r_target) << "\n";
    out << "# factorization = " << factorization_name(cfg.factorization) << "\n";
    out << "# samplers =";
    for (Sampler s : cfg.samplers) out << ' ' << sampler_name(s);
    out << "\n# n_schedule =";
    for (std::size_t n : cfg.n_schedule) out << ' ' << n;
    out << "\n# replications = " << cfg.replications << "\n";
    out << "# master_seed = " << cfg.master_seed << "\n";
    out << "# ref_mode = " << ref_mode_name(cfg.ref_mode) << "\n";
    out << "# ref_exponent = " << cfg.ref_exponent << "\n";
    out << "# ref_replications = " << cfg.ref_replications << "\n";
    out << "problem,model,sampler,factorization,d,m,beta,R,N,M,reference,ref_mode,mean,bias,rmse,slope\n";

    const bool is_portfolio = cfg.problem == ProblemKind::PortfolioNormal ||
                              cfg.problem == ProblemKind::PortfolioUniform;
    const std::string model = cfg.problem == ProblemKind::PortfolioNormal    ? "normal"
                              : cfg.problem == ProblemKind::PortfolioUniform ? "uniform"
                              : cfg.problem == ProblemKind::TwoStage         ? "two_stage"
                                                                             : "stub";
    const std::string problem = is_portfolio ? "portfolio" : model;
    auto prefix = [&](Sampler s) {
        std::ostringstream p;
        p << problem << ',' << model << ',' << sampler_name(s) << ','
          << factorization_name(cfg.factorization) << ',' << cfg.d << ','
          << (cfg.problem == ProblemKind::TwoStage ? std::to_string(cfg.m) : std::string()) << ','
          << format_g17(cfg.beta) << ',' << format_g17(cfg.r_target) << ',';
        return p.str();
    };
    for (const CellStats& cell : report.cells) {
        out << prefix(cell.sampler) << cell.n << ',' << cfg.replications << ','
            << format_g17(report.reference) << ',' << ref_mode_name(cfg.ref_mode) << ','
            << format_g17(cell.mean) << ',' << format_g17(cell.bias) << ','
            << format_g17(cell.rmse) << ",\n";
    }
    for (const SamplerFit& fit : report.fits) {
        out << prefix(fit.sampler) << ',' << cfg.replications << ','
            << format_g17(report.reference) << ',' << ref_mode_name(cfg.ref_mode)
            << ",,,," << format_g17(fit.slope) << "\n";
    }
    return out.str();
}

void write_report_csv(const ExperimentReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_report_csv: cannot open " + path);
    out << report_csv(report);
    if (!out) throw std::runtime_error("write_report_csv: write failed: " + path);
}

void write_report_svg(const ExperimentReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_report_svg: cannot open " + path);
    const double w = 640, h = 480, margin = 60;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const CellStats& cell : report.cells) {
        const double x = std::log2(static_cast<double>(cell.n));
        const double y = std::log2(std::max(cell.rmse, 1e-300));
        xmin = std::min(xmin, x); xmax = std::max(xmax, x);
        ymin = std::min(ymin, y); ymax = std::max(ymax, y);
    }
    if (xmax <= xmin) xmax = xmin + 1;
    if (ymax <= ymin) ymax = ymin + 1;
    auto px = [&](double x) { return margin + (x - xmin) / (xmax - xmin) * (w - 2 * margin); };
    auto py = [&](double y) { return h - margin - (y - ymin) / (ymax - ymin) * (h - 2 * margin); };
    static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\">log2 RMSE vs log2 N ("
        << problem_kind_name(report.config.problem) << ")</text>\n";
    const std::size_t per = report.config.n_schedule.size();
    for (std::size_t s = 0; s < report.config.samplers.size(); ++s) {
        out << "<polyline fill=\"none\" stroke=\"" << colors[s % 6] << "\" points=\"";
        for (std::size_t k = 0; k < per; ++k) {
            const CellStats& cell = report.cells[s * per + k];
            out << px(std::log2(static_cast<double>(cell.n))) << ','
                << py(std::log2(std::max(cell.rmse, 1e-300))) << ' ';
        }
        out << "\"/>\n<text x=\"" << w - margin + 4 << "\" y=\"" << margin + 16.0 * s
            << "\" fill=\"" << colors[s % 6] << "\" font-size=\"12\">"
            << sampler_name(report.config.samplers[s]) << "</text>\n";
    }
    out << "</svg>\n";
}

std::vector<DecayRow> wasserstein_decay(Sampler sampler, double p,
                                        const std::vector<std::size_t>& n_schedule,
                                        std::uint64_t seed) {
    std::vector<DecayRow> rows;
    for (std::size_t n : n_schedule) {
        const PointSet points = generate_points(sampler, seed, n, 1);
        std::vector<double> z(n);
        for (std::size_t i = 0; i < n; ++i) {
            double u = points.points(i, 0);
            if (u <= 0.0) u = 0x1.0p-53;
            z[i] = norm_inv_cdf(u);
        }
        rows.push_back({n, wasserstein_p_to_normal(empirical_from_values(std::move(z)), 0.0, 1.0, p)});
    }
    return rows;
}

std::vector<DecayRow> uniform_convergence_diagnostic(const PortfolioInstance& inst,
                                                     std::size_t grid_resolution,
                                                     const std::vector<std::size_t>& n_schedule,
                                                     Sampler sampler, std::uint64_t rep_seed) {
    if (inst.model != PortfolioModel::Normal)
        throw std::invalid_argument("uniform diagnostic: Normal model only");
    if (inst.d > 3) throw std::invalid_argument("uniform diagnostic: d must be <= 3");
    if (grid_resolution < 1) throw std::invalid_argument("uniform diagnostic: resolution >= 1");

    // Enumerate the simplex grid with step 1/resolution.
    std::vector<std::vector<double>> grid;
    const double step = 1.0 / static_cast<double>(grid_resolution);
    if (inst.d == 1) {
        grid.push_back({1.0});
    } else if (inst.d == 2) {
        for (std::size_t k = 0; k <= grid_resolution; ++k)
            grid.push_back({k * step, 1.0 - k * step});
    } else {
        for (std::size_t k = 0; k <= grid_resolution; ++k)
            for (std::size_t l = 0; k + l <= grid_resolution; ++l)
                grid.push_back({k * step, l * step, 1.0 - k * step - l * step});
    }

    std::vector<DecayRow> rows;
    for (std::size_t n : n_schedule) {
        const Matrix xi = portfolio_samples(inst, sampler, Factorization::Cholesky, n, rep_seed);
        double sup = 0.0;
        std::vector<double> sup_per_point(grid.size(), 0.0);
        parallel_for(grid.size(), n >= 1024, [&](std::size_t gi) {
            const std::vector<double>& x = grid[gi];
            std::vector<double> losses(n);
            for (std::size_t i = 0; i < n; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < inst.d; ++j) s += xi(i, j) * x[j];
                losses[i] = -s;
            }
            const double emp = cvar(empirical_from_values(std::move(losses)), inst.beta);
            const std::vector<double> sx = mat_vec(inst.sigma, x);
            const double exact =
                cvar_normal_closed_form(-dot(inst.mu, x), std::sqrt(std::max(dot(x, sx), 0.0)),
                                        inst.beta);
            sup_per_point[gi] = std::abs(emp - exact);
        });
        for (double v : sup_per_point) sup = std::max(sup, v);
        rows.push_back({n, sup});
    }
    return rows;
}

bool stratification_pass(std::size_t n, std::size_t d, bool scrambled, std::uint64_t seed) {
    const PointSet ps = scrambled ? sobol_points(n, d, seed) : sobol_points(n, d);
    std::vector<std::uint32_t> counts(n);
    for (std::size_t j = 0; j < d; ++j) {
        std::fill(counts.begin(), counts.end(), 0u);
        for (std::size_t i = 0; i < n; ++i) {
            const auto cell = static_cast<std::size_t>(ps.points(i, j) * static_cast<double>(n));
            if (cell >= n) return false;
            ++counts[cell];
        }
        for (std::uint32_t c : counts)
            if (c != 1) return false;
    }
    return true;
}

}  // namespace rqmc
