// Compares the serial reference kernels against the OpenMP paths and
// checks that both produce identical bits while they are at it.
#include <chrono>
#include <cstdio>
#include <vector>

#include "rqmc/experiments.hpp"
#include "rqmc/parallel.hpp"
#include "rqmc/sequences.hpp"
#include "rqmc/transforms.hpp"

using namespace rqmc;
using clock_type = std::chrono::steady_clock;

namespace {

template <typename Fn>
double time_ms(Fn&& fn) {
    const auto start = clock_type::now();
    fn();
    const auto stop = clock_type::now();
    return std::chrono::duration<double, std::milli>(stop - start).count();
}

void report(const char* name, double serial_ms, double parallel_ms) {
    std::printf("%-28s %10.2f ms %10.2f ms %8.2fx\n", name, serial_ms, parallel_ms,
                parallel_ms > 0.0 ? serial_ms / parallel_ms : 0.0);
}

}  // namespace

int main() {
    std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "parallel", "speedup");

    {
        const std::size_t n = 1 << 18, d = 16;
        const PointSet ps = sobol_points(n, d, 7u);
        Matrix sigma = Matrix::identity(d);
        for (std::size_t i = 0; i + 1 < d; ++i) {
            sigma(i, i + 1) = 0.2;
            sigma(i + 1, i) = 0.2;
        }
        GaussianSpec spec{std::vector<double>(d, 0.0), sigma, Factorization::PCA};
        Matrix serial_out, parallel_out;
        const double ts = time_ms([&] { serial_out = gaussian_transform_serial(ps, spec); });
        const double tp = time_ms([&] { parallel_out = gaussian_transform(ps, spec); });
        report("gaussian_transform 2^18x16", ts, tp);
        if (serial_out.data() != parallel_out.data()) {
            std::fprintf(stderr, "FATAL: serial and parallel outputs differ\n");
            return 1;
        }
    }

    {
        const std::size_t n = 1 << 18, d = 32;
        set_max_threads(1);
        const double ts = time_ms([&] { (void)sobol_points(n, d, 11u); });
        set_max_threads(0);
        const double tp = time_ms([&] { (void)sobol_points(n, d, 11u); });
        report("scrambled sobol 2^18x32", ts, tp);
        set_max_threads(1);
        const PointSet a = sobol_points(n, d, 11u);
        set_max_threads(0);
        const PointSet b = sobol_points(n, d, 11u);
        if (a.points.data() != b.points.data()) {
            std::fprintf(stderr, "FATAL: thread count changed the scrambled net\n");
            return 1;
        }
    }

    {
        ExperimentConfig cfg;
        cfg.problem = ProblemKind::PortfolioNormal;
        cfg.d = 3;
        cfg.r_target = 1.0;
        cfg.samplers = {Sampler::MC, Sampler::SobolScrambled};
        cfg.n_schedule = {64, 128, 256};
        cfg.replications = 10;
        cfg.ref_mode = RefMode::Exact;
        cfg.parallel = false;
        const double ts = time_ms([&] { (void)run_sweep(cfg); });
        cfg.parallel = true;
        const double tp = time_ms([&] { (void)run_sweep(cfg); });
        report("run_sweep 2x3x10", ts, tp);
    }

    return 0;
}
