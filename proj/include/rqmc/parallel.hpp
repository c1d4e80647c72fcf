#pragma once

#include <cstddef>
#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rqmc {

// Global thread cap for the parallel kernels. 0 means "OpenMP default".
// Every parallel loop in the project writes to disjoint slots with pure
// per-item work, so results are bit-identical for any setting.
int max_threads();
void set_max_threads(int n);

// Runs fn(i) for i in [0, n). parallel=false forces the serial reference
// path; the benchmark target compares the two.
template <typename Fn>
void parallel_for(std::size_t n, bool parallel, Fn&& fn) {
#ifdef _OPENMP
    if (parallel && max_threads() != 1 && !omp_in_parallel()) {
        const int cap = max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(cap > 0 ? cap : omp_get_max_threads())
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i)
            fn(static_cast<std::size_t>(i));
        return;
    }
#else
    (void)parallel;
#endif
    for (std::size_t i = 0; i < n; ++i) fn(i);
}

}  // namespace rqmc
