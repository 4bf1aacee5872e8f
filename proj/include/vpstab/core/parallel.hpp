#pragma once

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace vpstab {

/// Number of worker threads for the parallel kernels. Honors VPSTAB_THREADS,
/// then the OpenMP runtime default; 1 in serial builds.
inline int thread_count() {
#ifdef _OPENMP
    if (const char* env = std::getenv("VPSTAB_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    return omp_get_max_threads();
#else
    return 1;
#endif
}

/// Applies VPSTAB_THREADS to the OpenMP runtime (called once by the CLI).
inline void apply_thread_env() {
#ifdef _OPENMP
    if (const char* env = std::getenv("VPSTAB_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) omp_set_num_threads(n);
    }
#endif
}

}  // namespace vpstab
