#pragma once

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace speq {

/// Thread count precedence: explicit request > SPEQ_THREADS > OpenMP default.
inline int resolve_threads(int requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("SPEQ_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

inline void set_threads(int requested = 0) {
#ifdef _OPENMP
    omp_set_num_threads(resolve_threads(requested));
#else
    (void)requested;
#endif
}

}  // namespace speq
