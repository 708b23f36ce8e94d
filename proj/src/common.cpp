#include "evgaze/common.hpp"

#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace evgaze {

int configure_threads() {
#ifdef _OPENMP
    int n = omp_get_max_threads();
    if (const char* env = std::getenv("EVGAZE_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1 && cap < n)
            n = cap;
    }
    omp_set_num_threads(n);
    return n;
#else
    return 1;
#endif
}

} // namespace evgaze
