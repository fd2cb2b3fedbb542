#include "rankprior/parallel.hpp"

#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rankprior::parallel {

namespace {
#ifdef _OPENMP
const int kDefaultThreads = omp_get_max_threads();
#endif
}  // namespace

int max_threads() noexcept {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void set_max_threads(int n) noexcept {
#ifdef _OPENMP
    omp_set_num_threads(n > 0 ? n : kDefaultThreads);
#else
    (void)n;
#endif
}

int apply_env_thread_cap() noexcept {
    if (const char* env = std::getenv("RANKPRIOR_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) set_max_threads(static_cast<int>(v));
    }
    return max_threads();
}

}  // namespace rankprior::parallel
