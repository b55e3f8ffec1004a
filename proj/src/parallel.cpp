#include "qstruct/parallel.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qstruct {

namespace {
int env_thread_cap() {
    const char* v = std::getenv("QSTRUCT_THREADS");
    if (v == nullptr || *v == '\0') return 0;
    try {
        int n = std::stoi(v);
        return n > 0 ? n : 0;
    } catch (...) {
        return 0;
    }
}
}  // namespace

int apply_thread_cap_from_env() {
#ifdef _OPENMP
    int cap = env_thread_cap();
    if (cap > 0 && cap < omp_get_max_threads()) omp_set_num_threads(cap);
    return omp_get_max_threads();
#else
    return 1;
#endif
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

ExecMode default_exec_mode() {
    return max_threads() > 1 ? ExecMode::OpenMP : ExecMode::Serial;
}

}  // namespace qstruct
