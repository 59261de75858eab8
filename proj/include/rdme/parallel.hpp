#pragma once

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rdme {

// Every data-parallel kernel ships a serial reference path next to the
// OpenMP path; both are required to produce identical output.
enum class ExecPolicy { serial, parallel };

template <class Body>
void for_each_index(ExecPolicy policy, int n, Body&& body) {
  if (policy == ExecPolicy::serial) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
#pragma omp parallel for schedule(dynamic, 16)
  for (int i = 0; i < n; ++i) body(i);
}

inline int thread_id() {
#ifdef _OPENMP
  return omp_get_thread_num();
#else
  return 0;
#endif
}

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

// RDME_THREADS when set, otherwise `fallback`.
inline int default_threads(int fallback) {
  if (const char* env = std::getenv("RDME_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return fallback;
}

}  // namespace rdme
