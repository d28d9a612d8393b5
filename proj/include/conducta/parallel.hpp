// Thread-count policy.  CONDUCTA_THREADS caps OpenMP parallelism.
#pragma once

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace conducta {

inline int thread_count() {
  int n = 1;
#ifdef _OPENMP
  n = omp_get_max_threads();
#endif
  if (const char* env = std::getenv("CONDUCTA_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap > 0 && cap < n) n = cap;
    } catch (...) {
    }
  }
  return n;
}

}  // namespace conducta
