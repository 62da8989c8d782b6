#include "wspkit/threading.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace wspkit {

namespace {

int env_thread_cap() {
  const char* v = std::getenv("WSPKIT_THREADS");
  if (!v) return 0;
  try {
    int n = std::stoi(v);
    return n > 0 ? n : 0;
  } catch (...) {
    return 0;
  }
}

}  // namespace

int max_threads() {
  int cap = env_thread_cap();
#ifdef _OPENMP
  int omp = omp_get_max_threads();
  return cap > 0 && cap < omp ? cap : omp;
#else
  return cap > 0 ? 1 : 1;
#endif
}

void apply_thread_cap() {
#ifdef _OPENMP
  int cap = env_thread_cap();
  if (cap > 0) omp_set_num_threads(cap);
#endif
}

}  // namespace wspkit
