#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace drmpc {

/// Number of threads a parallel_for with `threads <= 0` would use.
inline int hardware_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

/// Runs body(i) for i in [0, n). `threads == 1` selects the serial
/// reference path; `threads <= 0` uses the runtime default. Results must
/// not depend on the schedule: bodies write to disjoint slots and any
/// reduction happens index-ordered afterwards, so serial and parallel
/// execution are bit-identical.
template <typename Body>
void parallel_for(std::ptrdiff_t n, int threads, Body&& body) {
  if (threads == 1) {
    for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
    return;
  }
#ifdef _OPENMP
  if (threads > 1) {
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
  } else {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
  }
#else
  for (std::ptrdiff_t i = 0; i < n; ++i) body(i);
#endif
}

}  // namespace drmpc
