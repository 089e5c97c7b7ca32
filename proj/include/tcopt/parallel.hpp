#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tcopt {

/// Number of workers the runtime can offer (1 without OpenMP).
int hardware_workers();

/// Runs fn(t) for t in [0, count). Iterations must be independent: each one
/// may only write state owned by its own index, so the result is identical
/// for every worker count. workers <= 1 keeps the loop serial.
template <typename Fn>
void parallel_for(int count, int workers, Fn&& fn) {
#ifdef _OPENMP
  if (workers > 1 && count > 1) {
#pragma omp parallel for schedule(static) num_threads(workers)
    for (int t = 0; t < count; ++t) {
      fn(t);
    }
    return;
  }
#endif
  for (int t = 0; t < count; ++t) {
    fn(t);
  }
}

}  // namespace tcopt
