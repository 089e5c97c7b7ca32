#include "tcopt/parallel.hpp"

namespace tcopt {

int hardware_workers() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace tcopt
