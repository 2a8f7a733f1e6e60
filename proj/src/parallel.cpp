#include "scls/parallel.hpp"

#include <cstdlib>
#include <string>

#include <omp.h>

namespace scls {

int default_threads() {
  if (const char* env = std::getenv("SCLS_THREADS")) {
    try {
      const int k = std::stoi(env);
      if (k >= 1) return k;
    } catch (...) {
    }
  }
  return omp_get_max_threads();
}

}  // namespace scls
