#pragma once

#include <exception>
#include <vector>

#include <Eigen/Core>

namespace scls {

/// Worker count for replicate loops. threads <= 1 runs the serial reference
/// loop; anything else runs the OpenMP kernel. Replicate r always draws from
/// the stream derived from (seed, r), so both paths give identical results.
struct Execution {
  int threads = 1;

  bool serial() const { return threads <= 1; }
};

/// Thread count from SCLS_THREADS, else the OpenMP default.
int default_threads();

template <class Body>
void for_each_serial(Eigen::Index count, Body&& body) {
  for (Eigen::Index r = 0; r < count; ++r) body(r);
}

/// Runs body(r) for r in [0, count). An exception from any replicate is
/// rethrown after the loop; when several fail, the lowest index wins.
template <class Body>
void for_each_replicate(Eigen::Index count, const Execution& exec, Body&& body) {
  if (exec.serial()) {
    for_each_serial(count, body);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
#pragma omp parallel for schedule(dynamic) num_threads(exec.threads)
  for (Eigen::Index r = 0; r < count; ++r) {
    try {
      body(r);
    } catch (...) {
      errors[static_cast<std::size_t>(r)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace scls
