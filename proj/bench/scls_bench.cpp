// Serial reference vs OpenMP replicate kernels, and the factor-once
// permutation path vs full refits. Prints one CSV row per measurement.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "scls/inference.hpp"
#include "scls/parallel.hpp"
#include "scls/rng.hpp"
#include "scls/simulation.hpp"

namespace {

template <class F>
double time_ms(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  using namespace scls;
  const Index n = argc > 1 ? std::atol(argv[1]) : 1000;
  const Index R = argc > 2 ? std::atol(argv[2]) : 200;
  const int threads = argc > 3 ? std::atoi(argv[3]) : default_threads();

  SimConfig cfg;
  cfg.n = n;
  Rng gen = make_stream(7, 0);
  const SimData data = gen_linked_data(cfg, ground_truth(3), gen);
  std::vector<std::vector<Index>> perms;
  for (Index r = 0; r < R; ++r) {
    Rng g = make_stream(11, static_cast<std::uint64_t>(r));
    perms.push_back(random_permutation(n, g));
  }

  std::printf("kernel,n,R,threads,ms\n");
  std::vector<double> a, b, c;
  const double naive = time_ms([&] { a = naive_sl_replicates(data.Y, data.X, perms); });
  std::printf("naive_refit,%ld,%ld,1,%.3f\n", static_cast<long>(n), static_cast<long>(R), naive);
  const double fast = time_ms([&] { b = fast_sl_replicates(data.Y, data.X, perms); });
  std::printf("fast_serial,%ld,%ld,1,%.3f\n", static_cast<long>(n), static_cast<long>(R), fast);
  const double par = time_ms([&] { c = fast_sl_replicates(data.Y, data.X, perms, Execution{threads}); });
  std::printf("fast_openmp,%ld,%ld,%d,%.3f\n", static_cast<long>(n), static_cast<long>(R), threads, par);

  const double t_ser = time_ms([&] { test_independence(data.Y, data.X, R, 3, Model::TFLR, Execution{1}); });
  std::printf("tflr_test_serial,%ld,%ld,1,%.3f\n", static_cast<long>(n), static_cast<long>(R), t_ser);
  const double t_par =
      time_ms([&] { test_independence(data.Y, data.X, R, 3, Model::TFLR, Execution{threads}); });
  std::printf("tflr_test_openmp,%ld,%ld,%d,%.3f\n", static_cast<long>(n), static_cast<long>(R), threads, t_par);

  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max({worst, std::abs(a[i] - b[i]), std::abs(b[i] - c[i])});
  std::printf("# speedup fast/naive %.2fx, max |difference| %.3g\n", naive / fast, worst);
  return 0;
}
