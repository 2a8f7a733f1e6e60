#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "manifest.hpp"
#include "scls/parallel.hpp"

namespace scls::cli {

struct Common {
  std::string out;
  int threads = 0;  // 0: SCLS_THREADS or the OpenMP default
  RunManifest manifest;

  Execution exec() const;
};

struct FitArgs {
  std::string response;
  std::vector<std::string> predictors;
  double alpha = 1.0;
  bool weighted = false;
  std::string model = "scls";
  bool lag1 = false;
  std::string group_column;
  bool close = false;
};

struct PredictArgs {
  std::string coefficients;
  std::vector<std::string> predictors;
  bool close = false;
};

struct TestArgs {
  std::string kind;
  std::string response;
  std::string predictor;
  std::string b0;
  int l1 = 0;
  int l2 = 0;
  long long permutations = 999;
  std::uint64_t seed = 1;
  std::string model = "scls";
  bool replicates = false;
  bool close = false;
};

struct SimulateArgs {
  std::string kind;
  std::vector<long long> n{100};
  std::vector<long long> dr{3};
  long long replicates = 200;
  long long permutations = 199;
  std::uint64_t seed = 1;
  std::string models = "scls,tflr";
  double concentration = 5.0;
  int repetitions = 20;
};

struct BootstrapArgs {
  std::string response;
  std::string predictor;
  long long count = 1000;
  std::uint64_t seed = 1;
  bool close = false;
};

struct PlotArgs {
  std::string kind;
  std::string coefficients;
  std::string ellipses;
  double level = 0.95;
  int grid = 48;
};

struct CrossvalArgs {
  std::string response;
  std::string predictor;
  long long folds = 10;
  long long repeats = 20;
  std::string metric = "kld";
  std::vector<double> alpha_grid;
  std::string model = "scls";
  std::uint64_t seed = 1;
  bool close = false;
};

void cmd_fit(const FitArgs& a, Common& c);
void cmd_predict(const PredictArgs& a, Common& c);
void cmd_test(const TestArgs& a, Common& c);
void cmd_simulate(const SimulateArgs& a, Common& c);
void cmd_bootstrap(const BootstrapArgs& a, Common& c);
void cmd_plot(const PlotArgs& a, Common& c);
void cmd_crossval(const CrossvalArgs& a, Common& c);

/// Per-cell seed of a simulation grid; independent of the grid's other cells.
std::uint64_t cell_seed(std::uint64_t seed, long long n, long long dr);

}  // namespace scls::cli
