#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "scls/inference.hpp"
#include "scls/parallel.hpp"
#include "scls/regression.hpp"

namespace scls {

struct SimConfig {
  Index n = 100;
  Index Dr = 3;
  /// Predictor components; the published studies use 3.
  Index Dp = 3;
  Index replicates = 200;
  /// Permutations per independence test.
  Index R = 199;
  std::uint64_t seed = 1;
  /// Dirichlet scale for linked responses: y ~ Dir(concentration * x B).
  double concentration = 5.0;
  Execution exec;

  /// Throws InvalidArgument on non-positive counts.
  void validate() const;
  bool standard_design() const { return Dp == 3; }
};

/// Ground-truth matrix for D_r in {3, 5, 7, 10} exactly as published.
Matrix ground_truth_printed(Index Dr);
/// The published matrix with each row divided by its sum.
CoefficientMatrix ground_truth(Index Dr);

struct SimData {
  CompositionMatrix Y;
  CompositionMatrix X;
};

/// Y ~ Dir(a) with a ~ U(1, 5)^Dr, X ~ Dir(1, ..., 1), independent.
SimData gen_null_data(const SimConfig& cfg, Rng& gen);
/// X ~ Dir(1, ..., 1), mu = x B, y ~ Dir(concentration * mu).
SimData gen_linked_data(const SimConfig& cfg, const CoefficientMatrix& B, Rng& gen);

struct ModelSelection {
  bool scls = true;
  bool tflr = true;
};

struct RateResult {
  double scls = 0.0;
  double tflr = 0.0;
  Index replicates = 0;
  /// TFLR replicates dropped after repeated ZeroFittedCell failures.
  Index tflr_missing = 0;
};

inline constexpr double kNominalLevel = 0.05;

/// Rejection rate at 5% of the independence test on null data.
RateResult run_type1(const SimConfig& cfg, ModelSelection models = {});
/// Rejection rate at 5% on data linked through B.
RateResult run_power(const SimConfig& cfg, const CoefficientMatrix& B, ModelSelection models = {});

struct DiscrepancyResult {
  double kld_scls = 0.0;
  double kld_tflr = 0.0;
  double l1_scls = 0.0;
  double l1_tflr = 0.0;
  /// Mean L1 distance between the two estimates.
  double l1_between = 0.0;
  /// Cells where B = 0 < Bhat, clamped inside the log (summed over replicates).
  Index clamped_cells_scls = 0;
  Index clamped_cells_tflr = 0;
  int max_em_iterations = 0;
  bool em_all_converged = true;
  Index replicates = 0;
  /// The same discrepancies on the scale of the published tables: averaged
  /// over the D_p x D_r cells, KLD summed over cells where B > 0 only.
  double kld_scls_cell = 0.0;
  double kld_tflr_cell = 0.0;
  double l1_scls_cell = 0.0;
  double l1_tflr_cell = 0.0;
  /// Replicates where the SCLS start has an all-zero column that the response
  /// needs, so the KLD fit cannot be computed. TFLR means exclude them.
  Index tflr_breakdowns = 0;
};

inline constexpr double kTruthClamp = 1e-12;

/// sum_jk Bhat log(Bhat / B) with 0 log 0 = 0 and B clamped to 1e-12.
double kld_coefficients(const Matrix& estimate, const Matrix& truth, Index* clamped = nullptr);
double l1_coefficients(const Matrix& estimate, const Matrix& truth);
/// sum_jk Bhat log(Bhat / B) over cells with B > 0 (cells with B = 0 skipped).
double kld_coefficients_supported(const Matrix& estimate, const Matrix& truth);

DiscrepancyResult run_discrepancy(const SimConfig& cfg, const CoefficientMatrix& B);

struct BenchmarkRow {
  Index n = 0;
  Index Dr = 0;
  double t_scls_ms = 0.0;
  double t_tflr_ms = 0.0;
  double ratio = 0.0;
};

/// Median wall time over `repetitions` fits of each model (TFLR started from
/// the SCLS estimate, as in the self-implemented comparison).
std::vector<BenchmarkRow> run_benchmark(std::span<const Index> sizes, std::span<const Index> drs,
                                        int repetitions = 20, std::uint64_t seed = 1);

enum class Metric { KLD, JSD };

struct CrossValOptions {
  Index folds = 10;
  Index repeats = 20;
  Metric metric = Metric::KLD;
  Model model = Model::SCLS;
  /// Power parameters; {1} when empty.
  std::vector<double> alphas;
  std::uint64_t seed = 1;
  Execution exec;
};

struct CrossValResult {
  std::vector<double> alphas;
  /// repeats x alphas; each entry is the held-out divergence averaged over rows.
  Matrix values;
  Index evaluations = 0;

  Vector curve() const { return values.colwise().mean().transpose(); }
};

/// Random (unstratified) fold labels 0..folds-1 with sizes differing by at most one.
std::vector<Index> fold_assignment(Index n, Index folds, Rng& gen);

CrossValResult cross_validate(const CompositionMatrix& Y, const CompositionMatrix& X,
                              const CrossValOptions& options);

}  // namespace scls
