#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "scls/qp.hpp"
#include "scls/simplex.hpp"

namespace scls {

/// D_p x D_r row-stochastic coefficient matrix; row j is the expected
/// response composition of the j-th predictor vertex.
class CoefficientMatrix {
 public:
  CoefficientMatrix() = default;

  /// Validates entries in [0, 1] and unit row sums, both within `tol`.
  static CoefficientMatrix from_matrix(Matrix B,
                                       std::vector<std::string> predictor_names = {},
                                       std::vector<std::string> response_names = {},
                                       double tol = kSumTolerance);
  static CoefficientMatrix unchecked(Matrix B,
                                     std::vector<std::string> predictor_names = {},
                                     std::vector<std::string> response_names = {});

  const Matrix& matrix() const noexcept { return B_; }
  Index predictors() const noexcept { return B_.rows(); }
  Index responses() const noexcept { return B_.cols(); }
  const std::vector<std::string>& predictor_names() const noexcept { return predictor_names_; }
  const std::vector<std::string>& response_names() const noexcept { return response_names_; }
  double operator()(Index j, Index k) const { return B_(j, k); }

 private:
  CoefficientMatrix(Matrix B, std::vector<std::string> pn, std::vector<std::string> rn);

  Matrix B_;
  std::vector<std::string> predictor_names_;
  std::vector<std::string> response_names_;
};

struct SolverDiagnostics {
  qp::Status status = qp::Status::Optimal;
  int iterations = 0;
  Index active_constraints = 0;
  bool pd_repaired = false;
};

struct SclsFit {
  /// One matrix per simplicial predictor (a single entry for plain SCLS).
  std::vector<CoefficientMatrix> coefficients;
  /// Predictor weights a_m; (1) for a single predictor, 1/M for fit_multi.
  Vector weights;
  /// Squared loss at the optimum, on the (power-)transformed response scale.
  double loss = 0.0;
  double alpha = 1.0;
  CompositionMatrix fitted;
  SolverDiagnostics diagnostics;
  /// Objective after each half-step of the weighted fit.
  std::vector<double> objective_trace;
  int alternations = 0;

  const CoefficientMatrix& B() const { return coefficients.front(); }
};

/// SCLS problem for a fixed predictor design Z (n x P) and D_r response
/// components. The Gram block Z'Z and its factorization are computed once;
/// each solve takes the cross-product Z'Y. b stacks B column by column.
class SclsSolver {
 public:
  SclsSolver(const Matrix& Z, Index responses);

  Index predictors() const noexcept { return gram_.rows(); }
  Index responses() const noexcept { return responses_; }
  const Matrix& gram() const noexcept { return gram_; }
  bool repaired() const noexcept { return repaired_; }

  /// Throws NotPositiveDefinite / Infeasible / NoConvergence when the QP
  /// does not reach an optimum.
  qp::QPSolution solve_cross(const Matrix& cross) const;
  /// Row-stochastic B from a solution (round-off negatives clipped to 0).
  Matrix unvec(const Vector& b) const;

 private:
  Index responses_;
  Matrix gram_;
  bool repaired_ = false;
  std::unique_ptr<qp::DualActiveSetSolver> solver_;
};

/// QP of the single-predictor SCLS fit: Dmat = I_{D_r} (x) X'X,
/// dvec = vec(X'Y), D_p row-sum equalities then D_r*D_p non-negativity rows.
qp::QuadraticProgram assemble_qp(const CompositionMatrix& Y, const CompositionMatrix& X);
/// Same problem with the redundant upper-bound block (-I b >= -1) appended.
qp::QuadraticProgram assemble_qp_with_upper_bounds(const CompositionMatrix& Y,
                                                   const CompositionMatrix& X);

/// ||Y - X B||_F^2
double squared_loss(const Matrix& Y, const Matrix& X, const Matrix& B);

SclsFit fit_scls(const CompositionMatrix& Y, const CompositionMatrix& X);
SclsFit fit_alpha_scls(const CompositionMatrix& Y, const CompositionMatrix& X, double alpha);
SclsFit fit_multi(const CompositionMatrix& Y, std::span<const CompositionMatrix> Xs);

struct WeightedOptions {
  int max_alternations = 100;
  double tol = 1e-8;
  /// Keep a = (1/M, ..., 1/M); the result then equals fit_multi.
  bool fix_weights = false;
};

SclsFit fit_weighted(const CompositionMatrix& Y, std::span<const CompositionMatrix> Xs,
                     const WeightedOptions& options = {});

/// (Y_t, Y_{t-1}) pairs. Rows are in time order; with `groups` each label's
/// rows form its own series and pairs never cross labels.
struct LaggedPairs {
  CompositionMatrix current;
  CompositionMatrix lagged;
};
LaggedPairs lag_pairs(const CompositionMatrix& series, std::span<const std::string> groups = {});
SclsFit fit_ar1(const CompositionMatrix& series, std::span<const std::string> groups = {});

/// One-hot (vertex) rows, levels in order of first appearance.
CompositionMatrix encode_categorical(std::span<const std::string> levels);

/// Predictions x B (or sum_m a_m x^m B^m), back-transformed when alpha != 1.
CompositionMatrix predict(const SclsFit& fit, const CompositionMatrix& X_new);
CompositionMatrix predict(const SclsFit& fit, std::span<const CompositionMatrix> Xs_new);

/// Expected response change when predictor j gains delta and l loses it.
Vector interpret_delta(const CoefficientMatrix& B, Index j, Index l, double delta);

}  // namespace scls
