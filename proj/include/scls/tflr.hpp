#pragma once

#include <optional>
#include <vector>

#include "scls/regression.hpp"

namespace scls {

struct TflrOptions {
  /// Starting coefficients; the SCLS estimate when absent.
  std::optional<CoefficientMatrix> init;
  double tol = 1e-10;
  int max_iter = 5000;
  /// Throw NoConvergence instead of returning converged == false.
  bool require_convergence = false;
  /// Keep the objective after every iteration in TflrFit::trace.
  bool record_trace = false;
  /// alpha != 1 fits the power-transformed response.
  double alpha = 1.0;
  /// SQUAREM extrapolation between EM steps. An extrapolated point is kept
  /// only when it does not increase the objective, so the trace stays
  /// monotone; `iterations` counts every EM map evaluation either way.
  bool accelerate = true;
};

struct TflrFit {
  CoefficientMatrix coefficients;
  /// sum_ik y_ik log(y_ik / yhat_ik) at the returned coefficients.
  double kld = 0.0;
  int iterations = 0;
  bool converged = false;
  double alpha = 1.0;
  CompositionMatrix fitted;
  std::vector<double> trace;
};

/// Objective of the KLD fit; throws ZeroFittedCell when a fitted cell is 0
/// where the response is positive.
double tflr_objective(const Matrix& Y, const Matrix& X, const Matrix& B);

/// Multiplicative EM for the KLD-minimizing row-stochastic B. Each update
/// B_jk <- B_jk sum_i x_ij y_ik / yhat_ik is followed by row renormalization;
/// cells below 1e-12 are frozen at zero. Stops once an accepted step improves
/// the objective by less than `tol`.
TflrFit fit_tflr(const CompositionMatrix& Y, const CompositionMatrix& X,
                 const TflrOptions& options = {});

}  // namespace scls
