#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "scls/parallel.hpp"
#include "scls/regression.hpp"
#include "scls/tflr.hpp"

namespace scls {

enum class Model { SCLS, TFLR };
enum class StatisticKind { SL, KLD, SLDifference };

const char* to_string(Model m);
const char* to_string(StatisticKind k);

struct TestResult {
  double statistic_observed = 0.0;
  std::vector<double> replicates;
  double p_value = 1.0;
  /// Replicates that entered the p-value (requested count minus missing).
  Index R = 0;
  std::uint64_t seed = 0;
  StatisticKind statistic_kind = StatisticKind::SL;
  /// Replicates dropped after repeated ZeroFittedCell failures.
  Index missing = 0;
  /// Replicate redraws caused by ZeroFittedCell.
  Index redraws = 0;
};

/// (#{replicates <= observed} + 1) / (R + 1)
double permutation_p_value(double observed, std::span<const double> replicates);

/// Linear independence of Y and X: statistic SL (SCLS) or KLD (TFLR) of the
/// observed fit against fits on row-permuted X.
TestResult test_independence(const CompositionMatrix& Y, const CompositionMatrix& X, Index R,
                             std::uint64_t seed, Model model = Model::SCLS,
                             const Execution& exec = {});

/// H0: B = B0. Statistic SL(Bhat) - SL(B0) (<= 0). Null replicates refit on
/// responses X B0 + row-permuted residuals Y - X B0, clipped at zero and closed.
TestResult test_coefficients(const CompositionMatrix& Y, const CompositionMatrix& X,
                             const CoefficientMatrix& B0, Index R, std::uint64_t seed,
                             const Execution& exec = {});

/// H0: rows l1 and l2 of B are equal. Replicates swap the two predictor
/// columns within randomly chosen rows; statistic SL.
TestResult test_amalgamation(const CompositionMatrix& Y, const CompositionMatrix& X, Index l1,
                             Index l2, Index R, std::uint64_t seed, const Execution& exec = {});

std::vector<CoefficientMatrix> bootstrap_coefficients(const CompositionMatrix& Y,
                                                      const CompositionMatrix& X, Index n_boot,
                                                      std::uint64_t seed,
                                                      const Execution& exec = {});
/// Bootstrap with explicit resampling plans (row indices per replicate).
std::vector<CoefficientMatrix> bootstrap_coefficients(const CompositionMatrix& Y,
                                                      const CompositionMatrix& X,
                                                      std::span<const std::vector<Index>> plans,
                                                      const Execution& exec = {});

/// SL - tr(Y Y') for each row order of X, reusing one factorization of the
/// quadratic term; only the cross-product X' P Y changes per replicate.
std::vector<double> fast_sl_replicates(const CompositionMatrix& Y, const CompositionMatrix& X,
                                       std::span<const std::vector<Index>> permutations,
                                       const Execution& exec = {});
/// Full SCLS refit per permutation; the reference for fast_sl_replicates.
std::vector<double> naive_sl_replicates(const CompositionMatrix& Y, const CompositionMatrix& X,
                                        std::span<const std::vector<Index>> permutations,
                                        const Execution& exec = {});

/// Ternary plane coordinates (y2 + y3/2, sqrt(3)/2 y3) of a 3-part composition.
Eigen::Vector2d ternary_coordinates(const Eigen::Ref<const Vector>& y);

struct ConfidenceEllipse {
  Eigen::Vector2d center;
  /// Points p with (p - center)' shape (p - center) <= 1 are inside.
  Eigen::Matrix2d shape;
  double level = 0.95;
  Index row_index = 0;

  bool contains(const Eigen::Vector2d& p, double tol = 1e-8) const;
  /// `count` points on the boundary, for plotting.
  std::vector<Eigen::Vector2d> boundary(int count) const;
};

/// Minimum-volume ellipse (Khachiyan, tolerance `tol`) enclosing every point.
ConfidenceEllipse minimum_volume_ellipse(std::span<const Eigen::Vector2d> points,
                                         double tol = 1e-7);

/// Ellipse around row `row_index` of bootstrap matrices with D_r = 3: the
/// ceil(level * n) points nearest by Mahalanobis distance, then their
/// minimum-volume enclosing ellipse.
ConfidenceEllipse confidence_ellipse(std::span<const CoefficientMatrix> boot, Index row_index,
                                     double level = 0.95);

}  // namespace scls
