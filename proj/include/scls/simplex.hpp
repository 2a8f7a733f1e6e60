#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "scls/error.hpp"
#include "scls/rng.hpp"

namespace scls {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Rows whose sum is within this distance of 1 are accepted and renormalized.
inline constexpr double kSumTolerance = 1e-8;

/// A point of the standard simplex: non-negative entries summing to one.
class Composition {
 public:
  /// Validates `values`; a sum within `tol` of 1 is renormalized exactly.
  static Composition from_values(Vector values, double tol = kSumTolerance);

  const Vector& values() const noexcept { return values_; }
  Index size() const noexcept { return values_.size(); }
  double operator[](Index i) const { return values_[i]; }
  bool strictly_positive() const { return (values_.array() > 0.0).all(); }

 private:
  explicit Composition(Vector v) : values_(std::move(v)) {}
  friend Composition closure(const Vector& raw);
  friend class CompositionMatrix;

  Vector values_;
};

/// n x D sample of compositions, one per row, with optional component names.
class CompositionMatrix {
 public:
  CompositionMatrix() = default;

  /// Validates every row (non-negative, sum within `tol` of 1) and renormalizes
  /// accepted rows exactly. Throws NotOnSimplex / NegativeEntry otherwise.
  static CompositionMatrix from_rows(Matrix rows,
                                     std::vector<std::string> names = {},
                                     double tol = kSumTolerance);

  /// Closes every row of non-negative raw data (the CLI's --close flag).
  static CompositionMatrix close_rows(Matrix raw,
                                      std::vector<std::string> names = {});

  /// Wraps rows the caller already knows to be compositions (products of
  /// compositions with row-stochastic matrices, resampled rows, ...).
  static CompositionMatrix unchecked(Matrix rows,
                                     std::vector<std::string> names = {});

  Index rows() const noexcept { return data_.rows(); }
  Index cols() const noexcept { return data_.cols(); }
  const Matrix& data() const noexcept { return data_; }
  const std::vector<std::string>& names() const noexcept { return names_; }

  Composition row(Index i) const;
  CompositionMatrix select_rows(std::span<const Index> order) const;

 private:
  CompositionMatrix(Matrix m, std::vector<std::string> names);

  Matrix data_;
  std::vector<std::string> names_;
};

/// (D-1) x D Helmert sub-matrix: orthonormal rows, each summing to zero.
class HelmertSubMatrix {
 public:
  explicit HelmertSubMatrix(Index D);
  const Matrix& matrix() const noexcept { return h_; }
  Index components() const noexcept { return h_.cols(); }

 private:
  Matrix h_;
};

std::vector<std::string> default_names(const std::string& prefix, Index count);

Composition closure(const Vector& raw);
Composition closure(std::span<const double> raw);

// Log-ratio transforms. Component indices are zero-based.
Vector alr(const Composition& y, Index divisor = 0);
Composition alr_inverse(const Vector& v, Index divisor = 0);
Vector clr(const Composition& y);
HelmertSubMatrix helmert_submatrix(Index D);
Vector ilr(const Composition& y);

Composition power_transform(const Composition& y, double alpha);
Composition power_transform_inverse(const Composition& w, double alpha);
CompositionMatrix power_transform(const CompositionMatrix& y, double alpha);
CompositionMatrix power_transform_inverse(const CompositionMatrix& w,
                                          double alpha);
Vector alpha_transform(const Composition& y, double alpha);

/// Sum over rows of sum_k p log(p / q), with 0 log 0 = 0.
double kld(const CompositionMatrix& p, const CompositionMatrix& q);
double kld_row(const Eigen::Ref<const Vector>& p,
               const Eigen::Ref<const Vector>& q);
/// Jensen-Shannon divergence (natural log, half/half mixture), summed over rows.
double jsd(const CompositionMatrix& p, const CompositionMatrix& q);
double jsd_row(const Eigen::Ref<const Vector>& p,
               const Eigen::Ref<const Vector>& q);

/// sum_j y_j log y_j; -log D at the barycentre, 0 at the vertices.
double negated_entropy(const Composition& y);

CompositionMatrix dirichlet_sample(std::span<const double> params, Index n,
                                   std::uint64_t seed);

/// One Dirichlet draw from `gen`. Zero parameters give a point mass at zero
/// in that component; at least one parameter must be positive.
Vector dirichlet_draw(std::span<const double> params, Rng& gen);

}  // namespace scls
