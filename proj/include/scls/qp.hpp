#pragma once

#include <vector>

#include <Eigen/Core>

#include "scls/simplex.hpp"

namespace scls::qp {

/// Problem of the form
///
///   minimize   -dvec' b + 1/2 b' Dmat b
///   subject to Amat_T.row(i) b  = b0(i)   for i <  n_equalities
///              Amat_T.row(i) b >= b0(i)   for i >= n_equalities
struct QuadraticProgram {
  Matrix Dmat;
  Vector dvec;
  Matrix Amat_T;
  Vector b0;
  Index n_equalities = 0;

  Index variables() const { return Dmat.rows(); }
  Index constraints() const { return Amat_T.rows(); }
  /// Throws ShapeMismatch / InvalidArgument on inconsistent dimensions or an
  /// asymmetric Dmat.
  void validate() const;
};

enum class Status { Optimal, Infeasible, NotPositiveDefinite, IterationLimit };

const char* to_string(Status s);

struct QPSolution {
  Vector b;
  double objective = 0.0;
  std::vector<Index> active_set;  // constraint rows, sorted ascending
  Vector multipliers;             // one per constraint, zero when inactive
  int iterations = 0;
  Status status = Status::Optimal;

  bool optimal() const { return status == Status::Optimal; }
};

inline constexpr double kFeasibilityTol = 1e-12;
inline constexpr double kPivotFloor = 1e-12;
inline constexpr double kRepairFloor = 1e-9;

/// Goldfarb-Idnani dual active-set solver. The Cholesky factor of Dmat and the
/// constraint set are fixed at construction; solve() takes only the linear
/// term, so one factorization serves any number of right-hand sides.
class DualActiveSetSolver {
 public:
  DualActiveSetSolver(const Matrix& Dmat, Matrix Amat_T, Vector b0,
                      Index n_equalities);

  /// False when Dmat failed the Cholesky pivot floor; solve() then reports
  /// NotPositiveDefinite.
  bool factorized() const noexcept { return factorized_; }
  Index variables() const noexcept { return Dmat_.rows(); }

  QPSolution solve(const Vector& dvec) const;

 private:
  Matrix Dmat_;
  Matrix J0_;  // inverse transpose of the Cholesky factor: J0 J0' = Dmat^-1
  Matrix Amat_T_;
  Vector b0_;
  Index n_eq_;
  bool factorized_ = false;
};

QPSolution solve_qp(const QuadraticProgram& qp);

/// Closest symmetric matrix (Frobenius) whose eigenvalues are >= epsilon,
/// by alternating projections with Dykstra's correction. With
/// `keep_diagonal` the iterate's diagonal is pinned to M's. Inputs that
/// already satisfy the floor are returned unchanged.
Matrix nearest_positive_definite(const Matrix& M, double epsilon = kRepairFloor,
                                 int max_iter = 200, bool keep_diagonal = false);

}  // namespace scls::qp
