#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the QP solver or the EM code under test.

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Euclidean projection of v onto the unit simplex (sort and threshold).
inline Vector project_simplex(const Vector& v) {
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.rbegin(), u.rend());
  double cumulative = 0.0, theta = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cumulative += u[k];
    const double t = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (u[k] - t > 0.0) theta = t;
  }
  return (v.array() - theta).cwiseMax(0.0);
}

inline Matrix project_rows(const Matrix& B) {
  Matrix out(B.rows(), B.cols());
  for (Eigen::Index j = 0; j < B.rows(); ++j) out.row(j) = project_simplex(B.row(j).transpose()).transpose();
  return out;
}

inline double squared_loss(const Matrix& Y, const Matrix& X, const Matrix& B) {
  return (Y - X * B).squaredNorm();
}

struct PgResult {
  Matrix B;
  double loss = 0.0;
  long iterations = 0;
};

/// Accelerated projected gradient (FISTA with restart) for
/// min ||Y - X B||^2 over row-stochastic B. Stops after `max_iter`
/// iterations or once an iteration moves B by less than `step_tol`.
inline PgResult projected_gradient(const Matrix& Y, const Matrix& X, long max_iter = 1000000,
                                   double step_tol = 1e-15) {
  const Matrix G = X.transpose() * X;
  const Matrix C = X.transpose() * Y;
  Eigen::SelfAdjointEigenSolver<Matrix> es(G);
  const double L = 2.0 * es.eigenvalues().maxCoeff();
  Matrix B = Matrix::Constant(X.cols(), Y.cols(), 1.0 / static_cast<double>(Y.cols()));
  Matrix Z = B;
  double t = 1.0;
  double f_prev = squared_loss(Y, X, B);
  PgResult r;
  for (r.iterations = 0; r.iterations < max_iter; ++r.iterations) {
    const Matrix grad = 2.0 * (G * Z - C);
    const Matrix next = project_rows(Z - grad / L);
    const double f = squared_loss(Y, X, next);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double move = (next - B).cwiseAbs().maxCoeff();
    if (f > f_prev) {
      // Restart momentum when the objective goes up.
      Z = B;
      t = 1.0;
      continue;
    }
    Z = next + ((t - 1.0) / t_next) * (next - B);
    B = next;
    t = t_next;
    f_prev = f;
    if (move < step_tol) break;
  }
  r.B = B;
  r.loss = squared_loss(Y, X, B);
  return r;
}

/// sum_ik y log(y / yhat) of the KLD regression, evaluated directly.
inline double kld_objective(const Matrix& Y, const Matrix& X, const Matrix& B) {
  const Matrix F = X * B;
  double s = 0.0;
  for (Eigen::Index i = 0; i < Y.rows(); ++i)
    for (Eigen::Index k = 0; k < Y.cols(); ++k)
      if (Y(i, k) > 0.0) s += Y(i, k) * std::log(Y(i, k) / F(i, k));
  return s;
}

}  // namespace oracle
