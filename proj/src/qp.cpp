#include "scls/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace scls::qp {

const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "Optimal";
    case Status::Infeasible: return "Infeasible";
    case Status::NotPositiveDefinite: return "NotPositiveDefinite";
    case Status::IterationLimit: return "IterationLimit";
  }
  return "Unknown";
}

void QuadraticProgram::validate() const {
  const Index m = Dmat.rows();
  if (Dmat.cols() != m || dvec.size() != m)
    throw Error(ErrorCode::ShapeMismatch, "Dmat must be square and match dvec");
  if (Amat_T.rows() != b0.size() || (Amat_T.rows() > 0 && Amat_T.cols() != m))
    throw Error(ErrorCode::ShapeMismatch, "constraint matrix does not match b0 or Dmat");
  if (n_equalities < 0 || n_equalities > Amat_T.rows())
    throw Error(ErrorCode::InvalidArgument, "n_equalities exceeds the constraint count");
  if ((Dmat - Dmat.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, Dmat.cwiseAbs().maxCoeff()))
    throw Error(ErrorCode::InvalidArgument, "Dmat is not symmetric");
}

DualActiveSetSolver::DualActiveSetSolver(const Matrix& Dmat, Matrix Amat_T,
                                         Vector b0, Index n_equalities)
    : Dmat_(Dmat), Amat_T_(std::move(Amat_T)), b0_(std::move(b0)), n_eq_(n_equalities) {
  const Index n = Dmat_.rows();
  if (Amat_T_.rows() == 0) Amat_T_.resize(0, n);
  Eigen::LLT<Matrix> llt(Dmat_);
  if (llt.info() != Eigen::Success) return;
  const Matrix L = llt.matrixL();
  if (n > 0 && L.diagonal().array().square().minCoeff() < kPivotFloor) return;
  // J0 = L^-T, so that J0 J0' = (L L')^-1.
  J0_ = L.transpose().triangularView<Eigen::Upper>().solve(Matrix::Identity(n, n));
  factorized_ = true;
}

namespace {

struct Workspace {
  Matrix J;
  Matrix R;
  Vector u;
  std::vector<Index> active;
  Index q = 0;
};

// Rotates d(q..n-1) onto d(q) and appends it as column q of R.
void add_constraint(Workspace& w, Vector& d) {
  const Index n = w.J.rows();
  for (Index j = n - 1; j > w.q; --j) {
    const double a = d[j - 1], b = d[j];
    const double h = std::hypot(a, b);
    if (h == 0.0) continue;
    const double c = a / h, s = b / h;
    d[j - 1] = h;
    d[j] = 0.0;
    for (Index k = 0; k < n; ++k) {
      const double t1 = w.J(k, j - 1), t2 = w.J(k, j);
      w.J(k, j - 1) = c * t1 + s * t2;
      w.J(k, j) = -s * t1 + c * t2;
    }
  }
  w.R.col(w.q).head(w.q + 1) = d.head(w.q + 1);
  ++w.q;
}

// Removes active position `pos`, restoring R to upper triangular form.
void drop_constraint(Workspace& w, Index pos) {
  const Index n = w.J.rows();
  for (Index k = pos; k + 1 < w.q; ++k) {
    w.active[static_cast<std::size_t>(k)] = w.active[static_cast<std::size_t>(k + 1)];
    w.u[k] = w.u[k + 1];
    w.R.col(k) = w.R.col(k + 1);
  }
  --w.q;
  w.R.col(w.q).setZero();
  for (Index j = pos; j < w.q; ++j) {
    const double a = w.R(j, j), b = w.R(j + 1, j);
    const double h = std::hypot(a, b);
    if (h == 0.0) continue;
    const double c = a / h, s = b / h;
    for (Index k = j; k < w.q; ++k) {
      const double t1 = w.R(j, k), t2 = w.R(j + 1, k);
      w.R(j, k) = c * t1 + s * t2;
      w.R(j + 1, k) = -s * t1 + c * t2;
    }
    w.R(j + 1, j) = 0.0;
    for (Index k = 0; k < n; ++k) {
      const double t1 = w.J(k, j), t2 = w.J(k, j + 1);
      w.J(k, j) = c * t1 + s * t2;
      w.J(k, j + 1) = -s * t1 + c * t2;
    }
  }
}

struct StepDirection {
  Vector d;  // J' n_p
  Vector z;  // primal step direction
  Vector r;  // dual step direction for the active set
  double zn = 0.0;
};

StepDirection direction(const Workspace& w, const Eigen::Ref<const Vector>& np) {
  const Index n = w.J.rows();
  StepDirection s;
  s.d = w.J.transpose() * np;
  const Index free = n - w.q;
  s.z = w.J.rightCols(free) * s.d.tail(free);
  s.r = w.R.topLeftCorner(w.q, w.q).triangularView<Eigen::Upper>().solve(s.d.head(w.q));
  s.zn = s.d.tail(free).squaredNorm();
  // zn is |J2' n_p|^2; below this it is roundoff on a dependent constraint.
  if (s.zn <= 1e-26 * std::max(1.0, s.d.squaredNorm())) s.zn = 0.0;
  return s;
}

}  // namespace

QPSolution DualActiveSetSolver::solve(const Vector& dvec) const {
  const Index n = Dmat_.rows();
  const Index c = Amat_T_.rows();
  QPSolution out;
  out.multipliers = Vector::Zero(c);
  if (!factorized_) {
    out.status = Status::NotPositiveDefinite;
    out.b = Vector::Zero(n);
    return out;
  }
  if (dvec.size() != n) throw Error(ErrorCode::ShapeMismatch, "dvec length differs from Dmat");

  constexpr double kInf = std::numeric_limits<double>::infinity();
  Workspace w;
  w.J = J0_;
  w.R = Matrix::Zero(n, n);
  w.u = Vector::Zero(n);
  w.active.assign(static_cast<std::size_t>(n), -1);

  Vector x = J0_ * (J0_.transpose() * dvec);
  std::vector<char> is_active(static_cast<std::size_t>(c), 0);

  auto finish = [&](Status status) {
    out.status = status;
    out.b = x;
    out.objective = 0.5 * x.dot(Dmat_ * x) - dvec.dot(x);
    for (Index k = 0; k < w.q; ++k) {
      const Index i = w.active[static_cast<std::size_t>(k)];
      out.active_set.push_back(i);
      out.multipliers[i] = w.u[k];
    }
    std::sort(out.active_set.begin(), out.active_set.end());
    return out;
  };

  for (Index i = 0; i < n_eq_; ++i) {
    const auto np = Amat_T_.row(i).transpose();
    StepDirection s = direction(w, np);
    const double slack = np.dot(x) - b0_[i];
    if (s.zn == 0.0) {
      // Linearly dependent on earlier equalities: either redundant or contradictory.
      if (std::abs(slack) > 1e-8 * std::max(1.0, std::abs(b0_[i]))) return finish(Status::Infeasible);
      continue;
    }
    const double t = -slack / s.zn;
    x += t * s.z;
    w.u.head(w.q) -= t * s.r;
    w.u[w.q] = t;
    w.active[static_cast<std::size_t>(w.q)] = i;
    add_constraint(w, s.d);
    is_active[static_cast<std::size_t>(i)] = 1;
  }

  const int max_iter = static_cast<int>(10 * (n + c) + 100);
  while (true) {
    if (++out.iterations > max_iter) return finish(Status::IterationLimit);

    // Most violated inactive inequality; ties go to the lowest row.
    Index p = -1;
    double worst = -kFeasibilityTol;
    for (Index i = n_eq_; i < c; ++i) {
      if (is_active[static_cast<std::size_t>(i)]) continue;
      const double slack = Amat_T_.row(i).dot(x) - b0_[i];
      if (slack < worst) {
        worst = slack;
        p = i;
      }
    }
    if (p < 0) return finish(Status::Optimal);

    const auto np = Amat_T_.row(p).transpose();
    double slack_p = worst;
    double u_p = 0.0;
    while (true) {
      StepDirection s = direction(w, np);

      Index drop = -1;
      double t1 = kInf;
      for (Index k = 0; k < w.q; ++k) {
        const Index idx = w.active[static_cast<std::size_t>(k)];
        if (idx < n_eq_ || !(s.r[k] > 0.0)) continue;
        const double ratio = w.u[k] / s.r[k];
        if (ratio < t1 || (ratio == t1 && idx < w.active[static_cast<std::size_t>(drop)])) {
          t1 = ratio;
          drop = k;
        }
      }
      const double t2 = s.zn > 0.0 ? -slack_p / s.zn : kInf;
      const double t = std::min(t1, t2);
      if (t == kInf) return finish(Status::Infeasible);

      w.u.head(w.q) -= t * s.r;
      u_p += t;
      if (t2 == kInf) {
        is_active[static_cast<std::size_t>(w.active[static_cast<std::size_t>(drop)])] = 0;
        drop_constraint(w, drop);
        continue;
      }
      x += t * s.z;
      if (t2 <= t1) {
        w.u[w.q] = u_p;
        w.active[static_cast<std::size_t>(w.q)] = p;
        add_constraint(w, s.d);
        is_active[static_cast<std::size_t>(p)] = 1;
        break;
      }
      is_active[static_cast<std::size_t>(w.active[static_cast<std::size_t>(drop)])] = 0;
      drop_constraint(w, drop);
      slack_p = np.dot(x) - b0_[p];
      if (++out.iterations > max_iter) return finish(Status::IterationLimit);
    }
  }
}

QPSolution solve_qp(const QuadraticProgram& qp) {
  qp.validate();
  DualActiveSetSolver solver(qp.Dmat, qp.Amat_T, qp.b0, qp.n_equalities);
  return solver.solve(qp.dvec);
}

namespace {

Matrix clip_spectrum(const Matrix& S, double floor) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(S);
  const Vector lambda = eig.eigenvalues().cwiseMax(floor);
  Matrix out = eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

}  // namespace

Matrix nearest_positive_definite(const Matrix& M, double epsilon, int max_iter,
                                 bool keep_diagonal) {
  if (M.rows() != M.cols()) throw Error(ErrorCode::ShapeMismatch, "matrix must be square");
  if (M.size() == 0) return M;
  const Matrix sym = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() >= epsilon) return M;

  Matrix Y = sym;
  Matrix correction = Matrix::Zero(M.rows(), M.cols());
  bool converged = false;
  for (int it = 0; it < max_iter; ++it) {
    const Matrix R = Y - correction;
    const Matrix X = clip_spectrum(R, 0.0);
    correction = X - R;
    Matrix next = X;
    if (keep_diagonal) next.diagonal() = sym.diagonal();
    const double change = (Y - next).norm() / std::max(Y.norm(), 1e-300);
    Y = std::move(next);
    if (change < 1e-7) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw Error(ErrorCode::NoConvergence, "positive-definite repair did not converge");
  return clip_spectrum(Y, epsilon);
}

}  // namespace scls::qp
