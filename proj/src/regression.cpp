#include "scls/regression.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Cholesky>

namespace scls {

namespace {

void require_same_n(const CompositionMatrix& Y, const CompositionMatrix& X) {
  if (Y.rows() != X.rows())
    throw Error(ErrorCode::ShapeMismatch, "response has " + std::to_string(Y.rows()) +
                                              " rows, predictor has " + std::to_string(X.rows()));
}

bool passes_pivot_floor(const Matrix& G) {
  Eigen::LLT<Matrix> llt(G);
  if (llt.info() != Eigen::Success) return false;
  const Matrix L = llt.matrixL();
  return L.diagonal().array().square().minCoeff() >= qp::kPivotFloor;
}

Matrix kron_identity(Index copies, const Matrix& block) {
  const Index p = block.rows();
  Matrix out = Matrix::Zero(copies * p, copies * p);
  for (Index k = 0; k < copies; ++k) out.block(k * p, k * p, p, p) = block;
  return out;
}

// D_p row-sum equalities followed by D_r*D_p non-negativity rows, for b = vec(B).
void simplex_row_constraints(Index predictors, Index responses, Matrix& A, Vector& b0) {
  const Index m = predictors * responses;
  A = Matrix::Zero(predictors + m, m);
  b0 = Vector::Zero(predictors + m);
  for (Index j = 0; j < predictors; ++j) {
    for (Index k = 0; k < responses; ++k) A(j, k * predictors + j) = 1.0;
    b0[j] = 1.0;
  }
  A.bottomRows(m).setIdentity();
}

Matrix horizontal_design(std::span<const CompositionMatrix> Xs, const Vector& weights) {
  Index cols = 0;
  for (const auto& X : Xs) cols += X.cols();
  Matrix Z(Xs.front().rows(), cols);
  Index offset = 0;
  for (std::size_t m = 0; m < Xs.size(); ++m) {
    Z.middleCols(offset, Xs[m].cols()) = weights[static_cast<Index>(m)] * Xs[m].data();
    offset += Xs[m].cols();
  }
  return Z;
}

std::vector<CoefficientMatrix> split_blocks(const Matrix& B, std::span<const CompositionMatrix> Xs,
                                            const std::vector<std::string>& response_names) {
  std::vector<CoefficientMatrix> out;
  Index offset = 0;
  for (const auto& X : Xs) {
    out.push_back(CoefficientMatrix::unchecked(B.middleRows(offset, X.cols()), X.names(),
                                               response_names));
    offset += X.cols();
  }
  return out;
}

Matrix combined_fit(std::span<const CompositionMatrix> Xs, const std::vector<CoefficientMatrix>& Bs,
                    const Vector& a) {
  Matrix out = Matrix::Zero(Xs.front().rows(), Bs.front().responses());
  for (std::size_t m = 0; m < Xs.size(); ++m)
    out += a[static_cast<Index>(m)] * (Xs[m].data() * Bs[m].matrix());
  return out;
}

SolverDiagnostics diagnostics_of(const qp::QPSolution& sol, bool repaired) {
  return SolverDiagnostics{sol.status, sol.iterations, static_cast<Index>(sol.active_set.size()),
                           repaired};
}

void require_predictor_set(const CompositionMatrix& Y, std::span<const CompositionMatrix> Xs) {
  if (Xs.size() < 2)
    throw Error(ErrorCode::InvalidArgument, "multi-predictor fits need at least 2 predictors");
  for (const auto& X : Xs) require_same_n(Y, X);
}

// Block step of the multi-predictor model: B^1..B^M for fixed weights a.
struct BlockSolution {
  std::vector<CoefficientMatrix> Bs;
  qp::QPSolution solution;
  bool repaired = false;
};

BlockSolution solve_blocks(const CompositionMatrix& Y, std::span<const CompositionMatrix> Xs,
                           const Vector& a) {
  const Matrix Z = horizontal_design(Xs, a);
  SclsSolver solver(Z, Y.cols());
  BlockSolution out;
  out.solution = solver.solve_cross(Z.transpose() * Y.data());
  out.repaired = solver.repaired();
  out.Bs = split_blocks(solver.unvec(out.solution.b), Xs, Y.names());
  return out;
}

// Weight step: least squares over the M-simplex for fixed B^1..B^M.
Vector solve_weights(const CompositionMatrix& Y, std::span<const CompositionMatrix> Xs,
                     const std::vector<CoefficientMatrix>& Bs) {
  const Index M = static_cast<Index>(Xs.size());
  std::vector<Matrix> F;
  for (Index m = 0; m < M; ++m) F.push_back(Xs[static_cast<std::size_t>(m)].data() * Bs[static_cast<std::size_t>(m)].matrix());
  Matrix G(M, M);
  Vector h(M);
  for (Index m = 0; m < M; ++m) {
    h[m] = (F[static_cast<std::size_t>(m)].array() * Y.data().array()).sum();
    for (Index l = 0; l < M; ++l)
      G(m, l) = (F[static_cast<std::size_t>(m)].array() * F[static_cast<std::size_t>(l)].array()).sum();
  }
  if (!passes_pivot_floor(G))
    G = qp::nearest_positive_definite(G, qp::kRepairFloor * std::max(1.0, G.diagonal().maxCoeff()));
  Matrix A = Matrix::Zero(M + 1, M);
  Vector b0 = Vector::Zero(M + 1);
  A.row(0).setOnes();
  b0[0] = 1.0;
  A.bottomRows(M).setIdentity();
  qp::DualActiveSetSolver solver(G, A, b0, 1);
  const auto sol = solver.solve(h);
  if (!sol.optimal())
    throw Error(ErrorCode::NoConvergence, std::string("weight step failed: ") + qp::to_string(sol.status));
  Vector a = sol.b.cwiseMax(0.0);
  return a / a.sum();
}

}  // namespace

CoefficientMatrix::CoefficientMatrix(Matrix B, std::vector<std::string> pn,
                                     std::vector<std::string> rn)
    : B_(std::move(B)), predictor_names_(std::move(pn)), response_names_(std::move(rn)) {
  if (predictor_names_.empty()) predictor_names_ = default_names("X", B_.rows());
  if (response_names_.empty()) response_names_ = default_names("Y", B_.cols());
  if (static_cast<Index>(predictor_names_.size()) != B_.rows() ||
      static_cast<Index>(response_names_.size()) != B_.cols())
    throw Error(ErrorCode::ShapeMismatch, "coefficient names do not match the matrix shape");
}

CoefficientMatrix CoefficientMatrix::from_matrix(Matrix B, std::vector<std::string> predictor_names,
                                                 std::vector<std::string> response_names,
                                                 double tol) {
  if (B.rows() < 1 || B.cols() < 2)
    throw Error(ErrorCode::DimensionTooSmall, "coefficient matrix needs >= 1 row and >= 2 columns");
  for (Index j = 0; j < B.rows(); ++j) {
    if (B.row(j).minCoeff() < -tol || B.row(j).maxCoeff() > 1.0 + tol)
      throw Error(ErrorCode::NotOnSimplex,
                  "coefficient row " + std::to_string(j + 1) + " has entries outside [0, 1]");
    if (std::abs(B.row(j).sum() - 1.0) > tol)
      throw Error(ErrorCode::NotOnSimplex,
                  "coefficient row " + std::to_string(j + 1) + " does not sum to 1");
  }
  return CoefficientMatrix(std::move(B), std::move(predictor_names), std::move(response_names));
}

CoefficientMatrix CoefficientMatrix::unchecked(Matrix B, std::vector<std::string> predictor_names,
                                               std::vector<std::string> response_names) {
  return CoefficientMatrix(std::move(B), std::move(predictor_names), std::move(response_names));
}

SclsSolver::SclsSolver(const Matrix& Z, Index responses) : responses_(responses) {
  if (responses < 2) throw Error(ErrorCode::DimensionTooSmall, "response needs >= 2 components");
  gram_ = Z.transpose() * Z;
  if (!passes_pivot_floor(gram_)) {
    gram_ = qp::nearest_positive_definite(
        gram_, qp::kRepairFloor * std::max(1.0, gram_.diagonal().maxCoeff()));
    repaired_ = true;
  }
  Matrix A;
  Vector b0;
  simplex_row_constraints(gram_.rows(), responses_, A, b0);
  solver_ = std::make_unique<qp::DualActiveSetSolver>(kron_identity(responses_, gram_),
                                                      std::move(A), std::move(b0), gram_.rows());
}

qp::QPSolution SclsSolver::solve_cross(const Matrix& cross) const {
  if (cross.rows() != predictors() || cross.cols() != responses_)
    throw Error(ErrorCode::ShapeMismatch, "cross-product has the wrong shape");
  const Vector dvec = Eigen::Map<const Vector>(cross.data(), cross.size());
  auto sol = solver_->solve(dvec);
  switch (sol.status) {
    case qp::Status::Optimal: return sol;
    case qp::Status::Infeasible: throw Error(ErrorCode::Infeasible, "SCLS quadratic program is infeasible");
    case qp::Status::NotPositiveDefinite:
      throw Error(ErrorCode::NotPositiveDefinite, "SCLS quadratic term is not positive definite");
    case qp::Status::IterationLimit:
      throw Error(ErrorCode::NoConvergence, "SCLS active-set iteration limit reached");
  }
  return sol;
}

Matrix SclsSolver::unvec(const Vector& b) const {
  Matrix B = Eigen::Map<const Matrix>(b.data(), predictors(), responses_);
  return B.cwiseMax(0.0);
}

qp::QuadraticProgram assemble_qp(const CompositionMatrix& Y, const CompositionMatrix& X) {
  require_same_n(Y, X);
  qp::QuadraticProgram qp;
  const Matrix gram = X.data().transpose() * X.data();
  qp.Dmat = kron_identity(Y.cols(), gram);
  const Matrix cross = X.data().transpose() * Y.data();
  qp.dvec = Eigen::Map<const Vector>(cross.data(), cross.size());
  simplex_row_constraints(X.cols(), Y.cols(), qp.Amat_T, qp.b0);
  qp.n_equalities = X.cols();
  return qp;
}

qp::QuadraticProgram assemble_qp_with_upper_bounds(const CompositionMatrix& Y,
                                                   const CompositionMatrix& X) {
  auto qp = assemble_qp(Y, X);
  const Index m = qp.variables();
  const Index c = qp.constraints();
  qp.Amat_T.conservativeResize(c + m, m);
  qp.Amat_T.bottomRows(m) = -Matrix::Identity(m, m);
  qp.b0.conservativeResize(c + m);
  qp.b0.tail(m).setConstant(-1.0);
  return qp;
}

double squared_loss(const Matrix& Y, const Matrix& X, const Matrix& B) {
  return (Y - X * B).squaredNorm();
}

SclsFit fit_scls(const CompositionMatrix& Y, const CompositionMatrix& X) {
  require_same_n(Y, X);
  SclsSolver solver(X.data(), Y.cols());
  const auto sol = solver.solve_cross(X.data().transpose() * Y.data());
  SclsFit fit;
  Matrix B = solver.unvec(sol.b);
  fit.loss = squared_loss(Y.data(), X.data(), B);
  fit.fitted = CompositionMatrix::unchecked(X.data() * B, Y.names());
  fit.coefficients.push_back(CoefficientMatrix::unchecked(std::move(B), X.names(), Y.names()));
  fit.weights = Vector::Ones(1);
  fit.diagnostics = diagnostics_of(sol, solver.repaired());
  return fit;
}

SclsFit fit_alpha_scls(const CompositionMatrix& Y, const CompositionMatrix& X, double alpha) {
  if (alpha == 0.0) throw Error(ErrorCode::AlphaZero, "alpha must be non-zero");
  if (alpha == 1.0) return fit_scls(Y, X);
  SclsFit fit = fit_scls(power_transform(Y, alpha), X);
  fit.alpha = alpha;
  fit.fitted = power_transform_inverse(fit.fitted, alpha);
  return fit;
}

SclsFit fit_multi(const CompositionMatrix& Y, std::span<const CompositionMatrix> Xs) {
  require_predictor_set(Y, Xs);
  const Vector a = Vector::Constant(static_cast<Index>(Xs.size()), 1.0 / static_cast<double>(Xs.size()));
  auto blocks = solve_blocks(Y, Xs, a);
  SclsFit fit;
  const Matrix fitted = combined_fit(Xs, blocks.Bs, a);
  fit.loss = (Y.data() - fitted).squaredNorm();
  fit.fitted = CompositionMatrix::unchecked(fitted, Y.names());
  fit.coefficients = std::move(blocks.Bs);
  fit.weights = a;
  fit.diagnostics = diagnostics_of(blocks.solution, blocks.repaired);
  return fit;
}

SclsFit fit_weighted(const CompositionMatrix& Y, std::span<const CompositionMatrix> Xs,
                     const WeightedOptions& options) {
  require_predictor_set(Y, Xs);
  if (options.fix_weights) {
    SclsFit fit = fit_multi(Y, Xs);
    fit.objective_trace.push_back(fit.loss);
    return fit;
  }
  const Index M = static_cast<Index>(Xs.size());
  Vector a = Vector::Constant(M, 1.0 / static_cast<double>(M));
  std::vector<CoefficientMatrix> Bs;
  for (const auto& X : Xs) Bs.push_back(fit_scls(Y, X).B());
  auto objective = [&](const Vector& w, const std::vector<CoefficientMatrix>& B) {
    return (Y.data() - combined_fit(Xs, B, w)).squaredNorm();
  };

  SclsFit fit;
  double current = objective(a, Bs);
  fit.objective_trace.push_back(current);
  qp::QPSolution last;
  bool repaired = false;
  bool converged = false;
  int it = 0;
  while (it < options.max_alternations) {
    ++it;
    const double round_start = current;

    Vector a_new = solve_weights(Y, Xs, Bs);
    const double after_weights = objective(a_new, Bs);
    if (after_weights <= current) {
      a = std::move(a_new);
      current = after_weights;
    }
    fit.objective_trace.push_back(current);

    auto blocks = solve_blocks(Y, Xs, a);
    const double after_blocks = objective(a, blocks.Bs);
    if (after_blocks <= current) {
      Bs = std::move(blocks.Bs);
      current = after_blocks;
      last = std::move(blocks.solution);
      repaired = blocks.repaired;
    }
    fit.objective_trace.push_back(current);

    if (round_start - current < options.tol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw Error(ErrorCode::NoConvergence, "weighted fit did not converge in " +
                                              std::to_string(options.max_alternations) + " alternations");
  const Matrix fitted = combined_fit(Xs, Bs, a);
  fit.loss = current;
  fit.fitted = CompositionMatrix::unchecked(fitted, Y.names());
  fit.coefficients = std::move(Bs);
  fit.weights = a;
  fit.alternations = it;
  fit.diagnostics = diagnostics_of(last, repaired);
  return fit;
}

LaggedPairs lag_pairs(const CompositionMatrix& series, std::span<const std::string> groups) {
  const Index n = series.rows();
  std::vector<Index> current_rows, lagged_rows;
  if (groups.empty()) {
    if (n < 2) throw Error(ErrorCode::InsufficientTimePoints, "AR(1) needs at least 2 time points");
    for (Index i = 1; i < n; ++i) {
      current_rows.push_back(i);
      lagged_rows.push_back(i - 1);
    }
  } else {
    if (static_cast<Index>(groups.size()) != n)
      throw Error(ErrorCode::ShapeMismatch, "one group label per row is required");
    std::map<std::string, Index> previous;
    std::map<std::string, Index> count;
    for (Index i = 0; i < n; ++i) {
      const auto& g = groups[static_cast<std::size_t>(i)];
      if (auto it = previous.find(g); it != previous.end()) {
        current_rows.push_back(i);
        lagged_rows.push_back(it->second);
      }
      previous[g] = i;
      ++count[g];
    }
    for (const auto& [g, c] : count)
      if (c < 2)
        throw Error(ErrorCode::InsufficientTimePoints, "group '" + g + "' has a single time point");
  }
  return LaggedPairs{series.select_rows(current_rows), series.select_rows(lagged_rows)};
}

SclsFit fit_ar1(const CompositionMatrix& series, std::span<const std::string> groups) {
  const auto pairs = lag_pairs(series, groups);
  std::vector<std::string> lag_names;
  for (const auto& name : series.names()) lag_names.push_back(name + "_lag1");
  const auto lagged = CompositionMatrix::unchecked(pairs.lagged.data(), lag_names);
  return fit_scls(pairs.current, lagged);
}

CompositionMatrix encode_categorical(std::span<const std::string> levels) {
  std::vector<std::string> distinct;
  std::map<std::string, Index> position;
  for (const auto& l : levels) {
    if (position.emplace(l, static_cast<Index>(distinct.size())).second) distinct.push_back(l);
  }
  if (distinct.size() < 2)
    throw Error(ErrorCode::SingleLevel, "categorical predictor needs at least 2 levels");
  Matrix X = Matrix::Zero(static_cast<Index>(levels.size()), static_cast<Index>(distinct.size()));
  for (std::size_t i = 0; i < levels.size(); ++i) X(static_cast<Index>(i), position.at(levels[i])) = 1.0;
  return CompositionMatrix::unchecked(std::move(X), std::move(distinct));
}

CompositionMatrix predict(const SclsFit& fit, std::span<const CompositionMatrix> Xs_new) {
  if (Xs_new.size() != fit.coefficients.size())
    throw Error(ErrorCode::ShapeMismatch, "predictor count differs from the fitted model");
  for (std::size_t m = 0; m < Xs_new.size(); ++m) {
    if (Xs_new[m].cols() != fit.coefficients[m].predictors())
      throw Error(ErrorCode::ShapeMismatch, "predictor component count differs from the fitted model");
    if (Xs_new[m].rows() != Xs_new.front().rows())
      throw Error(ErrorCode::ShapeMismatch, "predictor sets differ in row count");
  }
  Matrix mean = Matrix::Zero(Xs_new.front().rows(), fit.coefficients.front().responses());
  for (std::size_t m = 0; m < Xs_new.size(); ++m)
    mean += fit.weights[static_cast<Index>(m)] * (Xs_new[m].data() * fit.coefficients[m].matrix());
  auto out = CompositionMatrix::unchecked(std::move(mean), fit.coefficients.front().response_names());
  return fit.alpha == 1.0 ? out : power_transform_inverse(out, fit.alpha);
}

CompositionMatrix predict(const SclsFit& fit, const CompositionMatrix& X_new) {
  return predict(fit, std::span<const CompositionMatrix>(&X_new, 1));
}

Vector interpret_delta(const CoefficientMatrix& B, Index j, Index l, double delta) {
  if (j < 0 || l < 0 || j >= B.predictors() || l >= B.predictors())
    throw Error(ErrorCode::IndexOutOfRange, "coefficient row index out of range");
  return delta * (B.matrix().row(j) - B.matrix().row(l)).transpose();
}

}  // namespace scls
