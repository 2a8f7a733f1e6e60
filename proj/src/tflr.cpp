#include "scls/tflr.hpp"

#include <cassert>
#include <cmath>
#include <optional>

namespace scls {

namespace {

constexpr double kFrozenCell = 1e-12;

// sum_ik y_ik log y_ik, the constant part of the objective.
double response_entropy_term(const Matrix& Y) {
  double s = 0.0;
  for (Index k = 0; k < Y.cols(); ++k)
    for (Index i = 0; i < Y.rows(); ++i)
      if (Y(i, k) > 0.0) s += Y(i, k) * std::log(Y(i, k));
  return s;
}

// sum_ik y_ik log yhat_ik; also fills `ratio` with y / yhat (0 where y = 0).
double cross_term(const Matrix& Y, const Matrix& fitted, Matrix& ratio) {
  double s = 0.0;
  for (Index k = 0; k < Y.cols(); ++k) {
    for (Index i = 0; i < Y.rows(); ++i) {
      const double y = Y(i, k);
      if (y <= 0.0) {
        ratio(i, k) = 0.0;
        continue;
      }
      const double f = fitted(i, k);
      if (!(f > 0.0))
        throw Error(ErrorCode::ZeroFittedCell,
                    "fitted value is 0 where the response is positive (row " + std::to_string(i + 1) +
                        ", component " + std::to_string(k + 1) + "); the KLD objective is undefined");
      ratio(i, k) = y / f;
      s += y * std::log(f);
    }
  }
  return s;
}

}  // namespace

double tflr_objective(const Matrix& Y, const Matrix& X, const Matrix& B) {
  Matrix ratio(Y.rows(), Y.cols());
  return std::max(0.0, response_entropy_term(Y) - cross_term(Y, X * B, ratio));
}

TflrFit fit_tflr(const CompositionMatrix& Y_in, const CompositionMatrix& X,
                 const TflrOptions& options) {
  if (Y_in.rows() != X.rows()) throw Error(ErrorCode::ShapeMismatch, "response and predictor differ in rows");
  if (options.max_iter < 1) throw Error(ErrorCode::InvalidArgument, "max_iter must be >= 1");
  const CompositionMatrix Yt = power_transform(Y_in, options.alpha);
  const Matrix& Y = Yt.data();

  Matrix B;
  if (options.init) {
    if (options.init->predictors() != X.cols() || options.init->responses() != Y.cols())
      throw Error(ErrorCode::ShapeMismatch, "initial coefficients have the wrong shape");
    B = options.init->matrix();
  } else {
    B = fit_scls(Yt, X).B().matrix();
  }
  B = (B.array() < kFrozenCell).select(0.0, B);
  for (Index j = 0; j < B.rows(); ++j) B.row(j) /= B.row(j).sum();

  TflrFit fit;
  fit.alpha = options.alpha;
  const double constant = response_entropy_term(Y);

  struct State {
    Matrix B, fitted, ratio;
    double objective = 0.0;
  };
  auto evaluate = [&](Matrix b) {
    State st;
    st.fitted = X.data() * b;
    st.ratio.resize(Y.rows(), Y.cols());
    st.objective = constant - cross_term(Y, st.fitted, st.ratio);
    st.B = std::move(b);
    return st;
  };
  int evaluations = 0;
  auto em_step = [&](const State& from) {
    ++evaluations;
    Matrix next = from.B.cwiseProduct(X.data().transpose() * from.ratio);
    next = (next.array() < kFrozenCell).select(0.0, next);
    for (Index j = 0; j < next.rows(); ++j) {
      const double s = next.row(j).sum();
      // A predictor column that is zero in every row carries no information;
      // its coefficient row keeps its previous value.
      if (s > 0.0) next.row(j) /= s;
      else next.row(j) = from.B.row(j);
    }
    State st = evaluate(std::move(next));
    assert(st.objective <= from.objective + 1e-9 * std::max(1.0, std::abs(from.objective)));
    return st;
  };

  State cur = evaluate(std::move(B));
  if (options.record_trace) fit.trace.push_back(cur.objective);

  // SQUAREM (Varadhan & Roland, scheme S3): from two EM steps, extrapolate
  // along the secant, then take one stabilizing EM step. Steps are halved
  // toward plain EM while the extrapolation leaves the non-negative orthant;
  // rows keep summing to 1 because both directions have zero row sums.
  auto extrapolate = [&](const State& x0, const State& x1, const State& x2) -> std::optional<State> {
    const Matrix r = x1.B - x0.B;
    const Matrix v = x2.B - x1.B - r;
    const double rn = r.norm(), vn = v.norm();
    if (!(rn > 0.0) || !(vn > 0.0)) return std::nullopt;
    double a = -rn / vn;
    for (int k = 0; k < 30 && a < -1.0; ++k, a = 0.5 * (a - 1.0)) {
      Matrix t = x0.B - 2.0 * a * r + a * a * v;
      if (t.minCoeff() < 0.0) continue;
      try {
        State ext = evaluate(std::move(t));
        if (evaluations >= options.max_iter) return std::nullopt;
        State stable = em_step(ext);
        if (stable.objective <= x2.objective) return stable;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::ZeroFittedCell) throw;
      }
      return std::nullopt;
    }
    return std::nullopt;
  };

  while (evaluations < options.max_iter) {
    State next = em_step(cur);
    if (options.accelerate && evaluations < options.max_iter) {
      State second = em_step(next);
      auto ext = extrapolate(cur, next, second);
      next = ext ? std::move(*ext) : std::move(second);
    }
    const double improvement = cur.objective - next.objective;
    if (improvement < 0.0) {
      // EM never increases the objective in exact arithmetic; an increase is
      // rounding at the fixed point, so stop and keep the better point.
      fit.converged = true;
      break;
    }
    cur = std::move(next);
    if (options.record_trace) fit.trace.push_back(cur.objective);
    if (improvement < options.tol) {
      fit.converged = true;
      break;
    }
  }
  if (!fit.converged && options.require_convergence)
    throw Error(ErrorCode::NoConvergence,
                "EM did not converge in " + std::to_string(options.max_iter) + " iterations");

  fit.iterations = evaluations;
  fit.kld = std::max(0.0, cur.objective);
  fit.coefficients = CoefficientMatrix::unchecked(std::move(cur.B), X.names(), Y_in.names());
  auto mean = CompositionMatrix::unchecked(std::move(cur.fitted), Y_in.names());
  fit.fitted = options.alpha == 1.0 ? std::move(mean) : power_transform_inverse(mean, options.alpha);
  return fit;
}

}  // namespace scls
