#include "scls/inference.hpp"

#include <optional>

namespace scls {

const char* to_string(Model m) { return m == Model::SCLS ? "SCLS" : "TFLR"; }

const char* to_string(StatisticKind k) {
  switch (k) {
    case StatisticKind::SL: return "SL";
    case StatisticKind::KLD: return "KLD";
    case StatisticKind::SLDifference: return "SL_difference";
  }
  return "unknown";
}

namespace {

constexpr int kMaxRedraws = 10;

void require_same_n(const CompositionMatrix& Y, const CompositionMatrix& X) {
  if (Y.rows() != X.rows()) throw Error(ErrorCode::ShapeMismatch, "response and predictor differ in rows");
}

void require_replicates(Index R) {
  if (R < 1) throw Error(ErrorCode::InvalidArgument, "at least one replicate is required");
}

TestResult finish(double observed, std::vector<std::optional<double>> reps, std::uint64_t seed,
                  StatisticKind kind, Index redraws) {
  TestResult out;
  out.statistic_observed = observed;
  out.seed = seed;
  out.statistic_kind = kind;
  out.redraws = redraws;
  for (const auto& v : reps) {
    if (v) out.replicates.push_back(*v);
    else ++out.missing;
  }
  out.R = static_cast<Index>(out.replicates.size());
  out.p_value = permutation_p_value(observed, out.replicates);
  return out;
}

Matrix permuted_cross(const Matrix& X, const Matrix& Y, const std::vector<Index>& order) {
  Matrix cross = Matrix::Zero(X.cols(), Y.cols());
  for (Index i = 0; i < X.rows(); ++i)
    cross.noalias() += X.row(order[static_cast<std::size_t>(i)]).transpose() * Y.row(i);
  return cross;
}

TestResult independence_tflr(const CompositionMatrix& Y, const CompositionMatrix& X, Index R,
                             std::uint64_t seed, const Execution& exec) {
  const double observed = fit_tflr(Y, X).kld;
  std::vector<std::optional<double>> reps(static_cast<std::size_t>(R));
  std::vector<Index> redraws(static_cast<std::size_t>(R), 0);
  for_each_replicate(R, exec, [&](Index r) {
    Rng gen = make_stream(seed, static_cast<std::uint64_t>(r));
    for (int attempt = 0; attempt <= kMaxRedraws; ++attempt) {
      const auto order = random_permutation(X.rows(), gen);
      try {
        reps[static_cast<std::size_t>(r)] = fit_tflr(Y, X.select_rows(order)).kld;
        return;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::ZeroFittedCell) throw;
        ++redraws[static_cast<std::size_t>(r)];
      }
    }
  });
  Index total = 0;
  for (Index d : redraws) total += d;
  return finish(observed, std::move(reps), seed, StatisticKind::KLD, total);
}

}  // namespace

double permutation_p_value(double observed, std::span<const double> replicates) {
  Index count = 0;
  for (double v : replicates)
    if (v <= observed) ++count;
  return static_cast<double>(count + 1) / static_cast<double>(replicates.size() + 1);
}

std::vector<double> fast_sl_replicates(const CompositionMatrix& Y, const CompositionMatrix& X,
                                       std::span<const std::vector<Index>> permutations,
                                       const Execution& exec) {
  require_same_n(Y, X);
  const SclsSolver solver(X.data(), Y.cols());
  std::vector<double> out(permutations.size());
  for_each_replicate(static_cast<Index>(permutations.size()), exec, [&](Index r) {
    const auto& order = permutations[static_cast<std::size_t>(r)];
    if (static_cast<Index>(order.size()) != X.rows())
      throw Error(ErrorCode::ShapeMismatch, "permutation length differs from the row count");
    out[static_cast<std::size_t>(r)] = 2.0 * solver.solve_cross(permuted_cross(X.data(), Y.data(), order)).objective;
  });
  return out;
}

std::vector<double> naive_sl_replicates(const CompositionMatrix& Y, const CompositionMatrix& X,
                                        std::span<const std::vector<Index>> permutations,
                                        const Execution& exec) {
  require_same_n(Y, X);
  const double trace = Y.data().squaredNorm();
  std::vector<double> out(permutations.size());
  for_each_replicate(static_cast<Index>(permutations.size()), exec, [&](Index r) {
    const auto& order = permutations[static_cast<std::size_t>(r)];
    const auto Xr = CompositionMatrix::from_rows(X.select_rows(order).data(), X.names());
    out[static_cast<std::size_t>(r)] = fit_scls(Y, Xr).loss - trace;
  });
  return out;
}

TestResult test_independence(const CompositionMatrix& Y, const CompositionMatrix& X, Index R,
                             std::uint64_t seed, Model model, const Execution& exec) {
  require_same_n(Y, X);
  require_replicates(R);
  if (model == Model::TFLR) return independence_tflr(Y, X, R, seed, exec);

  const SclsSolver solver(X.data(), Y.cols());
  const double trace = Y.data().squaredNorm();
  const double observed = trace + 2.0 * solver.solve_cross(X.data().transpose() * Y.data()).objective;
  std::vector<std::optional<double>> reps(static_cast<std::size_t>(R));
  for_each_replicate(R, exec, [&](Index r) {
    Rng gen = make_stream(seed, static_cast<std::uint64_t>(r));
    const auto order = random_permutation(X.rows(), gen);
    reps[static_cast<std::size_t>(r)] =
        trace + 2.0 * solver.solve_cross(permuted_cross(X.data(), Y.data(), order)).objective;
  });
  return finish(observed, std::move(reps), seed, StatisticKind::SL, 0);
}

TestResult test_coefficients(const CompositionMatrix& Y, const CompositionMatrix& X,
                             const CoefficientMatrix& B0, Index R, std::uint64_t seed,
                             const Execution& exec) {
  require_same_n(Y, X);
  require_replicates(R);
  if (B0.predictors() != X.cols() || B0.responses() != Y.cols())
    throw Error(ErrorCode::ShapeMismatch, "B0 shape does not match the data");
  const SclsSolver solver(X.data(), Y.cols());
  auto statistic = [&](const Matrix& Yr) {
    const auto sol = solver.solve_cross(X.data().transpose() * Yr);
    return squared_loss(Yr, X.data(), solver.unvec(sol.b)) - squared_loss(Yr, X.data(), B0.matrix());
  };
  const Matrix mean = X.data() * B0.matrix();
  const Matrix residual = Y.data() - mean;
  const double observed = statistic(Y.data());

  std::vector<std::optional<double>> reps(static_cast<std::size_t>(R));
  for_each_replicate(R, exec, [&](Index r) {
    Rng gen = make_stream(seed, static_cast<std::uint64_t>(r));
    const auto order = random_permutation(X.rows(), gen);
    Matrix Yr(mean.rows(), mean.cols());
    for (Index i = 0; i < mean.rows(); ++i) {
      Yr.row(i) = (mean.row(i) + residual.row(order[static_cast<std::size_t>(i)])).cwiseMax(0.0);
      Yr.row(i) /= Yr.row(i).sum();
    }
    reps[static_cast<std::size_t>(r)] = statistic(Yr);
  });
  return finish(observed, std::move(reps), seed, StatisticKind::SLDifference, 0);
}

TestResult test_amalgamation(const CompositionMatrix& Y, const CompositionMatrix& X, Index l1,
                             Index l2, Index R, std::uint64_t seed, const Execution& exec) {
  require_same_n(Y, X);
  require_replicates(R);
  if (l1 < 0 || l2 < 0 || l1 >= X.cols() || l2 >= X.cols())
    throw Error(ErrorCode::IndexOutOfRange, "amalgamation column out of range");
  if (l1 == l2) throw Error(ErrorCode::InvalidArgument, "amalgamation needs two distinct columns");
  const double observed = fit_scls(Y, X).loss;
  std::vector<std::optional<double>> reps(static_cast<std::size_t>(R));
  for_each_replicate(R, exec, [&](Index r) {
    Rng gen = make_stream(seed, static_cast<std::uint64_t>(r));
    Matrix Xr = X.data();
    for (Index i = 0; i < Xr.rows(); ++i)
      if ((gen() >> 63) != 0) std::swap(Xr(i, l1), Xr(i, l2));
    reps[static_cast<std::size_t>(r)] = fit_scls(Y, CompositionMatrix::unchecked(std::move(Xr), X.names())).loss;
  });
  return finish(observed, std::move(reps), seed, StatisticKind::SL, 0);
}

std::vector<CoefficientMatrix> bootstrap_coefficients(const CompositionMatrix& Y,
                                                      const CompositionMatrix& X,
                                                      std::span<const std::vector<Index>> plans,
                                                      const Execution& exec) {
  require_same_n(Y, X);
  std::vector<CoefficientMatrix> out(plans.size());
  for_each_replicate(static_cast<Index>(plans.size()), exec, [&](Index b) {
    const auto& plan = plans[static_cast<std::size_t>(b)];
    out[static_cast<std::size_t>(b)] = fit_scls(Y.select_rows(plan), X.select_rows(plan)).B();
  });
  return out;
}

std::vector<CoefficientMatrix> bootstrap_coefficients(const CompositionMatrix& Y,
                                                      const CompositionMatrix& X, Index n_boot,
                                                      std::uint64_t seed, const Execution& exec) {
  if (n_boot < 1) throw Error(ErrorCode::InvalidArgument, "n_boot must be >= 1");
  std::vector<std::vector<Index>> plans(static_cast<std::size_t>(n_boot));
  for (Index b = 0; b < n_boot; ++b) {
    Rng gen = make_stream(seed, static_cast<std::uint64_t>(b));
    plans[static_cast<std::size_t>(b)] = resample_indices(Y.rows(), gen);
  }
  return bootstrap_coefficients(Y, X, plans, exec);
}

}  // namespace scls
