#include <doctest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "scls/simulation.hpp"
#include "scls/tflr.hpp"

using namespace scls;

namespace {

CompositionMatrix dirichlet_rows(Index n, const std::vector<double>& a, Rng& gen) {
  Matrix M(n, static_cast<Index>(a.size()));
  for (Index i = 0; i < n; ++i) M.row(i) = dirichlet_draw(a, gen).transpose();
  return CompositionMatrix::unchecked(std::move(M));
}

SimData linked_sample(Index n, Index Dr, std::uint64_t seed) {
  SimConfig cfg;
  cfg.n = n;
  cfg.Dr = Dr;
  Rng gen(seed);
  return gen_linked_data(cfg, ground_truth(Dr), gen);
}

// Stationarity of the KLD fit on the simplex: with g_jk = sum_i x_ij y_ik / yhat_ik,
// every row has g_jk = lambda_j on its support and g_jk <= lambda_j off it, with
// lambda_j = sum_k B_jk g_jk. Measured in complementarity form (B_jk |g_jk / lambda_j - 1|
// and the positive part of g_jk / lambda_j - 1) since cells heading to zero shrink
// only geometrically under EM. Cells where `free` is 0 are held at zero and skipped.
double kkt_violation(const Matrix& Y, const Matrix& X, const Matrix& B, const Matrix* free = nullptr) {
  const Matrix F = X * B;
  Matrix ratio = Matrix::Zero(Y.rows(), Y.cols());
  for (Index i = 0; i < Y.rows(); ++i)
    for (Index k = 0; k < Y.cols(); ++k)
      if (Y(i, k) > 0) ratio(i, k) = Y(i, k) / F(i, k);
  const Matrix g = X.transpose() * ratio;
  const Vector lambda = (B.cwiseProduct(g)).rowwise().sum();
  double worst = 0.0;
  for (Index j = 0; j < B.rows(); ++j)
    for (Index k = 0; k < B.cols(); ++k) {
      if (free && (*free)(j, k) == 0.0) continue;
      const double rel = g(j, k) / lambda[j] - 1.0;
      worst = std::max({worst, B(j, k) * std::abs(rel), std::max(0.0, rel)});
    }
  return worst;
}

}  // namespace

TEST_CASE("objective trace never increases across random fits") {
  for (std::uint64_t s = 0; s < 100; ++s) {
    Rng gen(500 + s);
    const auto X = dirichlet_rows(40, {1, 1, 1}, gen);
    const auto Y = dirichlet_rows(40, {2, 3, 1.5, 4}, gen);
    TflrOptions opt;
    opt.record_trace = true;
    const auto fit = fit_tflr(Y, X, opt);
    REQUIRE(fit.trace.size() >= 1);
    for (std::size_t t = 1; t < fit.trace.size(); ++t)
      REQUIRE(fit.trace[t] <= fit.trace[t - 1]);
  }
}

TEST_CASE("plain EM trace is monotone too") {
  Rng gen(9);
  const auto X = dirichlet_rows(60, {1, 1, 1}, gen);
  const auto Y = dirichlet_rows(60, {1, 2, 3}, gen);
  TflrOptions opt;
  opt.record_trace = true;
  opt.accelerate = false;
  const auto fit = fit_tflr(Y, X, opt);
  for (std::size_t t = 1; t < fit.trace.size(); ++t) CHECK(fit.trace[t] <= fit.trace[t - 1]);
}

TEST_CASE("Y = X started at the identity is a fixed point with zero divergence") {
  Rng gen(3);
  const auto X = dirichlet_rows(30, {2, 2, 2}, gen);
  TflrOptions opt;
  opt.init = CoefficientMatrix::from_matrix(Matrix::Identity(3, 3));
  const auto fit = fit_tflr(X, X, opt);
  CHECK(fit.kld == doctest::Approx(0.0).epsilon(1e-12));
  CHECK((fit.coefficients.matrix() - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(fit.converged);
}

TEST_CASE("a start with a zero fitted cell under a positive response throws ZeroFittedCell") {
  // Rows use only the first two predictor parts; the start gives those parts
  // no mass in the third response component.
  Matrix Xm(4, 4);
  Xm << 0.6, 0.4, 0, 0,
        0.3, 0.7, 0, 0,
        0.5, 0.5, 0, 0,
        0.25, 0.25, 0.25, 0.25;
  Matrix Ym(4, 3);
  Ym << 0.2, 0.3, 0.5,
        0.4, 0.4, 0.2,
        0.3, 0.3, 0.4,
        0.3, 0.3, 0.4;
  Matrix B0(4, 3);
  B0 << 0.5, 0.5, 0,
        0.4, 0.6, 0,
        0.2, 0.2, 0.6,
        0.3, 0.3, 0.4;
  TflrOptions opt;
  opt.init = CoefficientMatrix::from_matrix(B0);
  try {
    (void)fit_tflr(CompositionMatrix::from_rows(Ym), CompositionMatrix::from_rows(Xm), opt);
    FAIL("expected ZeroFittedCell");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroFittedCell);
  }
  CHECK_THROWS_AS(tflr_objective(Ym, Xm, B0), Error);
}

TEST_CASE("reported divergence matches a direct evaluation of the objective") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto d = linked_sample(200, 5, 40 + s);
    const auto fit = fit_tflr(d.Y, d.X);
    const Matrix& B = fit.coefficients.matrix();
    CHECK(fit.kld == doctest::Approx(oracle::kld_objective(d.Y.data(), d.X.data(), B)).epsilon(1e-10));
    CHECK(fit.kld == doctest::Approx(kld(d.Y, fit.fitted)).epsilon(1e-10));
    for (Index j = 0; j < B.rows(); ++j) CHECK(B.row(j).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(B.minCoeff() >= 0.0);
  }
}

TEST_CASE("from a strictly positive start the fit is the global optimum") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto d = linked_sample(300, 3, 70 + s);
    TflrOptions opt;
    opt.init = CoefficientMatrix::from_matrix(Matrix::Constant(3, 3, 1.0 / 3));
    opt.tol = 1e-13;
    opt.max_iter = 50000;
    const auto fit = fit_tflr(d.Y, d.X, opt);
    REQUIRE(fit.converged);
    const Matrix& B = fit.coefficients.matrix();
    CHECK(kkt_violation(d.Y.data(), d.X.data(), B) < 1e-3);

    Rng gen(s);
    std::uniform_real_distribution<double> t(0.0, 0.05);
    for (int trial = 0; trial < 50; ++trial) {
      const Matrix other = dirichlet_rows(3, {1, 1, 1}, gen).data();
      const double w = t(gen);
      const Matrix candidate = (1 - w) * B + w * other;
      CHECK(oracle::kld_objective(d.Y.data(), d.X.data(), candidate) >= fit.kld - 1e-9);
    }
  }
}

TEST_CASE("zero cells of the start stay zero and the fit is optimal on the remaining support") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto d = linked_sample(300, 3, 70 + s);
    const Matrix start = fit_scls(d.Y, d.X).B().matrix();
    TflrOptions opt;
    opt.tol = 1e-13;
    opt.max_iter = 50000;
    const auto fit = fit_tflr(d.Y, d.X, opt);
    REQUIRE(fit.converged);
    const Matrix& B = fit.coefficients.matrix();
    const Matrix mask = (start.array() >= 1e-12).cast<double>();
    CHECK((B.array() * (1 - mask.array())).abs().maxCoeff() == 0.0);
    CHECK(kkt_violation(d.Y.data(), d.X.data(), B, &mask) < 1e-3);

    Rng gen(s);
    std::uniform_real_distribution<double> t(0.0, 0.05);
    for (int trial = 0; trial < 50; ++trial) {
      Matrix other = dirichlet_rows(3, {1, 1, 1}, gen).data().cwiseProduct(mask);
      for (Index j = 0; j < 3; ++j) other.row(j) /= other.row(j).sum();
      const double w = t(gen);
      const Matrix candidate = (1 - w) * B + w * other;
      CHECK(oracle::kld_objective(d.Y.data(), d.X.data(), candidate) >= fit.kld - 1e-9);
    }
  }
}

TEST_CASE("accelerated and plain EM reach the same optimum") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto d = linked_sample(150, 3, 90 + s);
    TflrOptions fast, plain;
    fast.tol = plain.tol = 1e-14;
    fast.max_iter = plain.max_iter = 100000;
    plain.accelerate = false;
    const auto a = fit_tflr(d.Y, d.X, fast);
    const auto b = fit_tflr(d.Y, d.X, plain);
    CHECK(a.kld == doctest::Approx(b.kld).epsilon(1e-8));
    CHECK((a.coefficients.matrix() - b.coefficients.matrix()).cwiseAbs().maxCoeff() < 1e-3);
    CHECK(a.iterations <= b.iterations);
  }
}

TEST_CASE("SCLS and KLD estimates draw together as n grows") {
  auto mean_gap = [](Index n) {
    double s = 0.0;
    for (std::uint64_t r = 0; r < 10; ++r) {
      const auto d = linked_sample(n, 3, 1000 + r);
      const auto scls = fit_scls(d.Y, d.X);
      TflrOptions opt;
      opt.init = scls.B();
      s += l1_coefficients(fit_tflr(d.Y, d.X, opt).coefficients.matrix(), scls.B().matrix());
    }
    return s / 10;
  };
  const double small = mean_gap(50), large = mean_gap(2000);
  CHECK(large < small);
  CHECK(large < 0.1);
}

TEST_CASE("the power parameter is applied to the response before fitting") {
  const auto d = linked_sample(100, 3, 5);
  TflrOptions opt;
  opt.alpha = 0.5;
  const auto a = fit_tflr(d.Y, d.X, opt);
  TflrOptions plain;
  const auto b = fit_tflr(power_transform(d.Y, 0.5), d.X, plain);
  CHECK(a.kld == doctest::Approx(b.kld).epsilon(1e-10));
  CHECK(a.alpha == 0.5);
}

TEST_CASE("requesting convergence turns an iteration cap into NoConvergence") {
  const auto d = linked_sample(100, 3, 6);
  TflrOptions opt;
  opt.max_iter = 1;
  opt.tol = 0.0;
  const auto fit = fit_tflr(d.Y, d.X, opt);
  CHECK_FALSE(fit.converged);
  opt.require_convergence = true;
  try {
    (void)fit_tflr(d.Y, d.X, opt);
    FAIL("expected NoConvergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoConvergence);
  }
}

TEST_CASE("shape errors") {
  Rng gen(1);
  const auto X = dirichlet_rows(10, {1, 1, 1}, gen);
  const auto Y = dirichlet_rows(9, {1, 1, 1}, gen);
  CHECK_THROWS_AS(fit_tflr(Y, X), Error);
  TflrOptions opt;
  opt.init = CoefficientMatrix::from_matrix(Matrix::Identity(2, 2));
  CHECK_THROWS_AS(fit_tflr(dirichlet_rows(10, {1, 1, 1}, gen), X, opt), Error);
}
