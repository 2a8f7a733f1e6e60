#include "scls/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

namespace scls {

namespace {

std::uint64_t test_seed(std::uint64_t seed, Index replicate) {
  return splitmix64(splitmix64(seed) ^ (0x5851f42d4c957f2dULL * static_cast<std::uint64_t>(replicate + 1)));
}

CompositionMatrix flat_dirichlet(Index n, Index D, Rng& gen) {
  const std::vector<double> ones(static_cast<std::size_t>(D), 1.0);
  Matrix X(n, D);
  for (Index i = 0; i < n; ++i) X.row(i) = dirichlet_draw(ones, gen).transpose();
  return CompositionMatrix::unchecked(std::move(X));
}

bool rejects(const TestResult& t) { return t.p_value <= kNominalLevel + 1e-12; }

RateResult run_rate(const SimConfig& cfg, ModelSelection models,
                    const std::function<SimData(Rng&)>& generate) {
  cfg.validate();
  const auto reps = static_cast<std::size_t>(cfg.replicates);
  std::vector<char> scls_reject(reps, 0), tflr_reject(reps, 0);
  std::vector<Index> missing(reps, 0);
  for_each_replicate(cfg.replicates, cfg.exec, [&](Index rep) {
    Rng gen = make_stream(cfg.seed, static_cast<std::uint64_t>(rep));
    const SimData data = generate(gen);
    const auto inner = test_seed(cfg.seed, rep);
    const auto idx = static_cast<std::size_t>(rep);
    if (models.scls)
      scls_reject[idx] = rejects(test_independence(data.Y, data.X, cfg.R, inner, Model::SCLS));
    if (models.tflr) {
      const auto t = test_independence(data.Y, data.X, cfg.R, inner, Model::TFLR);
      tflr_reject[idx] = rejects(t);
      missing[idx] = t.missing;
    }
  });
  RateResult out;
  out.replicates = cfg.replicates;
  const double denom = static_cast<double>(cfg.replicates);
  for (std::size_t i = 0; i < reps; ++i) {
    out.scls += scls_reject[i];
    out.tflr += tflr_reject[i];
    out.tflr_missing += missing[i];
  }
  out.scls /= denom;
  out.tflr /= denom;
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

void SimConfig::validate() const {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "n must be >= 2");
  if (Dr < 2 || Dp < 2) throw Error(ErrorCode::InvalidArgument, "component counts must be >= 2");
  if (replicates < 1) throw Error(ErrorCode::InvalidArgument, "replicates must be >= 1");
  if (R < 1) throw Error(ErrorCode::InvalidArgument, "permutation count R must be >= 1");
  if (!(concentration > 0.0)) throw Error(ErrorCode::InvalidArgument, "concentration must be > 0");
}

Matrix ground_truth_printed(Index Dr) {
  switch (Dr) {
    case 3:
      return (Matrix(3, 3) << 0.45, 0.00, 0.55,
                              0.20, 0.34, 0.46,
                              0.76, 0.01, 0.23).finished();
    case 5:
      return (Matrix(3, 5) << 0.31, 0.00, 0.04, 0.65, 0.01,
                              0.02, 0.01, 0.00, 0.48, 0.48,
                              0.28, 0.02, 0.64, 0.06, 0.00).finished();
    case 7:
      return (Matrix(3, 7) << 0.16, 0.20, 0.00, 0.11, 0.32, 0.12, 0.09,
                              0.63, 0.08, 0.00, 0.09, 0.10, 0.08, 0.01,
                              0.10, 0.24, 0.20, 0.12, 0.03, 0.01, 0.30).finished();
    case 10:
      return (Matrix(3, 10) << 0.25, 0.00, 0.01, 0.09, 0.01, 0.00, 0.24, 0.14, 0.00, 0.26,
                               0.44, 0.10, 0.18, 0.02, 0.01, 0.00, 0.09, 0.07, 0.00, 0.10,
                               0.34, 0.03, 0.00, 0.14, 0.17, 0.00, 0.04, 0.00, 0.19, 0.09).finished();
    default:
      throw Error(ErrorCode::InvalidArgument,
                  "no ground-truth matrix for D_r = " + std::to_string(Dr) + " (use 3, 5, 7 or 10)");
  }
}

CoefficientMatrix ground_truth(Index Dr) {
  Matrix B = ground_truth_printed(Dr);
  for (Index j = 0; j < B.rows(); ++j) B.row(j) /= B.row(j).sum();
  return CoefficientMatrix::from_matrix(std::move(B));
}

SimData gen_null_data(const SimConfig& cfg, Rng& gen) {
  std::uniform_real_distribution<double> unif(1.0, 5.0);
  std::vector<double> a(static_cast<std::size_t>(cfg.Dr));
  for (auto& v : a) v = unif(gen);
  Matrix Y(cfg.n, cfg.Dr);
  for (Index i = 0; i < cfg.n; ++i) Y.row(i) = dirichlet_draw(a, gen).transpose();
  CompositionMatrix X = flat_dirichlet(cfg.n, cfg.Dp, gen);
  return SimData{CompositionMatrix::unchecked(std::move(Y)), std::move(X)};
}

SimData gen_linked_data(const SimConfig& cfg, const CoefficientMatrix& B, Rng& gen) {
  if (B.predictors() != cfg.Dp || B.responses() != cfg.Dr)
    throw Error(ErrorCode::ShapeMismatch, "ground-truth B does not match (Dp, Dr)");
  CompositionMatrix X = flat_dirichlet(cfg.n, cfg.Dp, gen);
  Matrix Y(cfg.n, cfg.Dr);
  std::vector<double> params(static_cast<std::size_t>(cfg.Dr));
  for (Index i = 0; i < cfg.n; ++i) {
    const Vector mu = (X.data().row(i) * B.matrix()).transpose();
    for (Index k = 0; k < cfg.Dr; ++k) params[static_cast<std::size_t>(k)] = cfg.concentration * mu[k];
    Y.row(i) = dirichlet_draw(params, gen).transpose();
  }
  return SimData{CompositionMatrix::unchecked(std::move(Y)), std::move(X)};
}

RateResult run_type1(const SimConfig& cfg, ModelSelection models) {
  return run_rate(cfg, models, [&](Rng& gen) { return gen_null_data(cfg, gen); });
}

RateResult run_power(const SimConfig& cfg, const CoefficientMatrix& B, ModelSelection models) {
  return run_rate(cfg, models, [&](Rng& gen) { return gen_linked_data(cfg, B, gen); });
}

double kld_coefficients(const Matrix& estimate, const Matrix& truth, Index* clamped) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols())
    throw Error(ErrorCode::ShapeMismatch, "coefficient matrices differ in shape");
  double s = 0.0;
  Index count = 0;
  for (Index j = 0; j < estimate.rows(); ++j) {
    for (Index k = 0; k < estimate.cols(); ++k) {
      const double e = estimate(j, k);
      if (!(e > 0.0)) continue;
      double t = truth(j, k);
      if (t < kTruthClamp) {
        t = kTruthClamp;
        ++count;
      }
      s += e * std::log(e / t);
    }
  }
  if (clamped) *clamped = count;
  return s;
}

double kld_coefficients_supported(const Matrix& estimate, const Matrix& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols())
    throw Error(ErrorCode::ShapeMismatch, "coefficient matrices differ in shape");
  double s = 0.0;
  for (Index j = 0; j < estimate.rows(); ++j)
    for (Index k = 0; k < estimate.cols(); ++k)
      if (estimate(j, k) > 0.0 && truth(j, k) > 0.0) s += estimate(j, k) * std::log(estimate(j, k) / truth(j, k));
  return s;
}

double l1_coefficients(const Matrix& estimate, const Matrix& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols())
    throw Error(ErrorCode::ShapeMismatch, "coefficient matrices differ in shape");
  return (estimate - truth).cwiseAbs().sum();
}

DiscrepancyResult run_discrepancy(const SimConfig& cfg, const CoefficientMatrix& B) {
  cfg.validate();
  struct Row {
    double kld_s = 0, kld_t = 0, l1_s = 0, l1_t = 0, between = 0, kld_s_sup = 0, kld_t_sup = 0;
    Index clamp_s = 0, clamp_t = 0;
    int iterations = 0;
    bool converged = true;
    bool breakdown = false;
  };
  std::vector<Row> rows(static_cast<std::size_t>(cfg.replicates));
  for_each_replicate(cfg.replicates, cfg.exec, [&](Index rep) {
    Rng gen = make_stream(cfg.seed, static_cast<std::uint64_t>(rep));
    const SimData data = gen_linked_data(cfg, B, gen);
    const SclsFit scls = fit_scls(data.Y, data.X);
    Row& r = rows[static_cast<std::size_t>(rep)];
    r.kld_s = kld_coefficients(scls.B().matrix(), B.matrix(), &r.clamp_s);
    r.l1_s = l1_coefficients(scls.B().matrix(), B.matrix());
    r.kld_s_sup = kld_coefficients_supported(scls.B().matrix(), B.matrix());
    TflrOptions opt;
    opt.init = scls.B();
    TflrFit tflr;
    try {
      tflr = fit_tflr(data.Y, data.X, opt);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ZeroFittedCell) throw;
      r.breakdown = true;
      return;
    }
    r.kld_t = kld_coefficients(tflr.coefficients.matrix(), B.matrix(), &r.clamp_t);
    r.kld_t_sup = kld_coefficients_supported(tflr.coefficients.matrix(), B.matrix());
    r.l1_t = l1_coefficients(tflr.coefficients.matrix(), B.matrix());
    r.between = l1_coefficients(scls.B().matrix(), tflr.coefficients.matrix());
    r.iterations = tflr.iterations;
    r.converged = tflr.converged;
  });
  DiscrepancyResult out;
  out.replicates = cfg.replicates;
  for (const auto& r : rows) {
    out.kld_scls += r.kld_s;
    out.l1_scls += r.l1_s;
    out.kld_scls_cell += r.kld_s_sup;
    out.clamped_cells_scls += r.clamp_s;
    if (r.breakdown) {
      ++out.tflr_breakdowns;
      continue;
    }
    out.kld_tflr += r.kld_t;
    out.l1_tflr += r.l1_t;
    out.kld_tflr_cell += r.kld_t_sup;
    out.l1_between += r.between;
    out.clamped_cells_tflr += r.clamp_t;
    out.max_em_iterations = std::max(out.max_em_iterations, r.iterations);
    out.em_all_converged = out.em_all_converged && r.converged;
  }
  const double denom = static_cast<double>(cfg.replicates);
  const double computed = static_cast<double>(cfg.replicates - out.tflr_breakdowns);
  out.kld_scls /= denom;
  out.l1_scls /= denom;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.kld_tflr = computed > 0 ? out.kld_tflr / computed : nan;
  out.l1_tflr = computed > 0 ? out.l1_tflr / computed : nan;
  out.l1_between = computed > 0 ? out.l1_between / computed : nan;
  const double cells = static_cast<double>(B.predictors() * B.responses());
  out.kld_scls_cell /= denom * cells;
  out.kld_tflr_cell = computed > 0 ? out.kld_tflr_cell / (computed * cells) : nan;
  out.l1_scls_cell = out.l1_scls / cells;
  out.l1_tflr_cell = out.l1_tflr / cells;
  return out;
}

std::vector<BenchmarkRow> run_benchmark(std::span<const Index> sizes, std::span<const Index> drs,
                                        int repetitions, std::uint64_t seed) {
  if (repetitions < 1) throw Error(ErrorCode::InvalidArgument, "repetitions must be >= 1");
  using Clock = std::chrono::steady_clock;
  std::vector<BenchmarkRow> out;
  for (Index n : sizes) {
    for (Index Dr : drs) {
      SimConfig cfg;
      cfg.n = n;
      cfg.Dr = Dr;
      cfg.validate();
      Rng gen = make_stream(seed, static_cast<std::uint64_t>(n * 1000 + Dr));
      const SimData data = gen_null_data(cfg, gen);
      std::vector<double> ts, tt;
      for (int rep = 0; rep < repetitions; ++rep) {
        auto t0 = Clock::now();
        const SclsFit scls = fit_scls(data.Y, data.X);
        auto t1 = Clock::now();
        const TflrFit tflr = fit_tflr(data.Y, data.X);
        auto t2 = Clock::now();
        ts.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        tt.push_back(std::chrono::duration<double, std::milli>(t2 - t1).count());
        (void)scls;
        (void)tflr;
      }
      BenchmarkRow row{n, Dr, median(ts), median(tt), 0.0};
      row.ratio = row.t_tflr_ms / std::max(row.t_scls_ms, 1e-9);
      out.push_back(row);
    }
  }
  return out;
}

}  // namespace scls
