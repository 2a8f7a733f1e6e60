// Acceptance run: one PASS/FAIL line per criterion.
//
// Usage: acceptance [--expect-red N]... [--only N]...
// The exit status is 0 when every criterion passes except those named with
// --expect-red (which are still run and reported honestly).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli_support.hpp"
#include "oracles.hpp"
#include "scls/inference.hpp"
#include "scls/regression.hpp"
#include "scls/simulation.hpp"
#include "scls/tflr.hpp"

using namespace scls;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

CompositionMatrix dirichlet_rows(Index n, Index D, double a, Rng& gen) {
  const std::vector<double> p(static_cast<std::size_t>(D), a);
  Matrix M(n, D);
  for (Index i = 0; i < n; ++i) M.row(i) = dirichlet_draw(p, gen).transpose();
  return CompositionMatrix::unchecked(std::move(M));
}

SimConfig sim(Index n, Index Dr, Index replicates, Index R = 199, std::uint64_t seed = 1) {
  SimConfig cfg;
  cfg.n = n;
  cfg.Dr = Dr;
  cfg.replicates = replicates;
  cfg.R = R;
  cfg.seed = seed;
  cfg.exec.threads = default_threads();
  return cfg;
}

// 1. SCLS against an accelerated projected-gradient oracle.
Outcome qp_oracle() {
  Rng gen(2024);
  double worst_loss = 0.0, worst_b = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Index Dp = 2 + t % 3, Dr = 2 + (t / 3) % 3;
    const auto X = dirichlet_rows(30, Dp, 1.0, gen);
    const auto Y = dirichlet_rows(30, Dr, 2.0, gen);
    const auto fit = fit_scls(Y, X);
    const auto pg = oracle::projected_gradient(Y.data(), X.data(), 1000000, 1e-15);
    worst_loss = std::max(worst_loss, std::abs(fit.loss - pg.loss));
    worst_b = std::max(worst_b, (fit.B().matrix() - pg.B).cwiseAbs().maxCoeff());
  }
  return {worst_loss <= 1e-6 && worst_b <= 1e-4,
          "max |SL - SL_oracle| = " + fmt("%.2e", worst_loss) + ", max |B - B_oracle| = " + fmt("%.2e", worst_b)};
}

// 2. QP layout for D_r = D_p = 3, and the redundant upper-bound block.
Outcome qp_structure() {
  Rng gen(7);
  const auto X = dirichlet_rows(25, 3, 1.0, gen);
  const auto Y = dirichlet_rows(25, 3, 2.0, gen);
  const auto qp = assemble_qp(Y, X);
  // b stacks B column by column: b[3k + j] = B(j, k).
  Matrix A = Matrix::Zero(12, 9);
  for (Index j = 0; j < 3; ++j)
    for (Index k = 0; k < 3; ++k) A(j, 3 * k + j) = 1.0;
  A.bottomRows(9).setIdentity();
  Vector b0 = Vector::Zero(12);
  b0.head(3).setOnes();
  const Matrix G = X.data().transpose() * X.data();
  Matrix D = Matrix::Zero(9, 9);
  for (Index k = 0; k < 3; ++k) D.block(3 * k, 3 * k, 3, 3) = G;
  const Matrix C = X.data().transpose() * Y.data();
  const bool layout = qp.n_equalities == 3 && qp.Amat_T == A && qp.b0 == b0 && qp.Dmat == D &&
                      qp.dvec == Eigen::Map<const Vector>(C.data(), 9);

  double gap = 0.0;
  Rng g2(8);
  for (int t = 0; t < 50; ++t) {
    const auto Xt = dirichlet_rows(30, 3, 1.0, g2);
    const auto Yt = dirichlet_rows(30, 3, 2.0, g2);
    const auto a = qp::solve_qp(assemble_qp(Yt, Xt));
    const auto b = qp::solve_qp(assemble_qp_with_upper_bounds(Yt, Xt));
    if (!a.optimal() || !b.optimal()) return {false, "solver did not reach an optimum"};
    gap = std::max(gap, (a.b - b.b).cwiseAbs().maxCoeff());
  }
  return {layout && gap < 1e-10,
          std::string("layout ") + (layout ? "exact" : "MISMATCH") + ", upper-bound block changes b by at most " +
              fmt("%.1e", gap)};
}

// 3. Expected change of the response when one predictor part gains 0.1 from another.
Outcome interpretation() {
  Matrix B(4, 3);
  B << 0.20, 0.40, 0.40,
       0.10, 0.30, 0.60,
       0.30, 0.35, 0.35,
       0.50, 0.40, 0.30;
  const Vector d = interpret_delta(CoefficientMatrix::unchecked(B), 0, 1, 0.1);
  const Vector expected = (Vector(3) << 0.01, 0.01, -0.02).finished();
  const double err = (d - expected).cwiseAbs().maxCoeff();
  std::ostringstream s;
  s << "delta = (" << d[0] << ", " << d[1] << ", " << d[2] << "), max error " << fmt("%.1e", err);
  return {err <= 1e-15, s.str()};
}

// 4. Size of the independence test.
Outcome type1() {
  const auto r = run_type1(sim(100, 3, 500), {true, false});
  return {r.scls >= 0.025 && r.scls <= 0.075, "SCLS rejection rate " + fmt("%.3f", r.scls) + " over 500 replicates"};
}

// 5. Power against the linked design.
Outcome power() {
  const auto r = run_power(sim(100, 3, 200), ground_truth(3));
  return {r.scls >= 0.99 && r.tflr >= 0.99,
          "power SCLS " + fmt("%.3f", r.scls) + ", TFLR " + fmt("%.3f", r.tflr) + " over 200 replicates"};
}

// 6. Coefficient discrepancy at n = 500, on the per-cell scale of the published table.
Outcome discrepancy() {
  const auto r = run_discrepancy(sim(500, 3, 200), ground_truth(3));
  const bool scls_ok = r.l1_scls_cell >= 0.010 && r.l1_scls_cell <= 0.026 && r.kld_scls_cell <= 0.002;
  const bool l1_ok = r.l1_tflr_cell <= 1.15 * r.l1_scls_cell;
  const bool kld_ok = r.kld_tflr_cell <= 1.15 * r.kld_scls_cell;
  std::string d = "SCLS L1 " + fmt("%.5f", r.l1_scls_cell) + " KLD " + fmt("%.6f", r.kld_scls_cell) + "; TFLR L1 " +
                  fmt("%.5f", r.l1_tflr_cell) + " KLD " + fmt("%.6f", r.kld_tflr_cell) + " (limit " +
                  fmt("%.6f", 1.15 * r.kld_scls_cell) + ")";
  if (!kld_ok) d += "; TFLR KLD above 1.15 x SCLS";
  if (r.tflr_breakdowns) d += "; " + std::to_string(r.tflr_breakdowns) + " TFLR breakdowns";
  return {scls_ok && l1_ok && kld_ok, d};
}

// 7. Discrepancy shrinks with n.
Outcome monotone() {
  bool ok = true;
  std::string d;
  for (Index Dr : {3, 5}) {
    const auto small = run_discrepancy(sim(50, Dr, 100), ground_truth(Dr));
    const auto large = run_discrepancy(sim(500, Dr, 100), ground_truth(Dr));
    ok = ok && large.l1_scls < small.l1_scls && large.l1_tflr < small.l1_tflr;
    d += "D_r=" + std::to_string(Dr) + ": SCLS " + fmt("%.4f", small.l1_scls) + " -> " + fmt("%.4f", large.l1_scls) +
         ", TFLR " + fmt("%.4f", small.l1_tflr) + " -> " + fmt("%.4f", large.l1_tflr) + "; ";
  }
  d += "(L1, n = 50 -> 500)";
  return {ok, d};
}

// 8. The real data set is not available here; recovery of the published SCLS
// estimate from synthetic data drawn through it stands in for it.
Outcome recovery() {
  Matrix B(3, 3);
  B << 0.9014, 0.0559, 0.0428,
       0.0,    0.9409, 0.0591,
       0.0,    0.0737, 0.9263;
  for (Index j = 0; j < 3; ++j) B.row(j) /= B.row(j).sum();
  SimConfig cfg = sim(500, 3, 1);
  Rng gen(31);
  const auto d = gen_linked_data(cfg, CoefficientMatrix::from_matrix(B), gen);
  const auto s = fit_scls(d.Y, d.X);
  const auto t = fit_tflr(d.Y, d.X);
  const double es = (s.B().matrix() - B).cwiseAbs().maxCoeff();
  const double et = (t.coefficients.matrix() - B).cwiseAbs().maxCoeff();
  return {es <= 0.03 && et <= 0.03, "substitute check (data set not vendored): max error SCLS " + fmt("%.4f", es) +
                                        ", TFLR " + fmt("%.4f", et)};
}

// 9. EM monotonicity and convergence.
Outcome em_properties() {
  Rng gen(99);
  long steps = 0;
  bool monotone = true;
  for (int t = 0; t < 100; ++t) {
    const auto X = dirichlet_rows(60, 3, 1.0, gen);
    const auto Y = dirichlet_rows(60, 3 + t % 4, 2.0, gen);
    TflrOptions opt;
    opt.record_trace = true;
    const auto fit = fit_tflr(Y, X, opt);
    for (std::size_t k = 1; k < fit.trace.size(); ++k, ++steps)
      if (fit.trace[k] > fit.trace[k - 1]) monotone = false;
  }
  bool converged = true;
  int worst = 0;
  Index breakdowns = 0, cells = 0;
  for (Index n : {50, 100, 200, 300, 500})
    for (Index Dr : {3, 5, 7, 10}) {
      const auto r = run_discrepancy(sim(n, Dr, 200, 199, 1000 + static_cast<std::uint64_t>(n) + Dr), ground_truth(Dr));
      converged = converged && r.em_all_converged;
      worst = std::max(worst, r.max_em_iterations);
      breakdowns += r.tflr_breakdowns;
      ++cells;
    }
  std::string d = std::string("trace ") + (monotone ? "monotone" : "NOT monotone") + " over " +
                  std::to_string(steps) + " steps of 100 fits; " + std::to_string(cells) +
                  " grid cells x 200 replicates " + (converged ? "all converged" : "NOT all converged") +
                  ", max " + std::to_string(worst) + " EM evaluations";
  if (breakdowns) d += ", " + std::to_string(breakdowns) + " breakdowns excluded";
  return {monotone && converged && worst <= 5000, d};
}

// 10. Log-ratio and power transforms.
Outcome transforms() {
  Rng gen(5);
  double alr_err = 0, ilr_err = 0, pow_err = 0, limit_err = 0, helmert_err = 0;
  for (int t = 0; t < 1000; ++t) {
    const Index D = 2 + t % 6;
    const auto y = Composition::from_values(dirichlet_draw(std::vector<double>(static_cast<std::size_t>(D), 1.5), gen));
    if (!y.strictly_positive()) continue;
    alr_err = std::max(alr_err, (alr_inverse(alr(y, t % D), t % D).values() - y.values()).cwiseAbs().maxCoeff());
    // ilr inverse through the Helmert basis: y = closure(exp(H' z)).
    const Matrix H = helmert_submatrix(D).matrix();
    const Vector back = (H.transpose() * ilr(y)).array().exp();
    ilr_err = std::max(ilr_err, (back / back.sum() - y.values()).cwiseAbs().maxCoeff());
    for (double a : {0.5, 2.0, -1.0}) {
      const auto w = power_transform(y, a);
      pow_err = std::max(pow_err, (power_transform_inverse(w, a).values() - y.values()).cwiseAbs().maxCoeff());
    }
    limit_err = std::max(limit_err, (alpha_transform(y, 1e-6) - ilr(y)).cwiseAbs().maxCoeff());
    helmert_err = std::max({helmert_err, (H * H.transpose() - Matrix::Identity(D - 1, D - 1)).cwiseAbs().maxCoeff(),
                            (H * Vector::Ones(D)).cwiseAbs().maxCoeff()});
  }
  bool bitwise = true;
  for (int t = 0; t < 20; ++t) {
    const auto X = dirichlet_rows(40, 3, 1.0, gen);
    const auto Y = dirichlet_rows(40, 4, 2.0, gen);
    const auto a = fit_scls(Y, X), b = fit_alpha_scls(Y, X, 1.0);
    bitwise = bitwise && a.B().matrix() == b.B().matrix() && a.loss == b.loss && a.fitted.data() == b.fitted.data();
  }
  const bool ok = alr_err <= 1e-10 && ilr_err <= 1e-10 && pow_err <= 1e-10 && limit_err <= 1e-4 &&
                  helmert_err <= 1e-12 && bitwise;
  return {ok, "round trips alr " + fmt("%.1e", alr_err) + ", ilr " + fmt("%.1e", ilr_err) + ", power " +
                  fmt("%.1e", pow_err) + "; alpha->0 gap " + fmt("%.1e", limit_err) + "; Helmert " +
                  fmt("%.1e", helmert_err) + "; alpha = 1 " + (bitwise ? "bitwise identical" : "DIFFERS")};
}

// 11. Replicate statistics reusing one factorization.
Outcome fast_path() {
  SimConfig cfg = sim(1000, 3, 1);
  Rng gen(17);
  const auto d = gen_null_data(cfg, gen);
  std::vector<std::vector<Index>> perms;
  for (int r = 0; r < 200; ++r) perms.push_back(random_permutation(1000, gen));
  const std::span<const std::vector<Index>> ten(perms.data(), 10);
  const auto fast10 = fast_sl_replicates(d.Y, d.X, ten);
  const auto naive10 = naive_sl_replicates(d.Y, d.X, ten);
  double err = 0;
  for (std::size_t r = 0; r < 10; ++r) err = std::max(err, std::abs(fast10[r] - naive10[r]));

  // Both paths run in milliseconds, so each sample repeats the call 10 times;
  // samples alternate between the paths and the fastest of 7 is kept.
  auto sample = [&](auto&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int k = 0; k < 10; ++k) f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 10.0;
  };
  const Execution serial{1};
  double tf = 1e300, tn = 1e300;
  for (int rep = 0; rep < 7; ++rep) {
    tf = std::min(tf, sample([&] { (void)fast_sl_replicates(d.Y, d.X, perms, serial); }));
    tn = std::min(tn, sample([&] { (void)naive_sl_replicates(d.Y, d.X, perms, serial); }));
  }
  return {err <= 1e-8 && tn >= 2.0 * tf, "max |fast - naive| = " + fmt("%.1e", err) + "; n = 1000, R = 200: naive " +
                                             fmt("%.3f", tn) + " s, fast " + fmt("%.3f", tf) + " s, speedup " +
                                             fmt("%.1f", tn / tf) + "x"};
}

// 12. Every seeded CLI invocation is reproducible across runs and thread counts.
Outcome cli_determinism() {
  ::setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
  cli::Workspace ws("acceptance");
  const auto d = cli::linked(100, 3, 5);
  const auto y = ws.write("y.csv", d.Y), x = ws.write("x.csv", d.X);
  SimConfig cfg = sim(100, 3, 1);
  Rng gen(6);
  const auto x2 = ws.write("x2.csv", gen_null_data(cfg, gen).X);
  std::ostringstream b;
  io::write_coefficients_csv(b, ground_truth(3));
  const auto b0 = ws.write_text("b0.csv", b.str());
  const std::string yx = " --response " + y + " --predictor " + x;
  if (ws.run("fit" + yx + " --out " + cli::quote(ws.path("ref").string())).exit_code != 0 ||
      ws.run("bootstrap" + yx + " --count 50 --seed 3 --out " + cli::quote(ws.path("boot").string())).exit_code != 0)
    return {false, "reference runs failed"};
  const auto coef = cli::quote(ws.path("ref/coefficients.csv").string());
  const auto coef_json = cli::quote(ws.path("ref/coefficients.json").string());
  const auto boot = cli::quote(ws.path("boot/bootstrap.json").string());

  const std::vector<std::pair<std::string, std::string>> runs{
      {"fit" + yx, ""},
      {"fit" + yx + " --model tflr", ""},
      {"fit" + yx + " --alpha 0.5", ""},
      {"fit" + yx + " --predictor " + x2 + " --weighted", ""},
      {"predict --coefficients " + coef_json + " --predictor " + x, ""},
      {"test independence" + yx + " --permutations 99 --seed 1", ""},
      {"test independence" + yx + " --permutations 49 --seed 1 --model tflr", ""},
      {"test coefficients" + yx + " --b0 " + b0 + " --permutations 49 --seed 2", ""},
      {"test amalgamation" + yx + " --l1 1 --l2 3 --permutations 49 --seed 2", ""},
      {"simulate type1 --n 50 --dr 3,5 --replicates 10 --permutations 49 --seed 4", ""},
      {"simulate power --n 50 --dr 3 --replicates 10 --permutations 49 --seed 4", ""},
      {"simulate discrepancy --n 50,100 --dr 3 --replicates 10 --seed 4", ""},
      {"bootstrap" + yx + " --count 40 --seed 9", ""},
      {"crossval" + yx + " --folds 10 --repeats 3 --alpha-grid 0.25,0.5,1 --seed 5", ""},
      {"crossval" + yx + " --folds 5 --repeats 2 --metric jsd --model tflr --seed 5", ""},
      {"plot ternary --coefficients " + coef + " --ellipses " + boot, "ternary.svg"},
      {"plot entropy", "entropy.svg"},
  };
  for (const auto& [args, file] : runs) {
    const auto problem = cli::reproducibility_problem(ws, args, file);
    if (!problem.empty()) return {false, args.substr(0, args.find(' ')) + ": " + problem};
  }
  return {true, std::to_string(runs.size()) + " invocations byte-identical across two runs and --threads 1 vs 8"};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expect_red, only;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--expect-red") expect_red.insert(std::atoi(argv[i + 1]));
    else if (flag == "--only") only.insert(std::atoi(argv[i + 1]));
  }

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"QP oracle equivalence", qp_oracle},
      {"QP structure", qp_structure},
      {"interpretation arithmetic", interpretation},
      {"type I error", type1},
      {"power", power},
      {"coefficient discrepancy", discrepancy},
      {"monotone discrepancy", monotone},
      {"regression recovery", recovery},
      {"EM properties", em_properties},
      {"transformation suite", transforms},
      {"fast permutation path", fast_path},
      {"CLI determinism", cli_determinism},
  };

  int unexpected = 0;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    const int id = static_cast<int>(c + 1);
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[c].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2d %s  %s: %s [%.1f s]%s\n", id, o.pass ? "PASS" : "FAIL", criteria[c].first,
                o.detail.c_str(), secs, !o.pass && expect_red.count(id) ? " (known red)" : "");
    std::fflush(stdout);
    if (!o.pass && !expect_red.count(id)) ++unexpected;
  }
  return unexpected == 0 ? 0 : 1;
}
