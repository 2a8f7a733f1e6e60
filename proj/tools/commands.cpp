#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "scls/io.hpp"
#include "scls/plot.hpp"
#include "scls/rng.hpp"
#include "scls/simulation.hpp"

namespace fs = std::filesystem;

namespace scls::cli {

namespace {

Error invalid(const std::string& what) { return Error(ErrorCode::InvalidArgument, what); }

/// Writes `content` to <out>/<name> (or stdout without --out) and records its hash.
void emit(Common& c, const std::string& name, const std::string& content) {
  c.manifest.add_output(name, content);
  if (c.out.empty()) {
    std::cout << content;
    return;
  }
  io::write_text((fs::path(c.out) / name).string(), content);
}

void finish(Common& c) {
  if (c.out.empty()) return;
  io::write_text((fs::path(c.out) / "manifest.json").string(), c.manifest.to_json().dump(2) + "\n");
}

void prepare_out_dir(const Common& c) {
  if (c.out.empty()) return;
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create '" + c.out + "': " + ec.message());
}

CompositionMatrix load(Common& c, const std::string& path, bool close, const std::string& group = {},
                       std::vector<std::string>* groups = nullptr) {
  c.manifest.add_input(path);
  return io::read_compositions(path, close, group, groups);
}

Model parse_model(const std::string& s) {
  if (s == "scls") return Model::SCLS;
  if (s == "tflr") return Model::TFLR;
  throw invalid("unknown model '" + s + "' (scls|tflr)");
}

std::string coefficients_csv(const SclsFit& fit) {
  std::ostringstream s;
  const bool multi = fit.coefficients.size() > 1;
  for (std::size_t m = 0; m < fit.coefficients.size(); ++m)
    io::write_coefficients_csv(s, fit.coefficients[m], multi ? "P" + std::to_string(m + 1) + "." : "", m == 0);
  return s.str();
}

std::string compositions_csv(const CompositionMatrix& Y) {
  std::ostringstream s;
  io::write_compositions_csv(s, Y);
  return s.str();
}

}  // namespace

Execution Common::exec() const {
  if (threads < 0) throw invalid("--threads must be >= 0");
  return Execution{threads > 0 ? threads : default_threads()};
}

std::uint64_t cell_seed(std::uint64_t seed, long long n, long long dr) {
  const auto key = (static_cast<std::uint64_t>(n) << 16) ^ static_cast<std::uint64_t>(dr);
  return splitmix64(seed ^ splitmix64(key));
}

void cmd_fit(const FitArgs& a, Common& c) {
  const Model model = parse_model(a.model);
  std::vector<std::string> groups;
  const CompositionMatrix Y = load(c, a.response, a.close, a.group_column, a.group_column.empty() ? nullptr : &groups);
  if (a.alpha == 0.0) throw Error(ErrorCode::AlphaZero, "--alpha 0 is the ilr limit; use a value != 0");
  if (!a.group_column.empty() && !a.lag1) throw invalid("--group-column requires --lag1");

  std::vector<CompositionMatrix> Xs;
  for (const auto& p : a.predictors) Xs.push_back(load(c, p, a.close));
  prepare_out_dir(c);

  std::string json;
  CompositionMatrix fitted;
  SclsFit fit;
  if (a.lag1) {
    if (!Xs.empty()) throw invalid("--lag1 uses the response as its own predictor; drop --predictor");
    if (model != Model::SCLS || a.alpha != 1.0 || a.weighted) throw invalid("--lag1 supports plain SCLS only");
    fit = fit_ar1(Y, groups);
  } else if (Xs.empty()) {
    throw invalid("at least one --predictor is required");
  } else if (Xs.size() == 1) {
    if (a.weighted) throw invalid("--weighted needs two or more predictors");
    if (model == Model::TFLR) {
      TflrOptions opt;
      opt.alpha = a.alpha;
      const TflrFit t = fit_tflr(Y, Xs.front(), opt);
      fit.coefficients = {t.coefficients};
      fit.weights = Vector::Ones(1);
      fit.alpha = t.alpha;
      emit(c, "coefficients.csv", coefficients_csv(fit));
      emit(c, "coefficients.json", io::to_json(t).dump(2) + "\n");
      emit(c, "fitted.csv", compositions_csv(t.fitted));
      finish(c);
      return;
    }
    fit = a.alpha == 1.0 ? fit_scls(Y, Xs.front()) : fit_alpha_scls(Y, Xs.front(), a.alpha);
  } else {
    if (model == Model::TFLR) throw invalid("--model tflr takes a single predictor");
    if (a.alpha != 1.0) throw invalid("--alpha applies to single-predictor fits");
    fit = a.weighted ? fit_weighted(Y, Xs) : fit_multi(Y, Xs);
  }
  emit(c, "coefficients.csv", coefficients_csv(fit));
  emit(c, "coefficients.json", io::to_json(fit).dump(2) + "\n");
  emit(c, "fitted.csv", compositions_csv(fit.fitted));
  finish(c);
}

void cmd_predict(const PredictArgs& a, Common& c) {
  c.manifest.add_input(a.coefficients);
  const auto j = io::read_json(a.coefficients);
  SclsFit fit;
  try {
    for (const auto& cj : j.at("coefficients")) fit.coefficients.push_back(io::coefficients_from_json(cj));
    fit.alpha = j.value("alpha", 1.0);
    if (j.contains("weights")) {
      const auto w = j["weights"].get<std::vector<double>>();
      fit.weights = Eigen::Map<const Vector>(w.data(), static_cast<Index>(w.size()));
    } else {
      fit.weights = Vector::Ones(static_cast<Index>(fit.coefficients.size()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("fit JSON: ") + e.what());
  }
  if (fit.coefficients.empty() || fit.weights.size() != static_cast<Index>(fit.coefficients.size()))
    throw Error(ErrorCode::ParseError, "fit JSON has inconsistent coefficients/weights");
  std::vector<CompositionMatrix> Xs;
  for (const auto& p : a.predictors) Xs.push_back(load(c, p, a.close));
  prepare_out_dir(c);
  emit(c, "predicted.csv", compositions_csv(predict(fit, Xs)));
  finish(c);
}

void cmd_test(const TestArgs& a, Common& c) {
  if (a.permutations < 1) throw invalid("--permutations must be >= 1");
  c.manifest.seed = a.seed;
  const auto Y = load(c, a.response, a.close);
  const auto X = load(c, a.predictor, a.close);
  const Execution exec = c.exec();
  TestResult t;
  if (a.kind == "independence") {
    t = test_independence(Y, X, a.permutations, a.seed, parse_model(a.model), exec);
  } else if (a.kind == "coefficients") {
    if (a.b0.empty()) throw invalid("test coefficients needs --b0 <csv>");
    c.manifest.add_input(a.b0);
    t = test_coefficients(Y, X, io::read_coefficients_csv(a.b0), a.permutations, a.seed, exec);
  } else if (a.kind == "amalgamation") {
    if (a.l1 < 1 || a.l2 < 1 || a.l1 > X.cols() || a.l2 > X.cols() || a.l1 == a.l2)
      throw Error(ErrorCode::IndexOutOfRange, "--l1/--l2 must be distinct predictor components in 1.." +
                                                  std::to_string(X.cols()));
    t = test_amalgamation(Y, X, a.l1 - 1, a.l2 - 1, a.permutations, a.seed, exec);
  } else {
    throw invalid("unknown test '" + a.kind + "' (independence|coefficients|amalgamation)");
  }
  const std::string out = io::to_json(t, a.replicates).dump(2) + "\n";
  c.manifest.add_output("test.json", out);
  std::cout << out;
  if (!c.out.empty()) {
    prepare_out_dir(c);
    io::write_text((fs::path(c.out) / "test.json").string(), out);
    finish(c);
  }
}

void cmd_simulate(const SimulateArgs& a, Common& c) {
  if (a.n.empty() || a.dr.empty()) throw invalid("--n and --dr need at least one value");
  for (auto n : a.n)
    if (n < 2) throw invalid("--n values must be >= 2");
  const bool needs_truth = a.kind == "power" || a.kind == "discrepancy";
  for (auto d : a.dr) {
    if (d < 2) throw invalid("--dr values must be >= 2");
    if (needs_truth && d != 3 && d != 5 && d != 7 && d != 10)
      throw invalid("--dr must be in {3, 5, 7, 10} for " + a.kind);
  }
  if (a.replicates < 1) throw invalid("--replicates must be >= 1");
  if (a.permutations < 1) throw invalid("--permutations must be >= 1");
  ModelSelection models{a.models.find("scls") != std::string::npos, a.models.find("tflr") != std::string::npos};
  if (!models.scls && !models.tflr) throw invalid("--models must name scls and/or tflr");
  c.manifest.seed = a.seed;
  const Execution exec = c.exec();
  prepare_out_dir(c);

  auto config = [&](long long n, long long dr) {
    SimConfig cfg;
    cfg.n = n;
    cfg.Dr = dr;
    cfg.replicates = a.replicates;
    cfg.R = a.permutations;
    cfg.seed = cell_seed(a.seed, n, dr);
    cfg.concentration = a.concentration;
    cfg.exec = exec;
    return cfg;
  };
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
  };

  std::ostringstream s;
  std::string name;
  if (a.kind == "type1" || a.kind == "power") {
    name = a.kind == "type1" ? "table1_type1.csv" : "table2_power.csv";
    s << "n,D_r,scls,tflr,replicates,permutations,tflr_missing\n";
    for (auto n : a.n) {
      for (auto dr : a.dr) {
        const SimConfig cfg = config(n, dr);
        const RateResult r = a.kind == "type1" ? run_type1(cfg, models) : run_power(cfg, ground_truth(dr), models);
        s << n << ',' << dr << ',' << (models.scls ? fmt(r.scls) : "NA") << ','
          << (models.tflr ? fmt(r.tflr) : "NA") << ',' << r.replicates << ',' << cfg.R << ','
          << r.tflr_missing << '\n';
      }
    }
  } else if (a.kind == "discrepancy") {
    name = "table3_discrepancy.csv";
    s << "n,D_r,kld_scls,kld_tflr,l1_scls,l1_tflr,l1_between,clamped_cells_scls,clamped_cells_tflr,"
         "kld_scls_cell,kld_tflr_cell,l1_scls_cell,l1_tflr_cell,max_em_iterations,em_all_converged,tflr_breakdowns,"
         "replicates\n";
    for (auto n : a.n) {
      for (auto dr : a.dr) {
        const DiscrepancyResult r = run_discrepancy(config(n, dr), ground_truth(dr));
        s << n << ',' << dr << ',' << fmt(r.kld_scls) << ',' << fmt(r.kld_tflr) << ',' << fmt(r.l1_scls) << ','
          << fmt(r.l1_tflr) << ',' << fmt(r.l1_between) << ',' << r.clamped_cells_scls << ','
          << r.clamped_cells_tflr << ',' << fmt(r.kld_scls_cell) << ',' << fmt(r.kld_tflr_cell) << ','
          << fmt(r.l1_scls_cell) << ',' << fmt(r.l1_tflr_cell) << ',' << r.max_em_iterations << ',' << (r.em_all_converged ? 1 : 0) << ','
          << r.tflr_breakdowns << ',' << r.replicates << '\n';
      }
    }
  } else if (a.kind == "benchmark") {
    name = "benchmark.csv";
    std::vector<Index> sizes(a.n.begin(), a.n.end()), drs(a.dr.begin(), a.dr.end());
    s << "n,D_r,t_scls_ms,t_tflr_ms,ratio\n";
    for (const auto& row : run_benchmark(sizes, drs, a.repetitions, a.seed))
      s << row.n << ',' << row.Dr << ',' << fmt(row.t_scls_ms) << ',' << fmt(row.t_tflr_ms) << ','
        << fmt(row.ratio) << '\n';
  } else {
    throw invalid("unknown simulation '" + a.kind + "' (type1|power|discrepancy|benchmark)");
  }
  emit(c, name, s.str());
  finish(c);
}

void cmd_bootstrap(const BootstrapArgs& a, Common& c) {
  if (a.count < 1) throw invalid("--count must be >= 1");
  c.manifest.seed = a.seed;
  const auto Y = load(c, a.response, a.close);
  const auto X = load(c, a.predictor, a.close);
  const auto boot = bootstrap_coefficients(Y, X, a.count, a.seed, c.exec());
  prepare_out_dir(c);
  emit(c, "bootstrap.json", io::bootstrap_to_json(boot, a.seed).dump() + "\n");
  finish(c);
}

void cmd_plot(const PlotArgs& a, Common& c) {
  std::string svg;
  if (a.kind == "ternary") {
    if (a.coefficients.empty()) throw invalid("plot ternary needs --coefficients <csv>");
    c.manifest.add_input(a.coefficients);
    const CoefficientMatrix B = io::read_coefficients_csv(a.coefficients);
    if (B.responses() != 3)
      throw Error(ErrorCode::ShapeMismatch, "ternary plot needs D_r = 3, got " + std::to_string(B.responses()));
    std::vector<ConfidenceEllipse> ellipses;
    if (!a.ellipses.empty()) {
      c.manifest.add_input(a.ellipses);
      const auto boot = io::bootstrap_from_json(io::read_json(a.ellipses));
      for (Index j = 0; j < B.predictors(); ++j) ellipses.push_back(confidence_ellipse(boot, j, a.level));
    }
    svg = plot::ternary_svg(B, ellipses);
  } else if (a.kind == "entropy") {
    svg = plot::entropy_svg(a.grid);
  } else {
    throw invalid("unknown plot '" + a.kind + "' (ternary|entropy)");
  }
  if (c.out.empty()) throw invalid("plot needs --out <svg>");
  c.manifest.add_output(fs::path(c.out).filename().string(), svg);
  const auto parent = fs::path(c.out).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  io::write_text(c.out, svg);
  io::write_text(c.out + ".manifest.json", c.manifest.to_json().dump(2) + "\n");
}

void cmd_crossval(const CrossvalArgs& a, Common& c) {
  CrossValOptions opt;
  opt.folds = a.folds;
  opt.repeats = a.repeats;
  if (a.metric == "kld") opt.metric = Metric::KLD;
  else if (a.metric == "jsd") opt.metric = Metric::JSD;
  else throw invalid("unknown metric '" + a.metric + "' (kld|jsd)");
  opt.model = parse_model(a.model);
  opt.alphas = a.alpha_grid;
  opt.seed = a.seed;
  c.manifest.seed = a.seed;
  const auto Y = load(c, a.response, a.close);
  const auto X = load(c, a.predictor, a.close);
  if (a.folds > Y.rows())
    throw Error(ErrorCode::TooFewRows, "--folds " + std::to_string(a.folds) + " exceeds the " +
                                           std::to_string(Y.rows()) + " rows");
  opt.exec = c.exec();
  const CrossValResult r = cross_validate(Y, X, opt);
  prepare_out_dir(c);

  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return std::string(buf);
  };
  std::ostringstream per, curve;
  per << "repeat,alpha," << a.metric << '\n';
  for (Index rep = 0; rep < r.values.rows(); ++rep)
    for (std::size_t k = 0; k < r.alphas.size(); ++k)
      per << rep + 1 << ',' << fmt(r.alphas[k]) << ',' << fmt(r.values(rep, static_cast<Index>(k))) << '\n';
  const Vector mean = r.curve();
  curve << "alpha,mean_" << a.metric << ",evaluations\n";
  for (std::size_t k = 0; k < r.alphas.size(); ++k)
    curve << fmt(r.alphas[k]) << ',' << fmt(mean[static_cast<Index>(k)]) << ',' << r.evaluations << '\n';
  emit(c, "crossval_repeats.csv", per.str());
  emit(c, "crossval_curve.csv", curve.str());
  finish(c);
}

}  // namespace scls::cli
