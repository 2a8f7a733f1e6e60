// Command-line front end: fit, predict, test, simulate, bootstrap, plot and
// crossval over CSV/JSON files. Exit codes: 0 success, 2 usage or validation
// error, 3 numerical failure.

#include <algorithm>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "scls/io.hpp"

namespace {

using namespace scls::cli;

std::vector<std::string> recorded_arguments(const std::vector<std::string>& args) {
  std::vector<std::string> kept;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--out" || a == "--threads") {
      ++i;
      continue;
    }
    if (a.rfind("--out=", 0) == 0 || a.rfind("--threads=", 0) == 0) continue;
    kept.push_back(a);
  }
  return kept;
}

int fail(const std::string& code, const std::string& detail, int status) {
  std::cerr << "ERROR " << code << ": " << detail << '\n';
  return status;
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Simplicial-simplicial regression by constrained least squares"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", common.out, "Output directory (file for plot)");
    sub->add_option("--threads", common.threads, "Worker threads (default: SCLS_THREADS or all cores)");
  };

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit SCLS, alpha-SCLS, multi-predictor, AR(1) or TFLR");
  fit_cmd->add_option("--response", fit.response, "Response composition CSV")->required();
  fit_cmd->add_option("--predictor", fit.predictors, "Predictor composition CSV (repeatable)");
  fit_cmd->add_option("--alpha", fit.alpha, "Power-transformation parameter");
  fit_cmd->add_flag("--weighted", fit.weighted, "Estimate predictor weights (two or more predictors)");
  fit_cmd->add_option("--model", fit.model, "scls or tflr");
  fit_cmd->add_flag("--lag1", fit.lag1, "Regress each response row on the previous one");
  fit_cmd->add_option("--group-column", fit.group_column, "Column naming independent series for --lag1");
  fit_cmd->add_flag("--close", fit.close, "Close rows instead of rejecting non-unit sums");
  add_common(fit_cmd);

  PredictArgs pred;
  auto* pred_cmd = app.add_subcommand("predict", "Predict responses from a saved fit");
  pred_cmd->add_option("--coefficients", pred.coefficients, "coefficients.json written by fit")->required();
  pred_cmd->add_option("--predictor", pred.predictors, "Predictor composition CSV (repeatable)")->required();
  pred_cmd->add_flag("--close", pred.close, "Close rows instead of rejecting non-unit sums");
  add_common(pred_cmd);

  TestArgs test;
  auto* test_cmd = app.add_subcommand("test", "Permutation tests");
  test_cmd->add_option("kind", test.kind, "independence|coefficients|amalgamation")->required();
  test_cmd->add_option("--response", test.response)->required();
  test_cmd->add_option("--predictor", test.predictor)->required();
  test_cmd->add_option("--b0", test.b0, "Null coefficient CSV (coefficients test)");
  test_cmd->add_option("--l1", test.l1, "First predictor component, 1-based (amalgamation)");
  test_cmd->add_option("--l2", test.l2, "Second predictor component, 1-based (amalgamation)");
  test_cmd->add_option("--permutations", test.permutations, "Number of permutations R");
  test_cmd->add_option("--seed", test.seed);
  test_cmd->add_option("--model", test.model, "scls or tflr (independence)");
  test_cmd->add_flag("--replicates", test.replicates, "Include replicate statistics in the JSON");
  test_cmd->add_flag("--close", test.close);
  add_common(test_cmd);

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte-Carlo studies");
  sim_cmd->add_option("kind", sim.kind, "type1|power|discrepancy|benchmark")->required();
  sim_cmd->add_option("--n", sim.n, "Sample sizes")->delimiter(',');
  sim_cmd->add_option("--dr", sim.dr, "Response component counts")->delimiter(',');
  sim_cmd->add_option("--replicates", sim.replicates);
  sim_cmd->add_option("--permutations", sim.permutations);
  sim_cmd->add_option("--seed", sim.seed);
  sim_cmd->add_option("--models", sim.models, "scls,tflr");
  sim_cmd->add_option("--concentration", sim.concentration, "Dirichlet scale of linked responses");
  sim_cmd->add_option("--repetitions", sim.repetitions, "Timing repetitions (benchmark)");
  add_common(sim_cmd);

  BootstrapArgs boot;
  auto* boot_cmd = app.add_subcommand("bootstrap", "Bootstrap SCLS coefficients");
  boot_cmd->add_option("--response", boot.response)->required();
  boot_cmd->add_option("--predictor", boot.predictor)->required();
  boot_cmd->add_option("--count", boot.count, "Bootstrap replicates");
  boot_cmd->add_option("--seed", boot.seed);
  boot_cmd->add_flag("--close", boot.close);
  add_common(boot_cmd);

  PlotArgs plot;
  auto* plot_cmd = app.add_subcommand("plot", "SVG ternary or entropy plots");
  plot_cmd->add_option("kind", plot.kind, "ternary|entropy")->required();
  plot_cmd->add_option("--coefficients", plot.coefficients, "Coefficient CSV");
  plot_cmd->add_option("--ellipses", plot.ellipses, "bootstrap.json for confidence ellipses");
  plot_cmd->add_option("--level", plot.level, "Ellipse coverage");
  plot_cmd->add_option("--grid", plot.grid, "Entropy grid cells per side");
  add_common(plot_cmd);

  CrossvalArgs cv;
  auto* cv_cmd = app.add_subcommand("crossval", "Repeated K-fold cross-validation");
  cv_cmd->add_option("--response", cv.response)->required();
  cv_cmd->add_option("--predictor", cv.predictor)->required();
  cv_cmd->add_option("--folds", cv.folds);
  cv_cmd->add_option("--repeats", cv.repeats);
  cv_cmd->add_option("--metric", cv.metric, "kld or jsd");
  cv_cmd->add_option("--alpha-grid", cv.alpha_grid, "Comma-separated alpha values")->delimiter(',');
  cv_cmd->add_option("--model", cv.model, "scls or tflr");
  cv_cmd->add_option("--seed", cv.seed);
  cv_cmd->add_flag("--close", cv.close);
  add_common(cv_cmd);

  std::string replay_manifest;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run the invocation recorded in a manifest");
  replay_cmd->add_option("--manifest", replay_manifest)->required();
  add_common(replay_cmd);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("InvalidArgument", e.what(), 2);
  }

  common.manifest.command = app.get_subcommands().front()->get_name();
  common.manifest.arguments = recorded_arguments(args);

  if (*replay_cmd) {
    auto again = replay_arguments(scls::io::read_json(replay_manifest));
    if (!common.out.empty()) again.insert(again.end(), {"--out", common.out});
    if (common.threads > 0) again.insert(again.end(), {"--threads", std::to_string(common.threads)});
    return run(again);
  }
  if (*fit_cmd) cmd_fit(fit, common);
  else if (*pred_cmd) cmd_predict(pred, common);
  else if (*test_cmd) cmd_test(test, common);
  else if (*sim_cmd) cmd_simulate(sim, common);
  else if (*boot_cmd) cmd_bootstrap(boot, common);
  else if (*plot_cmd) cmd_plot(plot, common);
  else if (*cv_cmd) cmd_crossval(cv, common);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(std::vector<std::string>(argv + 1, argv + argc));
  } catch (const scls::Error& e) {
    return fail(std::string(scls::to_string(e.code())), e.what(), scls::is_numerical(e.code()) ? 3 : 2);
  } catch (const std::exception& e) {
    return fail("Internal", e.what(), 1);
  }
}
