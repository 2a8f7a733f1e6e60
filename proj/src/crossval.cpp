#include <algorithm>

#include "scls/simulation.hpp"

namespace scls {

std::vector<Index> fold_assignment(Index n, Index folds, Rng& gen) {
  std::vector<Index> labels(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i % folds;
  std::shuffle(labels.begin(), labels.end(), gen);
  return labels;
}

namespace {

CompositionMatrix held_out_prediction(const CompositionMatrix& Ytrain, const CompositionMatrix& Xtrain,
                                      const CompositionMatrix& Xtest, Model model, double alpha) {
  if (model == Model::SCLS) return predict(fit_alpha_scls(Ytrain, Xtrain, alpha), Xtest);
  TflrOptions opt;
  opt.alpha = alpha;
  const TflrFit fit = fit_tflr(Ytrain, Xtrain, opt);
  auto mean = CompositionMatrix::unchecked(Xtest.data() * fit.coefficients.matrix(), Ytrain.names());
  return alpha == 1.0 ? mean : power_transform_inverse(mean, alpha);
}

}  // namespace

CrossValResult cross_validate(const CompositionMatrix& Y, const CompositionMatrix& X,
                              const CrossValOptions& options) {
  if (Y.rows() != X.rows()) throw Error(ErrorCode::ShapeMismatch, "response and predictor differ in rows");
  if (options.folds < 2) throw Error(ErrorCode::InvalidArgument, "at least 2 folds are required");
  if (options.repeats < 1) throw Error(ErrorCode::InvalidArgument, "repeats must be >= 1");
  if (Y.rows() < options.folds)
    throw Error(ErrorCode::TooFewRows, "fewer rows (" + std::to_string(Y.rows()) + ") than folds (" +
                                           std::to_string(options.folds) + ")");
  CrossValResult out;
  out.alphas = options.alphas.empty() ? std::vector<double>{1.0} : options.alphas;
  for (double a : out.alphas)
    if (a == 0.0) throw Error(ErrorCode::AlphaZero, "alpha grid may not contain 0");
  const Index A = static_cast<Index>(out.alphas.size());
  out.values = Matrix::Zero(options.repeats, A);
  const Index n = Y.rows();

  for_each_replicate(options.repeats, options.exec, [&](Index rep) {
    Rng gen = make_stream(options.seed, static_cast<std::uint64_t>(rep));
    const auto labels = fold_assignment(n, options.folds, gen);
    for (Index ai = 0; ai < A; ++ai) {
      double total = 0.0;
      for (Index f = 0; f < options.folds; ++f) {
        std::vector<Index> train, test;
        for (Index i = 0; i < n; ++i) (labels[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
        const auto pred = held_out_prediction(Y.select_rows(train), X.select_rows(train), X.select_rows(test),
                                              options.model, out.alphas[static_cast<std::size_t>(ai)]);
        const auto observed = Y.select_rows(test);
        total += options.metric == Metric::KLD ? kld(observed, pred) : jsd(observed, pred);
      }
      out.values(rep, ai) = total / static_cast<double>(n);
    }
  });
  out.evaluations = n * options.repeats;
  return out;
}

}  // namespace scls
