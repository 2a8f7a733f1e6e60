#include "scls/simplex.hpp"

#include <cmath>
#include <random>

namespace scls {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::AllZero: return "AllZero";
    case ErrorCode::NegativeEntry: return "NegativeEntry";
    case ErrorCode::ZeroComponent: return "ZeroComponent";
    case ErrorCode::DimensionTooSmall: return "DimensionTooSmall";
    case ErrorCode::ZeroWithNonpositiveAlpha: return "ZeroWithNonpositiveAlpha";
    case ErrorCode::AlphaZero: return "AlphaZero";
    case ErrorCode::SupportMismatch: return "SupportMismatch";
    case ErrorCode::NonpositiveParameter: return "NonpositiveParameter";
    case ErrorCode::NotOnSimplex: return "NotOnSimplex";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::InsufficientTimePoints: return "InsufficientTimePoints";
    case ErrorCode::SingleLevel: return "SingleLevel";
    case ErrorCode::ZeroFittedCell: return "ZeroFittedCell";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::DegenerateScatter: return "DegenerateScatter";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

bool is_numerical(ErrorCode code) {
  return code == ErrorCode::Infeasible ||
         code == ErrorCode::NotPositiveDefinite ||
         code == ErrorCode::NoConvergence;
}

namespace {

double xlogx_ratio(double p, double q) {
  if (p == 0.0) return 0.0;
  return p * std::log(p / q);
}

void require_positive(const Composition& y, const char* what) {
  if (!y.strictly_positive())
    throw Error(ErrorCode::ZeroComponent,
                std::string(what) + " requires strictly positive components");
}

void require_same_shape(const CompositionMatrix& p, const CompositionMatrix& q) {
  if (p.rows() != q.rows() || p.cols() != q.cols())
    throw Error(ErrorCode::ShapeMismatch, "composition matrices differ in shape");
}

}  // namespace

Composition Composition::from_values(Vector values, double tol) {
  if (values.size() < 1)
    throw Error(ErrorCode::DimensionTooSmall, "empty composition");
  if ((values.array() < 0.0).any())
    throw Error(ErrorCode::NegativeEntry, "composition has a negative entry");
  const double s = values.sum();
  if (std::abs(s - 1.0) > tol)
    throw Error(ErrorCode::NotOnSimplex,
                "composition sums to " + std::to_string(s));
  values /= s;
  return Composition(std::move(values));
}

Composition closure(const Vector& raw) {
  if ((raw.array() < 0.0).any())
    throw Error(ErrorCode::NegativeEntry, "closure of a vector with a negative entry");
  const double s = raw.sum();
  if (!(s > 0.0)) throw Error(ErrorCode::AllZero, "closure of an all-zero vector");
  return Composition(raw / s);
}

Composition closure(std::span<const double> raw) {
  return closure(Vector(Eigen::Map<const Vector>(raw.data(), static_cast<Index>(raw.size()))));
}

std::vector<std::string> default_names(const std::string& prefix, Index count) {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i) out.push_back(prefix + std::to_string(i + 1));
  return out;
}

CompositionMatrix::CompositionMatrix(Matrix m, std::vector<std::string> names)
    : data_(std::move(m)), names_(std::move(names)) {
  if (data_.rows() < 1) throw Error(ErrorCode::TooFewRows, "composition matrix has no rows");
  if (data_.cols() < 2)
    throw Error(ErrorCode::DimensionTooSmall, "compositions need at least 2 components");
  if (names_.empty()) names_ = default_names("V", data_.cols());
  if (static_cast<Index>(names_.size()) != data_.cols())
    throw Error(ErrorCode::ShapeMismatch, "component name count differs from column count");
}

CompositionMatrix CompositionMatrix::from_rows(Matrix rows,
                                               std::vector<std::string> names,
                                               double tol) {
  for (Index i = 0; i < rows.rows(); ++i) {
    if ((rows.row(i).array() < 0.0).any())
      throw Error(ErrorCode::NegativeEntry,
                  "row " + std::to_string(i + 1) + " has a negative entry");
    const double s = rows.row(i).sum();
    if (std::abs(s - 1.0) > tol)
      throw Error(ErrorCode::NotOnSimplex,
                  "row " + std::to_string(i + 1) + " sums to " + std::to_string(s));
    rows.row(i) /= s;
  }
  return CompositionMatrix(std::move(rows), std::move(names));
}

CompositionMatrix CompositionMatrix::close_rows(Matrix raw,
                                                std::vector<std::string> names) {
  for (Index i = 0; i < raw.rows(); ++i) {
    if ((raw.row(i).array() < 0.0).any())
      throw Error(ErrorCode::NegativeEntry,
                  "row " + std::to_string(i + 1) + " has a negative entry");
    const double s = raw.row(i).sum();
    if (!(s > 0.0))
      throw Error(ErrorCode::AllZero, "row " + std::to_string(i + 1) + " is all zero");
    raw.row(i) /= s;
  }
  return CompositionMatrix(std::move(raw), std::move(names));
}

CompositionMatrix CompositionMatrix::unchecked(Matrix rows,
                                               std::vector<std::string> names) {
  return CompositionMatrix(std::move(rows), std::move(names));
}

Composition CompositionMatrix::row(Index i) const {
  if (i < 0 || i >= rows()) throw Error(ErrorCode::IndexOutOfRange, "row index out of range");
  return Composition(data_.row(i).transpose());
}

CompositionMatrix CompositionMatrix::select_rows(std::span<const Index> order) const {
  Matrix out(static_cast<Index>(order.size()), cols());
  for (std::size_t r = 0; r < order.size(); ++r) out.row(static_cast<Index>(r)) = data_.row(order[r]);
  return CompositionMatrix(std::move(out), names_);
}

HelmertSubMatrix::HelmertSubMatrix(Index D) {
  if (D < 2) throw Error(ErrorCode::DimensionTooSmall, "Helmert sub-matrix needs D >= 2");
  h_ = Matrix::Zero(D - 1, D);
  for (Index i = 1; i < D; ++i) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(i * (i + 1)));
    h_.row(i - 1).head(i).setConstant(scale);
    h_(i - 1, i) = -static_cast<double>(i) * scale;
  }
}

HelmertSubMatrix helmert_submatrix(Index D) { return HelmertSubMatrix(D); }

Vector alr(const Composition& y, Index divisor) {
  if (divisor < 0 || divisor >= y.size())
    throw Error(ErrorCode::IndexOutOfRange, "alr divisor out of range");
  require_positive(y, "alr");
  Vector v(y.size() - 1);
  const double logd = std::log(y[divisor]);
  for (Index j = 0, k = 0; j < y.size(); ++j) {
    if (j == divisor) continue;
    v[k++] = std::log(y[j]) - logd;
  }
  return v;
}

Composition alr_inverse(const Vector& v, Index divisor) {
  const Index D = v.size() + 1;
  if (divisor < 0 || divisor >= D)
    throw Error(ErrorCode::IndexOutOfRange, "alr divisor out of range");
  const double shift = std::max(0.0, v.size() > 0 ? v.maxCoeff() : 0.0);
  Vector y(D);
  for (Index j = 0, k = 0; j < D; ++j)
    y[j] = (j == divisor) ? std::exp(-shift) : std::exp(v[k++] - shift);
  return closure(y);
}

Vector clr(const Composition& y) {
  require_positive(y, "clr");
  Vector u = y.values().array().log().matrix();
  u.array() -= u.mean();
  return u;
}

Vector ilr(const Composition& y) {
  return helmert_submatrix(y.size()).matrix() * clr(y);
}

Composition power_transform(const Composition& y, double alpha) {
  if (alpha <= 0.0 && !y.strictly_positive())
    throw Error(ErrorCode::ZeroWithNonpositiveAlpha,
                "power transform of a composition with zeros needs alpha > 0");
  if (alpha == 1.0) return y;
  Vector w(y.size());
  for (Index j = 0; j < y.size(); ++j) w[j] = y[j] == 0.0 ? 0.0 : std::pow(y[j], alpha);
  return closure(w);
}

Composition power_transform_inverse(const Composition& w, double alpha) {
  if (alpha == 0.0) throw Error(ErrorCode::AlphaZero, "inverse power transform needs alpha != 0");
  return power_transform(w, 1.0 / alpha);
}

CompositionMatrix power_transform(const CompositionMatrix& y, double alpha) {
  if (alpha == 1.0) return y;
  Matrix out(y.rows(), y.cols());
  for (Index i = 0; i < y.rows(); ++i)
    out.row(i) = power_transform(y.row(i), alpha).values().transpose();
  return CompositionMatrix::unchecked(std::move(out), y.names());
}

CompositionMatrix power_transform_inverse(const CompositionMatrix& w, double alpha) {
  if (alpha == 0.0) throw Error(ErrorCode::AlphaZero, "inverse power transform needs alpha != 0");
  return power_transform(w, 1.0 / alpha);
}

Vector alpha_transform(const Composition& y, double alpha) {
  if (alpha == 0.0)
    throw Error(ErrorCode::AlphaZero, "alpha = 0 is the ilr limit; call ilr instead");
  const Composition w = power_transform(y, alpha);
  const double D = static_cast<double>(y.size());
  Vector centred = (D * w.values().array() - 1.0).matrix();
  return helmert_submatrix(y.size()).matrix() * centred / alpha;
}

double kld_row(const Eigen::Ref<const Vector>& p, const Eigen::Ref<const Vector>& q) {
  double s = 0.0;
  for (Index k = 0; k < p.size(); ++k) {
    if (p[k] > 0.0 && !(q[k] > 0.0))
      throw Error(ErrorCode::SupportMismatch,
                  "p > 0 where q = 0 in component " + std::to_string(k + 1));
    s += xlogx_ratio(p[k], q[k]);
  }
  return s;
}

double kld(const CompositionMatrix& p, const CompositionMatrix& q) {
  require_same_shape(p, q);
  double s = 0.0;
  for (Index i = 0; i < p.rows(); ++i)
    s += kld_row(p.data().row(i).transpose(), q.data().row(i).transpose());
  return std::max(0.0, s);
}

double jsd_row(const Eigen::Ref<const Vector>& p, const Eigen::Ref<const Vector>& q) {
  double s = 0.0;
  for (Index k = 0; k < p.size(); ++k) {
    const double m = 0.5 * (p[k] + q[k]);
    s += 0.5 * xlogx_ratio(p[k], m) + 0.5 * xlogx_ratio(q[k], m);
  }
  return s;
}

double jsd(const CompositionMatrix& p, const CompositionMatrix& q) {
  require_same_shape(p, q);
  double s = 0.0;
  for (Index i = 0; i < p.rows(); ++i)
    s += jsd_row(p.data().row(i).transpose(), q.data().row(i).transpose());
  return std::max(0.0, s);
}

double negated_entropy(const Composition& y) {
  double s = 0.0;
  for (Index j = 0; j < y.size(); ++j)
    if (y[j] > 0.0) s += y[j] * std::log(y[j]);
  return s;
}

Vector dirichlet_draw(std::span<const double> params, Rng& gen) {
  Vector g(static_cast<Index>(params.size()));
  for (std::size_t j = 0; j < params.size(); ++j) {
    if (params[j] > 0.0) {
      std::gamma_distribution<double> gamma(params[j], 1.0);
      g[static_cast<Index>(j)] = gamma(gen);
    } else {
      g[static_cast<Index>(j)] = 0.0;
    }
  }
  const double s = g.sum();
  if (!(s > 0.0)) throw Error(ErrorCode::AllZero, "Dirichlet draw with no positive mass");
  return g / s;
}

CompositionMatrix dirichlet_sample(std::span<const double> params, Index n,
                                   std::uint64_t seed) {
  if (params.size() < 2)
    throw Error(ErrorCode::DimensionTooSmall, "Dirichlet needs at least 2 parameters");
  for (double a : params)
    if (!(a > 0.0)) throw Error(ErrorCode::NonpositiveParameter, "Dirichlet parameters must be > 0");
  if (n < 1) throw Error(ErrorCode::TooFewRows, "Dirichlet sample size must be >= 1");
  Rng gen(seed);
  Matrix out(n, static_cast<Index>(params.size()));
  for (Index i = 0; i < n; ++i) out.row(i) = dirichlet_draw(params, gen).transpose();
  return CompositionMatrix::unchecked(std::move(out));
}

}  // namespace scls
