#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "scls/inference.hpp"

namespace scls {

Eigen::Vector2d ternary_coordinates(const Eigen::Ref<const Vector>& y) {
  if (y.size() != 3) throw Error(ErrorCode::ShapeMismatch, "ternary coordinates need 3 components");
  return {y[1] + 0.5 * y[2], std::sqrt(3.0) / 2.0 * y[2]};
}

bool ConfidenceEllipse::contains(const Eigen::Vector2d& p, double tol) const {
  const Eigen::Vector2d d = p - center;
  return d.dot(shape * d) <= 1.0 + tol;
}

std::vector<Eigen::Vector2d> ConfidenceEllipse::boundary(int count) const {
  // shape = V diag(1/r^2) V'; boundary = center + V diag(r) (cos t, sin t).
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(shape);
  const Eigen::Matrix2d V = eig.eigenvectors();
  const Eigen::Vector2d radii = eig.eigenvalues().cwiseInverse().cwiseSqrt();
  std::vector<Eigen::Vector2d> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double t = 2.0 * M_PI * i / count;
    out.push_back(center + V * Eigen::Vector2d(radii[0] * std::cos(t), radii[1] * std::sin(t)));
  }
  return out;
}

namespace {

[[noreturn]] void degenerate(const Eigen::Matrix2d& scatter) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(scatter);
  const Eigen::Vector2d dir = eig.eigenvectors().col(0);
  throw Error(ErrorCode::DegenerateScatter,
              "bootstrap points have no spread along direction (" + std::to_string(dir[0]) + ", " +
                  std::to_string(dir[1]) + ")");
}

bool is_degenerate(const Eigen::Matrix2d& scatter) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(scatter);
  const double top = eig.eigenvalues()[1];
  return !(top > 0.0) || eig.eigenvalues()[0] <= 1e-12 * top;
}

}  // namespace

ConfidenceEllipse minimum_volume_ellipse(std::span<const Eigen::Vector2d> points, double tol) {
  const Index N = static_cast<Index>(points.size());
  if (N < 3) throw Error(ErrorCode::TooFewSamples, "an enclosing ellipse needs at least 3 points");
  Eigen::Matrix<double, 3, Eigen::Dynamic> Q(3, N);
  for (Index i = 0; i < N; ++i) Q.col(i) << points[static_cast<std::size_t>(i)], 1.0;

  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(N);
  Eigen::Matrix2d scatter = Eigen::Matrix2d::Zero();
  for (const auto& p : points) scatter += (p - mean) * (p - mean).transpose();
  if (is_degenerate(scatter)) degenerate(scatter);

  constexpr double d = 2.0;
  Vector u = Vector::Constant(N, 1.0 / static_cast<double>(N));
  for (int it = 0; it < 100000; ++it) {
    const Eigen::Matrix3d V = Q * u.asDiagonal() * Q.transpose();
    const Eigen::Matrix3d Vinv = V.inverse();
    Index j = 0;
    double best = -1.0;
    for (Index i = 0; i < N; ++i) {
      const double m = Q.col(i).dot(Vinv * Q.col(i));
      if (m > best) {
        best = m;
        j = i;
      }
    }
    const double step = (best - d - 1.0) / ((d + 1.0) * (best - 1.0));
    Vector next = (1.0 - step) * u;
    next[j] += step;
    const double change = (next - u).norm();
    u = std::move(next);
    if (change < tol) break;
  }

  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  Eigen::Matrix2d second = Eigen::Matrix2d::Zero();
  for (Index i = 0; i < N; ++i) {
    const auto& p = points[static_cast<std::size_t>(i)];
    center += u[i] * p;
    second += u[i] * p * p.transpose();
  }
  ConfidenceEllipse out;
  out.center = center;
  out.shape = (second - center * center.transpose()).inverse() / d;
  // The iteration stops at a tolerance, so scale up to enclose every point.
  double worst = 0.0;
  for (const auto& p : points) worst = std::max(worst, (p - center).dot(out.shape * (p - center)));
  if (worst > 1.0) out.shape /= worst;
  out.level = 1.0;
  return out;
}

ConfidenceEllipse confidence_ellipse(std::span<const CoefficientMatrix> boot, Index row_index,
                                     double level) {
  if (!(level > 0.0 && level <= 1.0)) throw Error(ErrorCode::InvalidArgument, "level must lie in (0, 1]");
  if (boot.size() < 10) throw Error(ErrorCode::TooFewSamples, "at least 10 bootstrap matrices are required");
  if (boot.front().responses() != 3)
    throw Error(ErrorCode::ShapeMismatch, "confidence ellipses need a 3-part response");
  if (row_index < 0 || row_index >= boot.front().predictors())
    throw Error(ErrorCode::IndexOutOfRange, "coefficient row out of range");

  std::vector<Eigen::Vector2d> pts;
  for (const auto& B : boot) pts.push_back(ternary_coordinates(B.matrix().row(row_index).transpose()));
  const std::size_t N = pts.size();

  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(N);
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : pts) cov += (p - mean) * (p - mean).transpose();
  cov /= static_cast<double>(N - 1);
  if (is_degenerate(cov)) degenerate(cov);
  const Eigen::Matrix2d prec = cov.inverse();

  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> dist(N);
  for (std::size_t i = 0; i < N; ++i) dist[i] = (pts[i] - mean).dot(prec * (pts[i] - mean));
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
  const auto keep = static_cast<std::size_t>(std::ceil(level * static_cast<double>(N) - 1e-9));
  std::vector<Eigen::Vector2d> kept;
  for (std::size_t i = 0; i < std::max<std::size_t>(keep, 3); ++i) kept.push_back(pts[order[i]]);

  ConfidenceEllipse out = minimum_volume_ellipse(kept);
  out.level = level;
  out.row_index = row_index;
  return out;
}

}  // namespace scls
