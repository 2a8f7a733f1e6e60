#pragma once

#include <span>
#include <string>

#include <Eigen/Core>

#include "scls/inference.hpp"
#include "scls/regression.hpp"

namespace scls::plot {

struct Canvas {
  double side = 480.0;
  double margin = 60.0;

  double width() const { return side + 2 * margin; }
  double height() const { return side * 0.8660254037844386 + 2 * margin; }
  /// Ternary plane coordinates -> SVG pixel coordinates (y axis down).
  Eigen::Vector2d to_pixels(const Eigen::Vector2d& t) const;
};

/// Formats a pixel coordinate the way every SVG element in this module does.
std::string coord(double v);

std::string ternary_svg(const CoefficientMatrix& B, std::span<const ConfidenceEllipse> ellipses = {},
                        const Canvas& canvas = {});
std::string entropy_svg(int grid = 48, const Canvas& canvas = {});

}  // namespace scls::plot
