#include "scls/plot.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace scls::plot {

namespace {

constexpr double kHalfSqrt3 = 0.8660254037844386;

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void open_svg(std::ostringstream& s, const Canvas& c) {
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << coord(c.width()) << "\" height=\""
    << coord(c.height()) << "\" viewBox=\"0 0 " << coord(c.width()) << ' ' << coord(c.height()) << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

Eigen::Vector2d vertex(int k) {
  if (k == 0) return {0.0, 0.0};
  if (k == 1) return {1.0, 0.0};
  return {0.5, kHalfSqrt3};
}

void triangle(std::ostringstream& s, const Canvas& c, const std::vector<std::string>& names) {
  s << "<polygon class=\"frame\" points=\"";
  for (int k = 0; k < 3; ++k) {
    const auto p = c.to_pixels(vertex(k));
    s << (k ? " " : "") << coord(p.x()) << ',' << coord(p.y());
  }
  s << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
  // Labels sit outside the triangle: below the base corners, above the apex.
  const double dx[3] = {-8.0, 8.0, 0.0}, dy[3] = {22.0, 22.0, -12.0};
  const char* anchor[3] = {"end", "start", "middle"};
  for (int k = 0; k < 3; ++k) {
    const auto p = c.to_pixels(vertex(k));
    s << "<text class=\"vertex\" x=\"" << coord(p.x() + dx[k]) << "\" y=\"" << coord(p.y() + dy[k])
      << "\" text-anchor=\"" << anchor[k] << "\" font-family=\"sans-serif\" font-size=\"16\">"
      << xml_escape(names[static_cast<std::size_t>(k)]) << "</text>\n";
  }
}

}  // namespace

std::string coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s = buf;
  return s == "-0.000" ? "0.000" : s;
}

Eigen::Vector2d Canvas::to_pixels(const Eigen::Vector2d& t) const {
  return {margin + side * t.x(), margin + side * (kHalfSqrt3 - t.y())};
}

std::string ternary_svg(const CoefficientMatrix& B, std::span<const ConfidenceEllipse> ellipses,
                        const Canvas& canvas) {
  if (B.responses() != 3)
    throw Error(ErrorCode::ShapeMismatch, "ternary plot needs 3 response components, got " +
                                              std::to_string(B.responses()));
  std::ostringstream s;
  open_svg(s, canvas);
  triangle(s, canvas, B.response_names());

  for (const auto& e : ellipses) {
    s << "<path class=\"ellipse\" data-row=\"B" << e.row_index + 1 << "\" d=\"";
    const auto pts = e.boundary(72);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto p = canvas.to_pixels(pts[i]);
      s << (i ? " L" : "M") << coord(p.x()) << ',' << coord(p.y());
    }
    s << " Z\" fill=\"none\" stroke=\"#3465a4\" stroke-width=\"1\"/>\n";
  }

  const Vector centre = Vector::Constant(3, 1.0 / 3.0);
  const auto bc = canvas.to_pixels(ternary_coordinates(centre));
  s << "<g class=\"barycentre\" stroke=\"gray\" stroke-width=\"1\">"
    << "<line x1=\"" << coord(bc.x() - 5) << "\" y1=\"" << coord(bc.y()) << "\" x2=\"" << coord(bc.x() + 5)
    << "\" y2=\"" << coord(bc.y()) << "\"/>"
    << "<line x1=\"" << coord(bc.x()) << "\" y1=\"" << coord(bc.y() - 5) << "\" x2=\"" << coord(bc.x())
    << "\" y2=\"" << coord(bc.y() + 5) << "\"/></g>\n"
    << "<circle class=\"barycentre\" cx=\"" << coord(bc.x()) << "\" cy=\"" << coord(bc.y())
    << "\" r=\"1.5\" fill=\"gray\"/>\n";

  for (Index j = 0; j < B.predictors(); ++j) {
    const auto p = canvas.to_pixels(ternary_coordinates(B.matrix().row(j).transpose()));
    s << "<circle class=\"marker\" data-label=\"B" << j + 1 << "\" cx=\"" << coord(p.x()) << "\" cy=\""
      << coord(p.y()) << "\" r=\"4\" fill=\"#cc0000\"/>\n"
      << "<text class=\"marker-label\" x=\"" << coord(p.x() + 6) << "\" y=\"" << coord(p.y() - 6)
      << "\" font-family=\"sans-serif\" font-size=\"13\">B" << j + 1 << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string entropy_svg(int grid, const Canvas& canvas) {
  if (grid < 2) throw Error(ErrorCode::InvalidArgument, "entropy grid needs at least 2 cells per side");
  std::ostringstream s;
  open_svg(s, canvas);
  const double lo = -std::log(3.0);  // barycentre, the minimum of sum y log y
  const double g = static_cast<double>(grid);

  // Each lattice cell (i, j) splits into an upward and (when it fits) a
  // downward triangle; both are shaded by the value at their centroid.
  auto shade = [&](const Eigen::Vector3d& y) {
    Vector v = y;
    const double h = negated_entropy(Composition::from_values(v));
    const int level = static_cast<int>(std::lround(255.0 * (h - lo) / (0.0 - lo)));
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", level, level, 255);
    return std::string(buf);
  };
  auto emit = [&](const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
    s << "<polygon points=\"";
    const Eigen::Vector3d* corners[3] = {&a, &b, &c};
    for (int k = 0; k < 3; ++k) {
      const auto p = canvas.to_pixels(ternary_coordinates(*corners[k]));
      s << (k ? " " : "") << coord(p.x()) << ',' << coord(p.y());
    }
    s << "\" fill=\"" << shade((a + b + c) / 3.0) << "\" stroke=\"none\"/>\n";
  };
  for (int i = 0; i < grid; ++i) {
    for (int j = 0; i + j < grid; ++j) {
      const Eigen::Vector3d a(1.0 - (i + j) / g, i / g, j / g);
      const Eigen::Vector3d b(1.0 - (i + j + 1) / g, (i + 1) / g, j / g);
      const Eigen::Vector3d c(1.0 - (i + j + 1) / g, i / g, (j + 1) / g);
      emit(a, b, c);
      if (i + j + 2 <= grid) {
        const Eigen::Vector3d d(1.0 - (i + j + 2) / g, (i + 1) / g, (j + 1) / g);
        emit(b, d, c);
      }
    }
  }
  triangle(s, canvas, {"Y1", "Y2", "Y3"});
  s << "</svg>\n";
  return s.str();
}

}  // namespace scls::plot
