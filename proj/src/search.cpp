#include "hvsense/search.hpp"

#include <algorithm>
#include <cmath>

namespace hvsense {

double golden_section_minimize(const std::function<double(double)>& f,
                               double a, double b, double tol, int max_iter) {
  const double inv_gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - (b - a) * inv_gr;
  double d = a + (b - a) * inv_gr;
  double fc = f(c);
  double fd = f(d);
  for (int i = 0; i < max_iter && (b - a) > tol; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - (b - a) * inv_gr;
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + (b - a) * inv_gr;
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

Eigen::Vector2d nelder_mead_2d(
    const std::function<double(const Eigen::Vector2d&)>& f,
    const Eigen::Vector2d& x0, double edge, double tol, int max_iter) {
  struct Vertex {
    Eigen::Vector2d x;
    double value;
  };
  Vertex simplex[3] = {
      {x0, f(x0)},
      {x0 + Eigen::Vector2d(edge, 0.0), 0.0},
      {x0 + Eigen::Vector2d(0.0, edge), 0.0},
  };
  simplex[1].value = f(simplex[1].x);
  simplex[2].value = f(simplex[2].x);

  const auto by_value = [](const Vertex& a, const Vertex& b) {
    return a.value < b.value;
  };
  for (int iter = 0; iter < max_iter; ++iter) {
    std::sort(simplex, simplex + 3, by_value);
    const double spread = (simplex[2].x - simplex[0].x).norm() +
                          (simplex[1].x - simplex[0].x).norm();
    if (spread < tol) break;

    const Eigen::Vector2d centroid = 0.5 * (simplex[0].x + simplex[1].x);
    const Eigen::Vector2d reflected =
        centroid + (centroid - simplex[2].x);
    const double fr = f(reflected);
    if (fr < simplex[0].value) {
      const Eigen::Vector2d expanded =
          centroid + 2.0 * (centroid - simplex[2].x);
      const double fe = f(expanded);
      simplex[2] = fe < fr ? Vertex{expanded, fe} : Vertex{reflected, fr};
    } else if (fr < simplex[1].value) {
      simplex[2] = {reflected, fr};
    } else {
      const Eigen::Vector2d contracted =
          centroid + 0.5 * (simplex[2].x - centroid);
      const double fk = f(contracted);
      if (fk < simplex[2].value) {
        simplex[2] = {contracted, fk};
      } else {
        // Shrink toward the best vertex.
        for (int i = 1; i < 3; ++i) {
          simplex[i].x = simplex[0].x + 0.5 * (simplex[i].x - simplex[0].x);
          simplex[i].value = f(simplex[i].x);
        }
      }
    }
  }
  std::sort(simplex, simplex + 3, by_value);
  return simplex[0].x;
}

}  // namespace hvsense
