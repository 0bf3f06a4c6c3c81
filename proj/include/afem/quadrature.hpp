#pragma once

#include <array>
#include <vector>

namespace afem {

/// Quadrature on the reference simplex. Points are barycentric coordinates
/// (dim + 1 entries used, the rest zero); weights sum to one, so integrals are
/// sum_q weights[q] * f(points[q]) * |simplex|.
struct QuadratureRule {
  int dim = 3;
  int degree = 0;  // exact for polynomials up to this total degree
  std::vector<std::array<double, 4>> points;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
};

/// Rule on the tetrahedron exact to at least the requested degree.
QuadratureRule tetrahedron_rule(int degree);

/// Rule on the triangle exact to at least the requested degree.
QuadratureRule triangle_rule(int degree);

/// Gauss-Jacobi nodes/weights on [0, 1] for the weight (1 - u)^a.
void gauss_jacobi01(int n, double a, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace afem
