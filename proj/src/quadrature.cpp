#include "afem/quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace afem {

void gauss_jacobi01(int n, double a, std::vector<double>& nodes, std::vector<double>& weights) {
  // Golub-Welsch on the monic Jacobi recurrence for (1-t)^a on [-1, 1], b = 0.
  const double b = 0.0;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const double s = 2.0 * k + a + b;
    J(k, k) = (k == 0) ? (b - a) / (a + b + 2.0) : (b * b - a * a) / (s * (s + 2.0));
    if (k + 1 < n) {
      const double m = k + 1.0;
      const double sm = 2.0 * m + a + b;
      const double beta = 4.0 * m * (m + a) * (m + b) * (m + a + b) / (sm * sm * (sm + 1.0) * (sm - 1.0));
      J(k, k + 1) = J(k + 1, k) = std::sqrt(beta);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  nodes.resize(n);
  weights.resize(n);
  double total = 0.0;
  for (int k = 0; k < n; ++k) {
    nodes[k] = 0.5 * (1.0 + es.eigenvalues()(k));
    weights[k] = es.eigenvectors()(0, k) * es.eigenvectors()(0, k);
    total += weights[k];
  }
  for (auto& w : weights) w /= total;
}

namespace {

QuadratureRule conical_tetrahedron(int degree) {
  const int n = (degree + 2) / 2;
  std::vector<double> xu, wu, xv, wv, xw, ww;
  gauss_jacobi01(n, 2.0, xu, wu);
  gauss_jacobi01(n, 1.0, xv, wv);
  gauss_jacobi01(n, 0.0, xw, ww);
  QuadratureRule r;
  r.dim = 3;
  r.degree = 2 * n - 1;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const double x = xu[i];
        const double y = (1.0 - xu[i]) * xv[j];
        const double z = (1.0 - xu[i]) * (1.0 - xv[j]) * xw[k];
        r.points.push_back({1.0 - x - y - z, x, y, z});
        r.weights.push_back(wu[i] * wv[j] * ww[k]);
      }
  return r;
}

QuadratureRule conical_triangle(int degree) {
  const int n = (degree + 2) / 2;
  std::vector<double> xu, wu, xv, wv;
  gauss_jacobi01(n, 1.0, xu, wu);
  gauss_jacobi01(n, 0.0, xv, wv);
  QuadratureRule r;
  r.dim = 2;
  r.degree = 2 * n - 1;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double x = xu[i];
      const double y = (1.0 - xu[i]) * xv[j];
      r.points.push_back({1.0 - x - y, x, y, 0.0});
      r.weights.push_back(wu[i] * wv[j]);
    }
  return r;
}

void add_orbit_4(QuadratureRule& r, double a, double w) {
  const double b = 1.0 - 3.0 * a;
  for (int i = 0; i < 4; ++i) {
    std::array<double, 4> p{a, a, a, a};
    p[i] = b;
    r.points.push_back(p);
    r.weights.push_back(w);
  }
}

void add_orbit_6(QuadratureRule& r, double a, double w) {
  const double b = 0.5 - a;
  constexpr int pairs[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  for (const auto& pr : pairs) {
    std::array<double, 4> p{b, b, b, b};
    p[pr[0]] = a;
    p[pr[1]] = a;
    r.points.push_back(p);
    r.weights.push_back(w);
  }
}

void add_orbit_3(QuadratureRule& r, double a, double w) {
  const double b = 1.0 - 2.0 * a;
  for (int i = 0; i < 3; ++i) {
    std::array<double, 4> p{a, a, a, 0.0};
    p[i] = b;
    r.points.push_back(p);
    r.weights.push_back(w);
  }
}

}  // namespace

QuadratureRule tetrahedron_rule(int degree) {
  if (degree < 0) throw std::invalid_argument("quadrature degree must be non-negative");
  QuadratureRule r;
  r.dim = 3;
  if (degree <= 1) {
    r.degree = 1;
    r.points.push_back({0.25, 0.25, 0.25, 0.25});
    r.weights.push_back(1.0);
    return r;
  }
  if (degree == 2) {
    r.degree = 2;
    add_orbit_4(r, 0.1381966011250105, 0.25);
    return r;
  }
  if (degree <= 5) {
    // 14-point symmetric rule with positive weights.
    r.degree = 5;
    add_orbit_4(r, 0.0927352503108912, 0.0734930431163619);
    add_orbit_4(r, 0.3108859192633006, 0.1126879257180159);
    add_orbit_6(r, 0.0455037041256496, 0.0425460207770812);
    return r;
  }
  return conical_tetrahedron(degree);
}

QuadratureRule triangle_rule(int degree) {
  if (degree < 0) throw std::invalid_argument("quadrature degree must be non-negative");
  QuadratureRule r;
  r.dim = 2;
  if (degree <= 1) {
    r.degree = 1;
    r.points.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0});
    r.weights.push_back(1.0);
    return r;
  }
  if (degree == 2) {
    r.degree = 2;
    add_orbit_3(r, 1.0 / 6.0, 1.0 / 3.0);
    return r;
  }
  if (degree <= 4) {
    r.degree = 4;
    add_orbit_3(r, 0.445948490915965, 0.223381589678011);
    add_orbit_3(r, 0.091576213509771, 0.109951743655322);
    return r;
  }
  return conical_triangle(degree);
}

}  // namespace afem
