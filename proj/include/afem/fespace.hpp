#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "afem/mesh.hpp"
#include "afem/quadrature.hpp"

namespace afem {

/// Local Lagrange basis on a tetrahedron in barycentric form. Degree 2 orders
/// the ten functions as vertices 0..3, then edges (0,1) (0,2) (0,3) (1,2)
/// (1,3) (2,3).
namespace basis {

inline constexpr int kEdges[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};

inline int count(int degree) { return degree == 1 ? 4 : 10; }

/// Values at barycentric point l.
void values(int degree, const std::array<double, 4>& l, double* out);

/// Derivatives with respect to the four barycentric coordinates; out[i][k].
void barycentric_derivatives(int degree, const std::array<double, 4>& l, std::array<double, 4>* out);

/// Physical gradients given the barycentric gradients of the element.
void gradients(int degree, const std::array<double, 4>& l, const std::array<Vec3, 4>& grad_lambda, Vec3* out);

/// Physical Laplacians (constant per element for degree <= 2).
void laplacians(int degree, const std::array<Vec3, 4>& grad_lambda, double* out);

/// Barycentric coordinates of the local nodes.
std::array<double, 4> node(int degree, int i);

}  // namespace basis

/// Compressed sparsity of the dof coupling graph; rows are sorted, symmetric.
struct SparsityPattern {
  std::vector<int> row_ptr;
  std::vector<int> cols;
};

struct QuadratureOptions {
  int volume_degree = -1;  // default 2n + 2
  int face_degree = -1;    // default 2n
};

/// Continuous Lagrange space of degree 1 or 2 with homogeneous Dirichlet
/// constraints on the box boundary (boundary dofs are eliminated by the
/// solvers, not by the space).
class FESpace : public std::enable_shared_from_this<FESpace> {
 public:
  FESpace(std::shared_ptr<const Mesh> mesh, int degree, QuadratureOptions quad = {});

  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  int degree() const { return degree_; }
  int dofs_per_element() const { return basis::count(degree_); }
  std::size_t n_dofs() const { return n_dofs_; }
  std::size_t n_edges() const { return n_edges_; }

  std::span<const DofId> element_dofs(ElementId t) const {
    return {dof_map_.data() + static_cast<std::size_t>(t) * dofs_per_element(),
            static_cast<std::size_t>(dofs_per_element())};
  }

  bool is_boundary_dof(DofId d) const { return boundary_[d] != 0; }
  const std::vector<DofId>& boundary_dofs() const { return boundary_dofs_; }
  const std::vector<DofId>& interior_dofs() const { return interior_dofs_; }
  /// dof -> position in interior_dofs(), or -1 for boundary dofs.
  const std::vector<DofId>& interior_index() const { return interior_index_; }

  Vec3 dof_node(DofId d) const { return nodes_[d]; }

  const QuadratureRule& volume_rule() const { return volume_rule_; }
  const QuadratureRule& face_rule() const { return face_rule_; }
  /// Basis values at the volume rule points: [q * dofs_per_element + i].
  const std::vector<double>& volume_basis() const { return volume_basis_; }

  /// Built on first use.
  const SparsityPattern& pattern() const;

 private:
  std::shared_ptr<const Mesh> mesh_;
  int degree_;
  std::size_t n_dofs_ = 0;
  std::size_t n_edges_ = 0;
  std::vector<DofId> dof_map_;
  std::vector<char> boundary_;
  std::vector<DofId> boundary_dofs_;
  std::vector<DofId> interior_dofs_;
  std::vector<DofId> interior_index_;
  std::vector<Vec3> nodes_;
  QuadratureRule volume_rule_;
  QuadratureRule face_rule_;
  std::vector<double> volume_basis_;
  mutable std::once_flag pattern_once_;
  mutable SparsityPattern pattern_;
};

std::shared_ptr<const FESpace> build_space(std::shared_ptr<const Mesh> mesh, int degree, QuadratureOptions quad = {});

/// Coefficient vector over a space.
struct FEFunction {
  std::shared_ptr<const FESpace> space;
  Eigen::VectorXd coefficients;

  FEFunction() = default;
  explicit FEFunction(std::shared_ptr<const FESpace> s)
      : space(std::move(s)), coefficients(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space->n_dofs()))) {}
  FEFunction(std::shared_ptr<const FESpace> s, Eigen::VectorXd c) : space(std::move(s)), coefficients(std::move(c)) {}
};

using ScalarField = std::function<double(const Vec3&)>;

/// Nodal interpolant; throws DomainError on non-finite nodal values.
FEFunction interpolate(const ScalarField& f, std::shared_ptr<const FESpace> space);

struct PointEvaluation {
  std::vector<double> values;
  std::vector<Vec3> gradients;
};

/// Values and gradients of u restricted to element t at barycentric points.
PointEvaluation evaluate(const FEFunction& u, ElementId t, std::span<const std::array<double, 4>> points);

/// Exact transfer of u to a space on a refinement of u's mesh (one bisect
/// call apart) or on the same mesh. Throws DomainError otherwise.
FEFunction transfer(const FEFunction& u, std::shared_ptr<const FESpace> target);

/// Per-element, per-volume-quadrature-point scalar values.
struct QuadField {
  std::size_t n_elements = 0;
  std::size_t n_points = 0;
  std::vector<double> values;

  QuadField() = default;
  QuadField(std::size_t elements, std::size_t points, double fill = 0.0)
      : n_elements(elements), n_points(points), values(elements * points, fill) {}

  double& operator()(std::size_t t, std::size_t q) { return values[t * n_points + q]; }
  double operator()(std::size_t t, std::size_t q) const { return values[t * n_points + q]; }
  bool matches(const FESpace& space) const {
    return n_elements == space.mesh().n_elements() && n_points == space.volume_rule().size();
  }
};

/// Values of u at the volume quadrature points.
QuadField values_at_quadrature(const FEFunction& u);

/// f sampled at the physical volume quadrature points.
QuadField sample_at_quadrature(const FESpace& space, const ScalarField& f);

/// Physical coordinates of the volume quadrature points of element t.
std::vector<Vec3> quadrature_points(const FESpace& space, ElementId t);

/// Integral of a quadrature field.
double integrate(const FESpace& space, const QuadField& f);

double l2_norm(const FEFunction& u);
double h1_seminorm(const FEFunction& u);
double h1_norm(const FEFunction& u);
/// Squared H1 norm of u on each element.
std::vector<double> element_h1_norms_squared(const FEFunction& u);

/// Maps barycentric coordinates on face `local_face` of element t (ordered as
/// the face's ascending global vertices) to element barycentric coordinates.
std::array<double, 4> face_to_element(const Mesh& mesh, ElementId t, int local_face,
                                      const std::array<double, 4>& face_bary);

}  // namespace afem
