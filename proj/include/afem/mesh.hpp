#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "afem/types.hpp"

namespace afem {

/// A tetrahedron in tagged-simplex form. The vertex order is significant: the
/// refinement edge is (vertices[0], vertices[tag]) and bisection derives the
/// children's order and tag from it.
struct Element {
  std::array<VertexId, 4> vertices{};
  std::uint8_t tag = 3;         // 1, 2 or 3
  std::int32_t generation = 0;  // number of bisections since the initial mesh
  ElementId parent = kNoElement;  // containing element of the predecessor mesh

  std::array<VertexId, 2> refinement_edge() const { return {vertices[0], vertices[tag]}; }
};

/// Triangle shared by one (boundary) or two (interior) elements. Local face f
/// of an element is the face opposite its local vertex f.
struct Face {
  std::array<VertexId, 3> vertices{};  // ascending
  std::array<ElementId, 2> elements{kNoElement, kNoElement};
  std::array<std::int8_t, 2> local_face{-1, -1};

  bool boundary() const { return elements[1] == kNoElement; }
};

struct ElementGeometry {
  double volume = 0.0;
  double diameter = 0.0;  // h_T, longest edge
  double inball_diameter = 0.0;  // rho_T = 6 |T| / surface area
  Vec3 origin{};  // x = origin + jacobian * xi maps the reference tetrahedron onto T
  std::array<Vec3, 3> jacobian{};  // columns: x_i - x_0
  std::array<Vec3, 4> grad_barycentric{};

  double shape_ratio() const { return diameter / inball_diameter; }
};

struct QualityStats {
  double h_min = 0.0;
  double h_max = 0.0;
  double max_shape_ratio = 0.0;
};

struct BisectOptions {
  int bisections = 1;  // bisections applied to each marked element per call
  int max_depth = 64;  // recursion bound of the conforming closure
};

/// Conforming tetrahedral mesh of a box, refined by tagged-simplex bisection.
/// Meshes are values: refinement returns a new mesh whose elements record the
/// containing element of this one in Element::parent.
class Mesh {
 public:
  Mesh() = default;

  /// Kuhn split of a divisions-grid on the box (6 tetrahedra per cell).
  static Mesh box(const Box& box, std::array<int, 3> divisions);

  /// Mesh from explicit elements; used for hand-built configurations. Every
  /// single-sided face is treated as domain boundary.
  static Mesh from_elements(std::vector<Vec3> vertices, std::vector<Element> elements);

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Element>& elements() const { return elements_; }
  const std::vector<Face>& faces() const { return faces_; }
  std::size_t n_vertices() const { return vertices_.size(); }
  std::size_t n_elements() const { return elements_.size(); }
  std::size_t n_faces() const { return faces_.size(); }
  const Box& bounding_box() const { return box_; }

  const std::array<FaceId, 4>& element_faces(ElementId t) const { return element_faces_[t]; }
  ElementId neighbor(ElementId t, int local_face) const;
  bool is_boundary_vertex(VertexId v) const { return boundary_vertex_[v] != 0; }

  ElementGeometry geometry(ElementId t) const;
  Vec3 centroid(ElementId t) const;
  Vec3 outward_normal(ElementId t, int local_face) const;
  double face_area(FaceId f) const;
  double face_diameter(FaceId f) const;

  /// T together with its face neighbours.
  std::vector<ElementId> patch(ElementId t) const;
  /// Elements adjacent to face f.
  std::vector<ElementId> face_patch(FaceId f) const;

  QualityStats quality() const;
  std::vector<double> element_sizes() const;

  /// Number of single-sided faces that do not lie on the box boundary.
  std::size_t count_hanging_faces() const;
  bool is_conforming() const { return count_hanging_faces() == 0; }

  /// Bisects every marked element (options.bisections times) and closes the
  /// result to a conforming mesh.
  Mesh bisect(std::span<const ElementId> marked, const BisectOptions& options = {}) const;

  std::uint64_t serial() const { return serial_; }
  std::uint64_t predecessor_serial() const { return predecessor_serial_; }

 private:
  void build_topology();

  std::vector<Vec3> vertices_;
  std::vector<Element> elements_;
  std::vector<Face> faces_;
  std::vector<std::array<FaceId, 4>> element_faces_;
  std::vector<char> boundary_vertex_;
  Box box_;
  bool box_domain_ = true;  // false: every single-sided face is boundary
  std::uint64_t serial_ = 0;
  std::uint64_t predecessor_serial_ = 0;
};

Mesh build_box_mesh(const Box& box, std::array<int, 3> divisions);
Mesh bisect(const Mesh& mesh, std::span<const ElementId> marked, const BisectOptions& options = {});
ElementGeometry element_geometry(const Mesh& mesh, ElementId t);
std::vector<ElementId> patch(const Mesh& mesh, ElementId t);

/// Geometry of four points in the given order (throws DomainError if flat).
ElementGeometry tetrahedron_geometry(const std::array<Vec3, 4>& x);

/// Barycentric coordinates of x with respect to element t.
std::array<double, 4> barycentric(const Mesh& mesh, ElementId t, const Vec3& x);

/// Maximum over elements of the violation of the nestedness condition: every
/// vertex of a fine element lies in its parent element of `coarse`. Returns the
/// most negative barycentric coordinate excess (0 when nested).
double nestedness_violation(const Mesh& coarse, const Mesh& fine);

}  // namespace afem
