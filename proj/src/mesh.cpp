#include "afem/mesh.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <numeric>
#include <string>

namespace afem {

namespace {

std::atomic<std::uint64_t> g_next_serial{1};

std::uint64_t next_serial() { return g_next_serial.fetch_add(1); }

constexpr std::array<std::array<int, 3>, 4> kFaceVertices{{{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}}};

// All three points on one common box plane.
bool face_on_box_boundary(const Box& box, const Vec3& a, const Vec3& b, const Vec3& c) {
  for (int i = 0; i < 3; ++i) {
    for (double plane : {box.lo[i], box.hi[i]})
      if (a[i] == plane && b[i] == plane && c[i] == plane) return true;
  }
  return false;
}

Box bounding_box_of(const std::vector<Vec3>& pts) {
  Box b{{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
         std::numeric_limits<double>::max()},
        {std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest(),
         std::numeric_limits<double>::lowest()}};
  for (const auto& p : pts)
    for (int i = 0; i < 3; ++i) {
      b.lo[i] = std::min(b.lo[i], p[i]);
      b.hi[i] = std::max(b.hi[i], p[i]);
    }
  return b;
}

}  // namespace

ElementGeometry tetrahedron_geometry(const std::array<Vec3, 4>& x) {
  ElementGeometry g;
  g.origin = x[0];
  for (int i = 0; i < 3; ++i) g.jacobian[i] = x[i + 1] - x[0];
  const auto& a = g.jacobian[0];
  const auto& b = g.jacobian[1];
  const auto& c = g.jacobian[2];
  const Vec3 bxc = cross(b, c);
  const double det = dot(a, bxc);
  double h = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) h = std::max(h, distance(x[i], x[j]));
  if (!(std::abs(det) > 1e-14 * h * h * h)) throw DomainError("degenerate tetrahedron (zero volume)");
  g.volume = std::abs(det) / 6.0;
  g.diameter = h;
  // Rows of the inverse Jacobian are the gradients of barycentric coordinates 1..3.
  const double inv = 1.0 / det;
  g.grad_barycentric[1] = inv * bxc;
  g.grad_barycentric[2] = inv * cross(c, a);
  g.grad_barycentric[3] = inv * cross(a, b);
  g.grad_barycentric[0] = -1.0 * (g.grad_barycentric[1] + g.grad_barycentric[2] + g.grad_barycentric[3]);
  double surface = 0.0;
  for (const auto& f : kFaceVertices) surface += 0.5 * norm(cross(x[f[1]] - x[f[0]], x[f[2]] - x[f[0]]));
  g.inball_diameter = 6.0 * g.volume / surface;
  return g;
}

Mesh Mesh::box(const Box& box, std::array<int, 3> divisions) {
  for (int i = 0; i < 3; ++i) {
    if (!(box.hi[i] > box.lo[i]) || !std::isfinite(box.lo[i]) || !std::isfinite(box.hi[i]))
      throw DomainError("degenerate box in direction " + std::to_string(i));
    if (divisions[i] < 1) throw DomainError("divisions must be positive");
  }
  const int nx = divisions[0], ny = divisions[1], nz = divisions[2];
  auto vid = [&](int i, int j, int k) { return static_cast<VertexId>((k * (ny + 1) + j) * (nx + 1) + i); };

  Mesh m;
  m.box_ = box;
  m.vertices_.resize(static_cast<std::size_t>(nx + 1) * (ny + 1) * (nz + 1));
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i) {
        // Exact end points so boundary detection can compare coordinates.
        auto coord = [&](int d, int n, int idx) {
          if (idx == 0) return box.lo[d];
          if (idx == n) return box.hi[d];
          return box.lo[d] + (box.hi[d] - box.lo[d]) * idx / n;
        };
        m.vertices_[vid(i, j, k)] = {coord(0, nx, i), coord(1, ny, j), coord(2, nz, k)};
      }

  // Kuhn split: one tetrahedron per monotone lattice path from the lower
  // corner to the upper corner; refinement edge is the cell diagonal.
  std::array<int, 3> perm{0, 1, 2};
  std::vector<std::array<int, 3>> perms;
  do perms.push_back(perm);
  while (std::next_permutation(perm.begin(), perm.end()));

  m.elements_.reserve(static_cast<std::size_t>(nx) * ny * nz * 6);
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        for (const auto& p : perms) {
          std::array<int, 3> c{i, j, k};
          Element e;
          e.vertices[0] = vid(c[0], c[1], c[2]);
          for (int s = 0; s < 3; ++s) {
            ++c[p[s]];
            e.vertices[s + 1] = vid(c[0], c[1], c[2]);
          }
          e.tag = 3;
          m.elements_.push_back(e);
        }
  m.serial_ = next_serial();
  m.build_topology();
  return m;
}

Mesh Mesh::from_elements(std::vector<Vec3> vertices, std::vector<Element> elements) {
  Mesh m;
  m.vertices_ = std::move(vertices);
  m.elements_ = std::move(elements);
  for (const auto& e : m.elements_) {
    if (e.tag < 1 || e.tag > 3) throw DomainError("element tag must be 1, 2 or 3");
    for (auto v : e.vertices)
      if (v < 0 || static_cast<std::size_t>(v) >= m.vertices_.size()) throw DomainError("vertex index out of range");
  }
  m.box_ = bounding_box_of(m.vertices_);
  m.box_domain_ = false;
  m.serial_ = next_serial();
  m.build_topology();
  return m;
}

void Mesh::build_topology() {
  struct Entry {
    std::array<VertexId, 3> key;
    ElementId elem;
    std::int8_t local;
  };
  std::vector<Entry> entries;
  entries.reserve(elements_.size() * 4);
  for (ElementId t = 0; t < static_cast<ElementId>(elements_.size()); ++t) {
    const auto& v = elements_[t].vertices;
    for (int f = 0; f < 4; ++f) {
      std::array<VertexId, 3> key{v[kFaceVertices[f][0]], v[kFaceVertices[f][1]], v[kFaceVertices[f][2]]};
      std::sort(key.begin(), key.end());
      entries.push_back({key, t, static_cast<std::int8_t>(f)});
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.key != b.key) return a.key < b.key;
    return a.elem < b.elem;
  });

  faces_.clear();
  element_faces_.assign(elements_.size(), {-1, -1, -1, -1});
  for (std::size_t i = 0; i < entries.size();) {
    Face face;
    face.vertices = entries[i].key;
    face.elements[0] = entries[i].elem;
    face.local_face[0] = entries[i].local;
    std::size_t j = i + 1;
    if (j < entries.size() && entries[j].key == entries[i].key) {
      face.elements[1] = entries[j].elem;
      face.local_face[1] = entries[j].local;
      ++j;
      if (j < entries.size() && entries[j].key == entries[i].key)
        throw DomainError("face shared by more than two elements");
    }
    const auto id = static_cast<FaceId>(faces_.size());
    element_faces_[face.elements[0]][face.local_face[0]] = id;
    if (!face.boundary()) element_faces_[face.elements[1]][face.local_face[1]] = id;
    faces_.push_back(face);
    i = j;
  }

  boundary_vertex_.assign(vertices_.size(), 0);
  for (const auto& f : faces_) {
    if (!f.boundary()) continue;
    if (box_domain_ &&
        !face_on_box_boundary(box_, vertices_[f.vertices[0]], vertices_[f.vertices[1]], vertices_[f.vertices[2]]))
      continue;
    for (auto v : f.vertices) boundary_vertex_[v] = 1;
  }
}

ElementId Mesh::neighbor(ElementId t, int local_face) const {
  const auto& f = faces_[element_faces_[t][local_face]];
  return f.elements[0] == t ? f.elements[1] : f.elements[0];
}

ElementGeometry Mesh::geometry(ElementId t) const {
  const auto& v = elements_.at(t).vertices;
  return tetrahedron_geometry({vertices_[v[0]], vertices_[v[1]], vertices_[v[2]], vertices_[v[3]]});
}

ElementGeometry element_geometry(const Mesh& mesh, ElementId t) { return mesh.geometry(t); }

Vec3 Mesh::centroid(ElementId t) const {
  const auto& v = elements_[t].vertices;
  return 0.25 * (vertices_[v[0]] + vertices_[v[1]] + vertices_[v[2]] + vertices_[v[3]]);
}

Vec3 Mesh::outward_normal(ElementId t, int local_face) const {
  const auto g = geometry(t);
  const Vec3& grad = g.grad_barycentric[local_face];
  return (-1.0 / norm(grad)) * grad;
}

double Mesh::face_area(FaceId f) const {
  const auto& v = faces_[f].vertices;
  return 0.5 * norm(cross(vertices_[v[1]] - vertices_[v[0]], vertices_[v[2]] - vertices_[v[0]]));
}

double Mesh::face_diameter(FaceId f) const {
  const auto& v = faces_[f].vertices;
  return std::max({distance(vertices_[v[0]], vertices_[v[1]]), distance(vertices_[v[0]], vertices_[v[2]]),
                   distance(vertices_[v[1]], vertices_[v[2]])});
}

std::vector<ElementId> Mesh::patch(ElementId t) const {
  if (t < 0 || static_cast<std::size_t>(t) >= elements_.size()) throw DomainError("invalid element id");
  std::vector<ElementId> out{t};
  for (int f = 0; f < 4; ++f) {
    ElementId n = neighbor(t, f);
    if (n != kNoElement) out.push_back(n);
  }
  return out;
}

std::vector<ElementId> patch(const Mesh& mesh, ElementId t) { return mesh.patch(t); }

std::vector<ElementId> Mesh::face_patch(FaceId f) const {
  if (f < 0 || static_cast<std::size_t>(f) >= faces_.size()) throw DomainError("invalid face id");
  const auto& face = faces_[f];
  if (face.boundary()) return {face.elements[0]};
  return {face.elements[0], face.elements[1]};
}

QualityStats Mesh::quality() const {
  QualityStats q;
  q.h_min = std::numeric_limits<double>::max();
  for (ElementId t = 0; t < static_cast<ElementId>(elements_.size()); ++t) {
    const auto g = geometry(t);
    q.h_min = std::min(q.h_min, g.diameter);
    q.h_max = std::max(q.h_max, g.diameter);
    q.max_shape_ratio = std::max(q.max_shape_ratio, g.shape_ratio());
  }
  return q;
}

std::vector<double> Mesh::element_sizes() const {
  std::vector<double> h(elements_.size());
  for (std::size_t t = 0; t < elements_.size(); ++t) {
    const auto& v = elements_[t].vertices;
    double d = 0.0;
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) d = std::max(d, distance(vertices_[v[i]], vertices_[v[j]]));
    h[t] = d;
  }
  return h;
}

std::size_t Mesh::count_hanging_faces() const {
  std::size_t n = 0;
  if (!box_domain_) return 0;
  for (const auto& f : faces_) {
    if (!f.boundary()) continue;
    if (!face_on_box_boundary(box_, vertices_[f.vertices[0]], vertices_[f.vertices[1]], vertices_[f.vertices[2]])) ++n;
  }
  return n;
}

namespace {

// Working state of one bisection call: a forest of elements rooted at the
// input mesh's elements, plus vertex -> alive element incidence used to find
// the patch around a refinement edge.
class Refiner {
 public:
  Refiner(const Mesh& mesh, int max_depth) : max_depth_(max_depth), vertices_(mesh.vertices()) {
    const auto& elems = mesh.elements();
    nodes_.reserve(elems.size() * 2);
    incident_.resize(vertices_.size());
    for (ElementId t = 0; t < static_cast<ElementId>(elems.size()); ++t) {
      Node n;
      n.elem = elems[t];
      n.elem.parent = t;
      nodes_.push_back(n);
      for (auto v : n.elem.vertices) incident_[v].push_back(t);
    }
    roots_ = elems.size();
  }

  bool alive(int node) const { return nodes_[node].children[0] < 0; }

  void refine(int node, int depth) {
    if (depth > max_depth_)
      throw RefinementError("bisection closure exceeded depth bound " + std::to_string(max_depth_) +
                            " (inconsistent element tags)");
    const auto edge = nodes_[node].elem.refinement_edge();
    std::vector<int> ring;
    for (;;) {
      ring = elements_with_edge(edge[0], edge[1]);
      bool compatible = true;
      for (int other : ring) {
        if (!same_edge(nodes_[other].elem.refinement_edge(), edge)) {
          refine(other, depth + 1);
          compatible = false;
          break;
        }
      }
      if (compatible) break;
    }
    const auto mid = static_cast<VertexId>(vertices_.size());
    vertices_.push_back(0.5 * (vertices_[edge[0]] + vertices_[edge[1]]));
    incident_.emplace_back();
    for (int other : ring) split(other, mid);
  }

  // Leaves in depth-first order below each root; parent = root index.
  std::vector<Element> leaves() const {
    std::vector<Element> out;
    out.reserve(nodes_.size());
    std::vector<int> stack;
    for (std::size_t r = 0; r < roots_; ++r) {
      stack.push_back(static_cast<int>(r));
      while (!stack.empty()) {
        int n = stack.back();
        stack.pop_back();
        if (alive(n)) {
          Element e = nodes_[n].elem;
          e.parent = static_cast<ElementId>(r);
          out.push_back(e);
        } else {
          stack.push_back(nodes_[n].children[1]);
          stack.push_back(nodes_[n].children[0]);
        }
      }
    }
    return out;
  }

  // Alive descendants of root r (including r itself).
  void collect_leaves(int node, std::vector<int>& out) const {
    if (alive(node)) {
      out.push_back(node);
      return;
    }
    collect_leaves(nodes_[node].children[0], out);
    collect_leaves(nodes_[node].children[1], out);
  }

  const Element& element(int node) const { return nodes_[node].elem; }
  std::vector<Vec3> take_vertices() { return std::move(vertices_); }

 private:
  struct Node {
    Element elem;
    std::array<int, 2> children{-1, -1};
  };

  static bool same_edge(const std::array<VertexId, 2>& a, const std::array<VertexId, 2>& b) {
    return (a[0] == b[0] && a[1] == b[1]) || (a[0] == b[1] && a[1] == b[0]);
  }

  std::vector<int> elements_with_edge(VertexId a, VertexId b) const {
    std::vector<int> out;
    for (int n : incident_[a]) {
      const auto& v = nodes_[n].elem.vertices;
      if (std::find(v.begin(), v.end(), b) != v.end()) out.push_back(n);
    }
    return out;
  }

  void split(int node, VertexId mid) {
    const Element parent = nodes_[node].elem;
    const int k = parent.tag;
    const auto& x = parent.vertices;
    Element c0 = parent, c1 = parent;
    // First child replaces x_k by the midpoint; second drops x_0 and inserts
    // the midpoint after x_k.
    c0.vertices[k] = mid;
    int pos = 0;
    for (int i = 1; i <= k; ++i) c1.vertices[pos++] = x[i];
    c1.vertices[pos++] = mid;
    for (int i = k + 1; i < 4; ++i) c1.vertices[pos++] = x[i];
    const auto child_tag = static_cast<std::uint8_t>(k > 1 ? k - 1 : 3);
    c0.tag = c1.tag = child_tag;
    c0.generation = c1.generation = parent.generation + 1;

    for (auto v : x) {
      auto& inc = incident_[v];
      inc.erase(std::find(inc.begin(), inc.end(), node));
    }
    std::array<int, 2> ids{static_cast<int>(nodes_.size()), static_cast<int>(nodes_.size()) + 1};
    nodes_[node].children = ids;
    nodes_.push_back({c0, {-1, -1}});
    nodes_.push_back({c1, {-1, -1}});
    for (int c = 0; c < 2; ++c)
      for (auto v : nodes_[ids[c]].elem.vertices) incident_[v].push_back(ids[c]);
  }

  int max_depth_;
  std::vector<Vec3> vertices_;
  std::vector<Node> nodes_;
  std::vector<std::vector<int>> incident_;
  std::size_t roots_ = 0;
};

}  // namespace

Mesh Mesh::bisect(std::span<const ElementId> marked, const BisectOptions& options) const {
  if (options.bisections < 1) throw DomainError("bisections per marked element must be >= 1");
  std::vector<ElementId> roots(marked.begin(), marked.end());
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
  for (auto t : roots)
    if (t < 0 || static_cast<std::size_t>(t) >= elements_.size()) throw DomainError("marked element id out of range");

  Refiner refiner(*this, options.max_depth);
  for (int round = 0; round < options.bisections; ++round) {
    std::vector<int> targets;
    for (auto r : roots) {
      std::vector<int> leaves;
      refiner.collect_leaves(r, leaves);
      for (int n : leaves)
        if (refiner.element(n).generation < elements_[r].generation + round + 1) targets.push_back(n);
    }
    for (int n : targets)
      if (refiner.alive(n)) refiner.refine(n, 0);
  }

  Mesh out;
  out.elements_ = refiner.leaves();
  out.vertices_ = refiner.take_vertices();
  out.box_ = box_;
  out.box_domain_ = box_domain_;
  out.serial_ = next_serial();
  out.predecessor_serial_ = serial_;
  out.build_topology();
  return out;
}

Mesh build_box_mesh(const Box& box, std::array<int, 3> divisions) { return Mesh::box(box, divisions); }

Mesh bisect(const Mesh& mesh, std::span<const ElementId> marked, const BisectOptions& options) {
  return mesh.bisect(marked, options);
}

std::array<double, 4> barycentric(const Mesh& mesh, ElementId t, const Vec3& x) {
  const auto g = mesh.geometry(t);
  const Vec3 d = x - g.origin;
  std::array<double, 4> l{};
  l[1] = dot(g.grad_barycentric[1], d);
  l[2] = dot(g.grad_barycentric[2], d);
  l[3] = dot(g.grad_barycentric[3], d);
  l[0] = 1.0 - l[1] - l[2] - l[3];
  return l;
}

double nestedness_violation(const Mesh& coarse, const Mesh& fine) {
  if (fine.predecessor_serial() != coarse.serial()) throw DomainError("meshes are not nested");
  double worst = 0.0;
  for (ElementId t = 0; t < static_cast<ElementId>(fine.n_elements()); ++t) {
    const auto& e = fine.elements()[t];
    for (auto v : e.vertices) {
      const auto l = barycentric(coarse, e.parent, fine.vertices()[v]);
      for (double c : l) worst = std::max({worst, -c, c - 1.0});
    }
  }
  return worst;
}

}  // namespace afem
