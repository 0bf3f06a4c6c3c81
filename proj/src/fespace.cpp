#include "afem/fespace.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "afem/parallel.hpp"

namespace afem {

namespace basis {

void values(int degree, const std::array<double, 4>& l, double* out) {
  if (degree == 1) {
    for (int i = 0; i < 4; ++i) out[i] = l[i];
    return;
  }
  for (int i = 0; i < 4; ++i) out[i] = l[i] * (2.0 * l[i] - 1.0);
  for (int e = 0; e < 6; ++e) out[4 + e] = 4.0 * l[kEdges[e][0]] * l[kEdges[e][1]];
}

void barycentric_derivatives(int degree, const std::array<double, 4>& l, std::array<double, 4>* out) {
  const int n = count(degree);
  for (int i = 0; i < n; ++i) out[i] = {0.0, 0.0, 0.0, 0.0};
  if (degree == 1) {
    for (int i = 0; i < 4; ++i) out[i][i] = 1.0;
    return;
  }
  for (int i = 0; i < 4; ++i) out[i][i] = 4.0 * l[i] - 1.0;
  for (int e = 0; e < 6; ++e) {
    const int a = kEdges[e][0], b = kEdges[e][1];
    out[4 + e][a] = 4.0 * l[b];
    out[4 + e][b] = 4.0 * l[a];
  }
}

void gradients(int degree, const std::array<double, 4>& l, const std::array<Vec3, 4>& grad_lambda, Vec3* out) {
  std::array<std::array<double, 4>, 10> d;
  barycentric_derivatives(degree, l, d.data());
  const int n = count(degree);
  for (int i = 0; i < n; ++i) {
    Vec3 g{0.0, 0.0, 0.0};
    for (int k = 0; k < 4; ++k) g = g + d[i][k] * grad_lambda[k];
    out[i] = g;
  }
}

void laplacians(int degree, const std::array<Vec3, 4>& grad_lambda, double* out) {
  const int n = count(degree);
  if (degree == 1) {
    for (int i = 0; i < n; ++i) out[i] = 0.0;
    return;
  }
  for (int i = 0; i < 4; ++i) out[i] = 4.0 * dot(grad_lambda[i], grad_lambda[i]);
  for (int e = 0; e < 6; ++e) out[4 + e] = 8.0 * dot(grad_lambda[kEdges[e][0]], grad_lambda[kEdges[e][1]]);
}

std::array<double, 4> node(int degree, int i) {
  std::array<double, 4> l{0.0, 0.0, 0.0, 0.0};
  if (i < 4) {
    l[i] = 1.0;
  } else {
    (void)degree;
    l[kEdges[i - 4][0]] = 0.5;
    l[kEdges[i - 4][1]] = 0.5;
  }
  return l;
}

}  // namespace basis

namespace {

std::uint64_t edge_key(VertexId a, VertexId b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

}  // namespace

FESpace::FESpace(std::shared_ptr<const Mesh> mesh, int degree, QuadratureOptions quad)
    : mesh_(std::move(mesh)), degree_(degree) {
  if (degree != 1 && degree != 2) throw DomainError("only degrees 1 and 2 are supported");
  if (!mesh_ || mesh_->n_elements() == 0) throw DomainError("empty mesh");
  if (!mesh_->is_conforming()) throw DomainError("mesh is not conforming");

  const auto& m = *mesh_;
  const std::size_t ne = m.n_elements();
  const int nloc = dofs_per_element();
  dof_map_.assign(ne * nloc, -1);
  for (std::size_t t = 0; t < ne; ++t)
    for (int i = 0; i < 4; ++i) dof_map_[t * nloc + i] = m.elements()[t].vertices[i];
  n_dofs_ = m.n_vertices();

  std::vector<std::uint64_t> edge_keys;
  if (degree_ == 2) {
    edge_keys.reserve(ne * 6);
    for (const auto& e : m.elements())
      for (const auto& le : basis::kEdges) edge_keys.push_back(edge_key(e.vertices[le[0]], e.vertices[le[1]]));
    std::sort(edge_keys.begin(), edge_keys.end());
    edge_keys.erase(std::unique(edge_keys.begin(), edge_keys.end()), edge_keys.end());
    n_edges_ = edge_keys.size();
    for (std::size_t t = 0; t < ne; ++t) {
      const auto& v = m.elements()[t].vertices;
      for (int le = 0; le < 6; ++le) {
        const auto key = edge_key(v[basis::kEdges[le][0]], v[basis::kEdges[le][1]]);
        const auto pos = std::lower_bound(edge_keys.begin(), edge_keys.end(), key) - edge_keys.begin();
        dof_map_[t * nloc + 4 + le] = static_cast<DofId>(m.n_vertices() + pos);
      }
    }
    n_dofs_ += n_edges_;
  }

  nodes_.resize(n_dofs_);
  for (std::size_t v = 0; v < m.n_vertices(); ++v) nodes_[v] = m.vertices()[v];
  for (std::uint64_t k = 0; k < n_edges_; ++k) {
    const auto a = static_cast<VertexId>(edge_keys[k] >> 32);
    const auto b = static_cast<VertexId>(edge_keys[k] & 0xffffffffu);
    nodes_[m.n_vertices() + k] = 0.5 * (m.vertices()[a] + m.vertices()[b]);
  }

  boundary_.assign(n_dofs_, 0);
  for (const auto& f : m.faces()) {
    if (!f.boundary()) continue;
    for (auto v : f.vertices) boundary_[v] = 1;
    if (degree_ == 2) {
      for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b) {
          const auto key = edge_key(f.vertices[a], f.vertices[b]);
          const auto pos = std::lower_bound(edge_keys.begin(), edge_keys.end(), key) - edge_keys.begin();
          boundary_[m.n_vertices() + pos] = 1;
        }
    }
  }
  interior_index_.assign(n_dofs_, -1);
  for (std::size_t d = 0; d < n_dofs_; ++d) {
    if (boundary_[d]) {
      boundary_dofs_.push_back(static_cast<DofId>(d));
    } else {
      interior_index_[d] = static_cast<DofId>(interior_dofs_.size());
      interior_dofs_.push_back(static_cast<DofId>(d));
    }
  }

  volume_rule_ = tetrahedron_rule(quad.volume_degree >= 0 ? quad.volume_degree : 2 * degree_ + 2);
  face_rule_ = triangle_rule(quad.face_degree >= 0 ? quad.face_degree : 2 * degree_);
  volume_basis_.resize(volume_rule_.size() * nloc);
  for (std::size_t q = 0; q < volume_rule_.size(); ++q)
    basis::values(degree_, volume_rule_.points[q], volume_basis_.data() + q * nloc);
}

const SparsityPattern& FESpace::pattern() const {
  std::call_once(pattern_once_, [this] {
    const int nloc = dofs_per_element();
    std::vector<std::vector<int>> rows(n_dofs_);
    for (std::size_t t = 0; t < mesh_->n_elements(); ++t) {
      const auto d = element_dofs(static_cast<ElementId>(t));
      for (int i = 0; i < nloc; ++i)
        for (int j = 0; j < nloc; ++j) rows[d[i]].push_back(d[j]);
    }
    pattern_.row_ptr.assign(n_dofs_ + 1, 0);
    for (std::size_t r = 0; r < n_dofs_; ++r) {
      auto& row = rows[r];
      std::sort(row.begin(), row.end());
      row.erase(std::unique(row.begin(), row.end()), row.end());
      pattern_.row_ptr[r + 1] = pattern_.row_ptr[r] + static_cast<int>(row.size());
    }
    pattern_.cols.reserve(pattern_.row_ptr.back());
    for (auto& row : rows) {
      pattern_.cols.insert(pattern_.cols.end(), row.begin(), row.end());
      std::vector<int>().swap(row);
    }
  });
  return pattern_;
}

std::shared_ptr<const FESpace> build_space(std::shared_ptr<const Mesh> mesh, int degree, QuadratureOptions quad) {
  return std::make_shared<const FESpace>(std::move(mesh), degree, quad);
}

FEFunction interpolate(const ScalarField& f, std::shared_ptr<const FESpace> space) {
  FEFunction u(space);
  const auto n = space->n_dofs();
  parallel_for(n, [&](std::size_t d) { u.coefficients(static_cast<Eigen::Index>(d)) = f(space->dof_node(static_cast<DofId>(d))); });
  for (std::size_t d = 0; d < n; ++d)
    if (!std::isfinite(u.coefficients(static_cast<Eigen::Index>(d))))
      throw DomainError("non-finite value at interpolation node " + std::to_string(d));
  return u;
}

PointEvaluation evaluate(const FEFunction& u, ElementId t, std::span<const std::array<double, 4>> points) {
  const auto& space = *u.space;
  const int deg = space.degree();
  const int n = space.dofs_per_element();
  const auto g = space.mesh().geometry(t);
  const auto dofs = space.element_dofs(t);
  PointEvaluation out;
  out.values.reserve(points.size());
  out.gradients.reserve(points.size());
  std::array<double, 10> phi;
  std::array<Vec3, 10> grad;
  for (const auto& l : points) {
    basis::values(deg, l, phi.data());
    basis::gradients(deg, l, g.grad_barycentric, grad.data());
    double v = 0.0;
    Vec3 gr{0.0, 0.0, 0.0};
    for (int i = 0; i < n; ++i) {
      const double c = u.coefficients(dofs[i]);
      v += c * phi[i];
      gr = gr + c * grad[i];
    }
    out.values.push_back(v);
    out.gradients.push_back(gr);
  }
  return out;
}

FEFunction transfer(const FEFunction& u, std::shared_ptr<const FESpace> target) {
  const auto& src = *u.space;
  const Mesh& coarse = src.mesh();
  const Mesh& fine = target->mesh();
  const bool same = fine.serial() == coarse.serial();
  if (!same && fine.predecessor_serial() != coarse.serial())
    throw DomainError("transfer requires the target mesh to be a refinement of the source mesh");
  FEFunction out(target);
  const int deg_t = target->degree();
  const int deg_s = src.degree();
  const int nt = target->dofs_per_element();
  const int ns = src.dofs_per_element();
  std::vector<char> done(target->n_dofs(), 0);
  std::array<double, 10> phi;
  for (ElementId t = 0; t < static_cast<ElementId>(fine.n_elements()); ++t) {
    const ElementId parent = same ? t : fine.elements()[t].parent;
    const auto dofs_t = target->element_dofs(t);
    const auto dofs_s = src.element_dofs(parent);
    for (int i = 0; i < nt; ++i) {
      const DofId d = dofs_t[i];
      if (done[d]) continue;
      done[d] = 1;
      const auto l = barycentric(coarse, parent, target->dof_node(d));
      basis::values(deg_s, l, phi.data());
      double v = 0.0;
      for (int j = 0; j < ns; ++j) v += phi[j] * u.coefficients(dofs_s[j]);
      out.coefficients(d) = v;
    }
  }
  (void)deg_t;
  return out;
}

std::vector<Vec3> quadrature_points(const FESpace& space, ElementId t) {
  const auto& rule = space.volume_rule();
  const auto& v = space.mesh().elements()[t].vertices;
  const auto& x = space.mesh().vertices();
  std::vector<Vec3> pts(rule.size());
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const auto& l = rule.points[q];
    pts[q] = l[0] * x[v[0]] + l[1] * x[v[1]] + l[2] * x[v[2]] + l[3] * x[v[3]];
  }
  return pts;
}

QuadField values_at_quadrature(const FEFunction& u) {
  const auto& space = *u.space;
  const std::size_t ne = space.mesh().n_elements();
  const std::size_t nq = space.volume_rule().size();
  const int n = space.dofs_per_element();
  const auto& table = space.volume_basis();
  QuadField f(ne, nq);
  parallel_for(ne, [&](std::size_t t) {
    const auto dofs = space.element_dofs(static_cast<ElementId>(t));
    for (std::size_t q = 0; q < nq; ++q) {
      double v = 0.0;
      for (int i = 0; i < n; ++i) v += table[q * n + i] * u.coefficients(dofs[i]);
      f(t, q) = v;
    }
  });
  return f;
}

QuadField sample_at_quadrature(const FESpace& space, const ScalarField& fn) {
  const std::size_t ne = space.mesh().n_elements();
  const std::size_t nq = space.volume_rule().size();
  QuadField f(ne, nq);
  parallel_for(ne, [&](std::size_t t) {
    const auto pts = quadrature_points(space, static_cast<ElementId>(t));
    for (std::size_t q = 0; q < nq; ++q) f(t, q) = fn(pts[q]);
  });
  return f;
}

double integrate(const FESpace& space, const QuadField& f) {
  const auto& w = space.volume_rule().weights;
  double total = 0.0;
  for (std::size_t t = 0; t < f.n_elements; ++t) {
    const double vol = space.mesh().geometry(static_cast<ElementId>(t)).volume;
    double s = 0.0;
    for (std::size_t q = 0; q < f.n_points; ++q) s += w[q] * f(t, q);
    total += vol * s;
  }
  return total;
}

namespace {

// Per element: {int u^2, int |grad u|^2}.
std::vector<std::array<double, 2>> element_norm_parts(const FEFunction& u) {
  const auto& space = *u.space;
  const auto& rule = space.volume_rule();
  const std::size_t ne = space.mesh().n_elements();
  std::vector<std::array<double, 2>> parts(ne);
  parallel_for(ne, [&](std::size_t t) {
    const auto ev = evaluate(u, static_cast<ElementId>(t), rule.points);
    const double vol = space.mesh().geometry(static_cast<ElementId>(t)).volume;
    double a = 0.0, b = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      a += rule.weights[q] * ev.values[q] * ev.values[q];
      b += rule.weights[q] * dot(ev.gradients[q], ev.gradients[q]);
    }
    parts[t] = {a * vol, b * vol};
  });
  return parts;
}

}  // namespace

double l2_norm(const FEFunction& u) {
  double s = 0.0;
  for (const auto& p : element_norm_parts(u)) s += p[0];
  return std::sqrt(s);
}

double h1_seminorm(const FEFunction& u) {
  double s = 0.0;
  for (const auto& p : element_norm_parts(u)) s += p[1];
  return std::sqrt(s);
}

double h1_norm(const FEFunction& u) {
  double s = 0.0;
  for (const auto& p : element_norm_parts(u)) s += p[0] + p[1];
  return std::sqrt(s);
}

std::vector<double> element_h1_norms_squared(const FEFunction& u) {
  const auto parts = element_norm_parts(u);
  std::vector<double> out(parts.size());
  for (std::size_t t = 0; t < parts.size(); ++t) out[t] = parts[t][0] + parts[t][1];
  return out;
}

std::array<double, 4> face_to_element(const Mesh& mesh, ElementId t, int local_face,
                                      const std::array<double, 4>& face_bary) {
  const auto& e = mesh.elements()[t];
  const auto& face = mesh.faces()[mesh.element_faces(t)[local_face]];
  std::array<double, 4> l{0.0, 0.0, 0.0, 0.0};
  for (int i = 0; i < 4; ++i) {
    if (i == local_face) continue;
    for (int k = 0; k < 3; ++k)
      if (face.vertices[k] == e.vertices[i]) l[i] = face_bary[k];
  }
  return l;
}

}  // namespace afem
