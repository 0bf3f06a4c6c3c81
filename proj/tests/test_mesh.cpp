#include <doctest.h>

#include <algorithm>
#include <map>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "afem/mesh.hpp"

using namespace afem;

namespace {

Box unit_box() { return Box{{0, 0, 0}, {1, 1, 1}}; }

std::vector<ElementId> all_ids(const Mesh& m) {
  std::vector<ElementId> ids(m.n_elements());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<ElementId>(i);
  return ids;
}

// Brute-force conformity audit: every face is either shared by exactly two
// elements or lies on the box boundary, and no vertex lies strictly inside an
// edge of any element (hanging node).
bool brute_force_conforming(const Mesh& m) {
  std::map<std::array<VertexId, 3>, int> count;
  for (const auto& e : m.elements()) {
    for (int f = 0; f < 4; ++f) {
      std::array<VertexId, 3> key;
      int k = 0;
      for (int i = 0; i < 4; ++i)
        if (i != f) key[k++] = e.vertices[i];
      std::sort(key.begin(), key.end());
      ++count[key];
    }
  }
  const Box& b = m.bounding_box();
  for (const auto& [key, c] : count) {
    if (c > 2) return false;
    if (c == 1) {
      bool on_plane = false;
      for (int d = 0; d < 3; ++d)
        for (double p : {b.lo[d], b.hi[d]}) {
          bool all = true;
          for (auto v : key) all = all && m.vertices()[v][d] == p;
          on_plane = on_plane || all;
        }
      if (!on_plane) return false;
    }
  }
  // Midpoint test: every element edge midpoint that exists as a vertex would
  // be a hanging node.
  std::map<std::array<double, 3>, VertexId> by_coord;
  for (VertexId v = 0; v < static_cast<VertexId>(m.n_vertices()); ++v) by_coord[m.vertices()[v]] = v;
  for (const auto& e : m.elements())
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) {
        const auto mid = 0.5 * (m.vertices()[e.vertices[i]] + m.vertices()[e.vertices[j]]);
        if (by_coord.count(mid)) return false;
      }
  return true;
}

}  // namespace

TEST_CASE("box mesh element counts") {
  auto m = build_box_mesh(unit_box(), {1, 1, 1});
  CHECK(m.n_elements() == 6);
  CHECK(m.n_vertices() == 8);
  CHECK(m.is_conforming());

  auto big = build_box_mesh(Box{{-8, -6, -4}, {8, 6, 4}}, {8, 6, 4});
  CHECK(big.n_elements() == 1152);
  CHECK(big.is_conforming());
}

TEST_CASE("degenerate box rejected") {
  CHECK_THROWS_AS(build_box_mesh(Box{{0, 0, 0}, {1, 0, 1}}, {1, 1, 1}), DomainError);
  CHECK_THROWS_AS(build_box_mesh(unit_box(), {0, 1, 1}), DomainError);
}

TEST_CASE("Kuhn elements are congruent") {
  auto m = build_box_mesh(Box{{0, 0, 0}, {2, 1, 1}}, {2, 1, 1});
  REQUIRE(m.n_elements() == 12);
  const double q0 = m.geometry(0).shape_ratio();
  for (ElementId t = 0; t < 12; ++t) {
    // Independent oracle: longest edge and 6V/S from raw coordinates.
    const auto& v = m.elements()[t].vertices;
    std::array<Vec3, 4> x;
    for (int i = 0; i < 4; ++i) x[i] = m.vertices()[v[i]];
    double h = 0;
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) h = std::max(h, distance(x[i], x[j]));
    const double vol = std::abs(dot(x[1] - x[0], cross(x[2] - x[0], x[3] - x[0]))) / 6.0;
    double s = 0;
    for (int f = 0; f < 4; ++f) {
      std::vector<Vec3> p;
      for (int i = 0; i < 4; ++i)
        if (i != f) p.push_back(x[i]);
      s += 0.5 * norm(cross(p[1] - p[0], p[2] - p[0]));
    }
    CHECK(h / (6 * vol / s) == doctest::Approx(q0).epsilon(1e-13));
  }
}

TEST_CASE("reference tetrahedron geometry") {
  auto g = tetrahedron_geometry({Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}});
  CHECK(g.volume == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(g.diameter == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(g.inball_diameter == doctest::Approx(2.0 / (3.0 + std::sqrt(3.0))).epsilon(1e-14));

  auto g2 = tetrahedron_geometry({Vec3{0, 0, 0}, Vec3{2, 0, 0}, Vec3{0, 2, 0}, Vec3{0, 0, 2}});
  CHECK(g2.volume == doctest::Approx(8 * g.volume));
  CHECK(g2.diameter == doctest::Approx(2 * g.diameter));
  CHECK(g2.inball_diameter == doctest::Approx(2 * g.inball_diameter));

  CHECK_THROWS_AS(tetrahedron_geometry({Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{1, 1, 0}}), DomainError);
}

TEST_CASE("shape ratio bounded below by the regular tetrahedron") {
  // Regular tetrahedron with unit edge: h = 1, V = 1/(6 sqrt 2), S = sqrt 3.
  const double regular = 1.0 / (6.0 * (1.0 / (6.0 * std::sqrt(2.0))) / std::sqrt(3.0));
  auto m = build_box_mesh(unit_box(), {2, 2, 2});
  std::mt19937 rng(3);
  for (int round = 0; round < 4; ++round) {
    for (ElementId t = 0; t < static_cast<ElementId>(m.n_elements()); ++t)
      CHECK(m.geometry(t).shape_ratio() >= regular - 1e-12);
    std::vector<ElementId> marked{static_cast<ElementId>(rng() % m.n_elements())};
    m = m.bisect(marked);
  }
}

TEST_CASE("bisecting an isolated tetrahedron halves the volume") {
  Element e;
  e.vertices = {0, 1, 2, 3};
  e.tag = 3;
  auto m = Mesh::from_elements({Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{1, 1, 0}, Vec3{1, 1, 1}}, {e});
  std::vector<ElementId> marked{0};
  auto fine = m.bisect(marked);
  REQUIRE(fine.n_elements() == 2);
  const double v = m.geometry(0).volume;
  for (ElementId t = 0; t < 2; ++t) {
    CHECK(fine.geometry(t).volume == doctest::Approx(v / 2));
    CHECK(fine.elements()[t].generation == 1);
    CHECK(fine.elements()[t].parent == 0);
  }
}

TEST_CASE("single marked element closes to a conforming mesh") {
  auto m = build_box_mesh(unit_box(), {1, 1, 1});
  for (ElementId t = 0; t < 6; ++t) {
    std::vector<ElementId> marked{t};
    auto fine = m.bisect(marked);
    CHECK(fine.n_elements() >= 7);
    CHECK(fine.is_conforming());
    CHECK(brute_force_conforming(fine));
    CHECK(nestedness_violation(m, fine) <= 1e-12);
  }
}

TEST_CASE("three uniform sweeps multiply elements by 8 and halve h") {
  auto m = build_box_mesh(unit_box(), {2, 1, 1});
  for (int cycle = 0; cycle < 2; ++cycle) {
    const auto n0 = m.n_elements();
    const auto h0 = m.quality().h_max;
    for (int s = 0; s < 3; ++s) {
      auto ids = all_ids(m);
      m = m.bisect(ids);
    }
    CHECK(m.n_elements() == 8 * n0);
    CHECK(m.quality().h_max == doctest::Approx(h0 / 2).epsilon(1e-14));
    CHECK(brute_force_conforming(m));
  }
}

TEST_CASE("shape ratio stabilises under uniform refinement") {
  auto m = build_box_mesh(unit_box(), {1, 1, 1});
  std::vector<double> maxima;
  std::set<long long> classes;
  for (int round = 0; round < 10; ++round) {
    auto ids = all_ids(m);
    m = m.bisect(ids);
    maxima.push_back(m.quality().max_shape_ratio);
    for (ElementId t = 0; t < static_cast<ElementId>(m.n_elements()); ++t)
      classes.insert(std::llround(m.geometry(t).shape_ratio() * 1e9));
  }
  // Running maximum over rounds is attained within the first three rounds.
  const double first_three = *std::max_element(maxima.begin(), maxima.begin() + 3);
  for (std::size_t r = 3; r < maxima.size(); ++r) CHECK(maxima[r] <= first_three * (1 + 1e-12));
  CHECK(classes.size() <= 8);
}

TEST_CASE("randomised mark and refine keeps conformity") {
  auto m = build_box_mesh(unit_box(), {1, 1, 1});
  std::mt19937 rng(42);
  for (int it = 0; it < 60; ++it) {
    std::vector<ElementId> marked;
    const int k = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < k; ++i) marked.push_back(static_cast<ElementId>(rng() % m.n_elements()));
    auto fine = m.bisect(marked);
    REQUIRE(fine.is_conforming());
    CHECK(nestedness_violation(m, fine) <= 1e-12);
    for (auto t : marked) {
      // every marked element was bisected at least once
      bool split = false;
      for (const auto& e : fine.elements())
        if (e.parent == t && e.generation > m.elements()[t].generation) split = true;
      CHECK(split);
    }
    m = std::move(fine);
  }
  CHECK(brute_force_conforming(m));
}

TEST_CASE("multiple bisections per marked element") {
  auto m = build_box_mesh(unit_box(), {1, 1, 1});
  std::vector<ElementId> marked{2};
  auto fine = m.bisect(marked, BisectOptions{3, 64});
  int max_gen = 0;
  for (const auto& e : fine.elements())
    if (e.parent == 2) max_gen = std::max(max_gen, e.generation);
  CHECK(max_gen == 3);
  CHECK(fine.is_conforming());
}

TEST_CASE("closure depth bound") {
  // After one local refinement some refinement edges are shared with elements
  // of a different refinement edge, so the closure must recurse.
  auto m = build_box_mesh(unit_box(), {2, 2, 2});
  std::vector<ElementId> first{0};
  m = m.bisect(first);
  int thrown = 0;
  for (ElementId t = 0; t < static_cast<ElementId>(m.n_elements()); ++t) {
    std::vector<ElementId> marked{t};
    try {
      (void)m.bisect(marked, BisectOptions{1, 0});
    } catch (const RefinementError&) {
      ++thrown;
    }
  }
  CHECK(thrown > 0);
}

TEST_CASE("patches") {
  auto m = build_box_mesh(unit_box(), {3, 3, 3});
  int interior_found = 0, two_boundary = 0;
  for (ElementId t = 0; t < static_cast<ElementId>(m.n_elements()); ++t) {
    int nb = 0;
    for (int f = 0; f < 4; ++f) nb += m.faces()[m.element_faces(t)[f]].boundary();
    const auto p = m.patch(t);
    if (nb == 0) {
      CHECK(p.size() == 5);
      ++interior_found;
    }
    if (nb == 2) {
      CHECK(p.size() == 3);
      ++two_boundary;
    }
  }
  CHECK(interior_found > 0);
  CHECK(two_boundary > 0);
  for (FaceId f = 0; f < static_cast<FaceId>(m.n_faces()); ++f) {
    const auto& face = m.faces()[f];
    CHECK(m.face_patch(f).size() == (face.boundary() ? 1u : 2u));
    if (!face.boundary()) {
      const auto n0 = m.outward_normal(face.elements[0], face.local_face[0]);
      const auto n1 = m.outward_normal(face.elements[1], face.local_face[1]);
      CHECK(norm(n0 + n1) < 1e-12);
    }
  }
  CHECK_THROWS_AS(m.patch(-1), DomainError);
}

TEST_CASE("mesh size is monotone under refinement") {
  auto coarse = build_box_mesh(unit_box(), {2, 2, 2});
  std::mt19937 rng(7);
  for (int it = 0; it < 8; ++it) {
    std::vector<ElementId> marked;
    for (int i = 0; i < 5; ++i) marked.push_back(static_cast<ElementId>(rng() % coarse.n_elements()));
    auto fine = coarse.bisect(marked);
    const auto hc = coarse.element_sizes();
    const auto hf = fine.element_sizes();
    for (ElementId t = 0; t < static_cast<ElementId>(fine.n_elements()); ++t)
      CHECK(hf[t] <= hc[fine.elements()[t].parent] + 1e-14);
    coarse = std::move(fine);
  }
}
