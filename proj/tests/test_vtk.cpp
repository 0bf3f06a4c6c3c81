#include <doctest.h>

#include <filesystem>

#include "afem/vtk.hpp"

using namespace afem;

TEST_CASE("VTK round trip") {
  const Mesh coarse = Mesh::box(Box{{0, 0, 0}, {2, 1, 1}}, {2, 1, 1});
  const std::vector<ElementId> marked{0, 3};
  const Mesh mesh = coarse.bisect(marked);
  VtkData data;
  std::vector<double> eta(mesh.n_elements());
  for (std::size_t t = 0; t < eta.size(); ++t) eta[t] = 0.125 * static_cast<double>(t) + 1.0 / 3.0;
  data.cell["eta"] = eta;
  std::vector<double> u(mesh.n_vertices());
  for (std::size_t v = 0; v < u.size(); ++v) u[v] = mesh.vertices()[v][0] * 0.1;
  data.point["u"] = u;
  const auto path = (std::filesystem::temp_directory_path() / "afem_roundtrip.vtk").string();
  write_vtk(path, mesh, data);
  const VtkFile f = read_vtk(path);
  REQUIRE(f.points.size() == mesh.n_vertices());
  REQUIRE(f.cells.size() == mesh.n_elements());
  for (std::size_t v = 0; v < f.points.size(); ++v) CHECK(distance(f.points[v], mesh.vertices()[v]) < 1e-15);
  for (std::size_t t = 0; t < f.cells.size(); ++t)
    for (int i = 0; i < 4; ++i) CHECK(f.cells[t][i] == mesh.elements()[t].vertices[i]);
  REQUIRE(f.data.cell.count("eta"));
  REQUIRE(f.data.cell.count("generation"));
  REQUIRE(f.data.point.count("u"));
  for (std::size_t t = 0; t < eta.size(); ++t) {
    CHECK(f.data.cell.at("eta")[t] == eta[t]);
    CHECK(f.data.cell.at("generation")[t] == mesh.elements()[t].generation);
  }
  for (std::size_t v = 0; v < u.size(); ++v) CHECK(f.data.point.at("u")[v] == u[v]);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_vtk("/nonexistent/file.vtk"), Error);
}

TEST_CASE("vertex values subsample degree 2 functions") {
  auto mesh = std::make_shared<const Mesh>(Mesh::box(Box{{0, 0, 0}, {1, 1, 1}}, {2, 2, 2}));
  for (int degree : {1, 2}) {
    const FEFunction u = interpolate([](const Vec3& x) { return x[0] * x[1] + x[2]; }, build_space(mesh, degree));
    const auto vals = vertex_values(u);
    for (std::size_t v = 0; v < vals.size(); ++v) {
      const Vec3& x = mesh->vertices()[v];
      CHECK(vals[v] == doctest::Approx(x[0] * x[1] + x[2]).epsilon(1e-14));
    }
  }
}
