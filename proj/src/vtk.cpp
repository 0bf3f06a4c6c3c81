#include "afem/vtk.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace afem {

namespace {

void write_scalars(std::ostream& os, const std::string& name, const std::vector<double>& v) {
  os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
  for (double x : v) os << x << '\n';
}

}  // namespace

void write_vtk(const std::string& path, const Mesh& mesh, const VtkData& data) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  os << std::setprecision(17);
  os << "# vtk DataFile Version 3.0\nafem mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << mesh.n_vertices() << " double\n";
  for (const auto& x : mesh.vertices()) os << x[0] << ' ' << x[1] << ' ' << x[2] << '\n';
  const auto ne = mesh.n_elements();
  os << "CELLS " << ne << ' ' << 5 * ne << '\n';
  for (const auto& e : mesh.elements())
    os << "4 " << e.vertices[0] << ' ' << e.vertices[1] << ' ' << e.vertices[2] << ' ' << e.vertices[3] << '\n';
  os << "CELL_TYPES " << ne << '\n';
  for (std::size_t t = 0; t < ne; ++t) os << "10\n";

  os << "CELL_DATA " << ne << '\n';
  std::vector<double> gen(ne);
  for (std::size_t t = 0; t < ne; ++t) gen[t] = mesh.elements()[t].generation;
  write_scalars(os, "generation", gen);
  for (const auto& [name, v] : data.cell) {
    if (v.size() != ne) throw Error("cell array '" + name + "' has wrong length");
    if (name != "generation") write_scalars(os, name, v);
  }
  if (!data.point.empty()) {
    os << "POINT_DATA " << mesh.n_vertices() << '\n';
    for (const auto& [name, v] : data.point) {
      if (v.size() != mesh.n_vertices()) throw Error("point array '" + name + "' has wrong length");
      write_scalars(os, name, v);
    }
  }
  if (!os) throw Error("write failed: " + path);
}

VtkFile read_vtk(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path);
  auto fail = [&](const std::string& what) { return Error(path + ": " + what); };
  std::string line;
  for (int i = 0; i < 4; ++i)
    if (!std::getline(is, line)) throw fail("truncated header");
  if (line.find("UNSTRUCTURED_GRID") == std::string::npos) throw fail("not an unstructured grid");

  VtkFile out;
  std::map<std::string, std::vector<double>>* section = nullptr;
  std::size_t section_size = 0;
  std::string key;
  while (is >> key) {
    if (key == "POINTS") {
      std::size_t n;
      std::string type;
      is >> n >> type;
      out.points.resize(n);
      for (auto& p : out.points) is >> p[0] >> p[1] >> p[2];
    } else if (key == "CELLS") {
      std::size_t n, total;
      is >> n >> total;
      out.cells.resize(n);
      for (auto& c : out.cells) {
        int k;
        is >> k;
        if (k != 4) throw fail("non-tetrahedral cell");
        is >> c[0] >> c[1] >> c[2] >> c[3];
      }
    } else if (key == "CELL_TYPES") {
      std::size_t n;
      is >> n;
      for (std::size_t i = 0; i < n; ++i) {
        int type;
        is >> type;
        if (type != 10) throw fail("unexpected cell type");
      }
    } else if (key == "CELL_DATA") {
      is >> section_size;
      section = &out.data.cell;
    } else if (key == "POINT_DATA") {
      is >> section_size;
      section = &out.data.point;
    } else if (key == "SCALARS") {
      if (!section) throw fail("SCALARS outside a data section");
      std::string name, type, lookup, table;
      int comps;
      is >> name >> type >> comps >> lookup >> table;
      auto& v = (*section)[name];
      v.resize(section_size);
      for (auto& x : v) is >> x;
    } else {
      throw fail("unknown keyword " + key);
    }
    if (!is) throw fail("malformed section " + key);
  }
  for (const auto& c : out.cells)
    for (int v : c)
      if (v < 0 || static_cast<std::size_t>(v) >= out.points.size()) throw fail("cell index out of range");
  return out;
}

std::vector<double> vertex_values(const FEFunction& u) {
  const Mesh& mesh = u.space->mesh();
  std::vector<double> out(mesh.n_vertices(), 0.0);
  for (std::size_t t = 0; t < mesh.n_elements(); ++t) {
    const auto dofs = u.space->element_dofs(static_cast<ElementId>(t));
    for (int i = 0; i < 4; ++i) out[mesh.elements()[t].vertices[i]] = u.coefficients[dofs[i]];
  }
  return out;
}

}  // namespace afem
