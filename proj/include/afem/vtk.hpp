#pragma once

#include <map>
#include <string>
#include <vector>

#include "afem/fespace.hpp"

namespace afem {

/// Named scalar arrays attached to a mesh for export.
struct VtkData {
  std::map<std::string, std::vector<double>> cell;   // one value per element
  std::map<std::string, std::vector<double>> point;  // one value per vertex
};

/// Writes a legacy ASCII VTK unstructured grid (tetrahedra, cell type 10).
/// Element generations are always written as CELL_DATA "generation".
void write_vtk(const std::string& path, const Mesh& mesh, const VtkData& data = {});

/// Values of u at the mesh vertices (degree 2 functions are subsampled).
std::vector<double> vertex_values(const FEFunction& u);

/// Parsed content of a legacy ASCII unstructured grid.
struct VtkFile {
  std::vector<Vec3> points;
  std::vector<std::array<int, 4>> cells;
  VtkData data;
};

/// Reads files produced by write_vtk (throws Error on malformed input).
VtkFile read_vtk(const std::string& path);

}  // namespace afem
