// vtk.hpp - legacy ASCII VTK (unstructured grid) writer for mixed solutions.
// Emits point data "velocity" (3-vector, zero-padded in 2D) and "pressure",
// plus optional per-element scalars such as mass-balance ratios or
// permeability. Files are written to a temporary name and renamed into place
// so readers never observe a partial file.

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "dflow/common.hpp"
#include "dflow/mesh.hpp"
#include "dflow/solver.hpp"

namespace dflow {

inline int vtk_cell_type(ElemType t) {
  switch (t) {
    case ElemType::T3: return 5;   // VTK_TRIANGLE
    case ElemType::Q4: return 9;   // VTK_QUAD
    case ElemType::Q9: return 28;  // VTK_BIQUADRATIC_QUAD
    case ElemType::B8: return 12;  // VTK_HEXAHEDRON
  }
  throw InvalidArgumentError("bad element type");
}

// Local-node permutation from our ordering to VTK's: position i of the VTK
// cell is our local node perm[i]. Only the biquadratic quad differs (VTK
// wants corners, then edge midpoints, then center; we store a row-major
// lattice).
inline const std::vector<int>& vtk_permutation(ElemType t) {
  static const std::vector<int> t3 = {0, 1, 2};
  static const std::vector<int> q4 = {0, 1, 2, 3};
  static const std::vector<int> q9 = {0, 2, 8, 6, 1, 5, 7, 3, 4};
  static const std::vector<int> b8 = {0, 1, 2, 3, 4, 5, 6, 7};
  switch (t) {
    case ElemType::T3: return t3;
    case ElemType::Q4: return q4;
    case ElemType::Q9: return q9;
    case ElemType::B8: return b8;
  }
  throw InvalidArgumentError("bad element type");
}

namespace detail {

inline std::string vtk_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace detail

inline void write_vtk(const std::string& path, const Mesh& mesh, const MixedSolution& sol,
                      const std::map<std::string, VecX>& cell_data = {},
                      const std::string& title = "generalized Darcy flow solution") {
  if (sol.v.rows() != mesh.n_nodes() || sol.p.size() != mesh.n_nodes())
    throw InvalidArgumentError("write_vtk: solution size does not match mesh");
  for (const auto& [name, values] : cell_data)
    if (values.size() != mesh.n_elems())
      throw InvalidArgumentError("write_vtk: cell data '" + name + "' has wrong length");

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error("cannot open '" + tmp + "' for writing");
    const int nn = mesh.n_nodes(), ne = mesh.n_elems(), npe = mesh.nodes_per_elem();

    out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\n";
    out << "DATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << nn << " double\n";
    for (const auto& x : mesh.node_coords)
      out << detail::vtk_num(x.x()) << " " << detail::vtk_num(x.y()) << " "
          << detail::vtk_num(x.z()) << "\n";

    const auto& perm = vtk_permutation(mesh.elem_type);
    out << "CELLS " << ne << " " << ne * (npe + 1) << "\n";
    for (int e = 0; e < ne; ++e) {
      out << npe;
      for (int a = 0; a < npe; ++a) out << " " << mesh.connectivity[e][perm[a]];
      out << "\n";
    }
    out << "CELL_TYPES " << ne << "\n";
    for (int e = 0; e < ne; ++e) out << vtk_cell_type(mesh.elem_type) << "\n";

    out << "POINT_DATA " << nn << "\n";
    out << "VECTORS velocity double\n";
    for (int n = 0; n < nn; ++n) {
      for (int c = 0; c < 3; ++c)
        out << (c ? " " : "") << detail::vtk_num(c < mesh.dim ? sol.v(n, c) : 0.0);
      out << "\n";
    }
    out << "SCALARS pressure double\nLOOKUP_TABLE default\n";
    for (int n = 0; n < nn; ++n) out << detail::vtk_num(sol.p[n]) << "\n";

    if (!cell_data.empty()) {
      out << "CELL_DATA " << ne << "\n";
      for (const auto& [name, values] : cell_data) {
        out << "SCALARS " << name << " double\nLOOKUP_TABLE default\n";
        for (int e = 0; e < ne; ++e) out << detail::vtk_num(values[e]) << "\n";
      }
    }
    if (!out) throw Error("write failure on '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace dflow
