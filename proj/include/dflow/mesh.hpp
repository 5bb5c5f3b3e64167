// mesh.hpp - structured mesh generation over axis-aligned boxes.
//
// Element zoo: T3 (linear triangle), Q4 (bilinear quad), Q9 (biquadratic
// quad, tensor-product Lagrange node ordering), B8 (trilinear brick).
// Boundary facets are tagged by the side of the box they lie on:
//   2D: left/right (x-), bottom/top (y-)
//   3D: left/right (x-), front/back (y-), bottom/top (z-)
// carve_holes() removes grid-aligned boxes of elements and tags the facets it
// exposes as "impervious".

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dflow/common.hpp"

namespace dflow {

enum class ElemType { T3, Q4, Q9, B8 };

inline int elem_dim(ElemType t) {
  return t == ElemType::B8 ? 3 : 2;
}

inline int elem_node_count(ElemType t) {
  switch (t) {
    case ElemType::T3: return 3;
    case ElemType::Q4: return 4;
    case ElemType::Q9: return 9;
    case ElemType::B8: return 8;
  }
  throw UnsupportedElementError("unknown element type");
}

// Local node ids of each facet. 2D edges are listed counter-clockwise so the
// outward normal is the tangent rotated by -90 degrees; B8 faces are ordered
// so t1 x t2 points outward.
inline const std::vector<std::vector<int>>& elem_facets(ElemType t) {
  static const std::vector<std::vector<int>> t3 = {{0, 1}, {1, 2}, {2, 0}};
  static const std::vector<std::vector<int>> q4 = {{0, 1}, {1, 2}, {2, 3}, {3, 0}};
  static const std::vector<std::vector<int>> q9 = {
      {0, 1, 2}, {2, 5, 8}, {8, 7, 6}, {6, 3, 0}};
  static const std::vector<std::vector<int>> b8 = {
      {0, 4, 7, 3},   // x-
      {1, 2, 6, 5},   // x+
      {0, 1, 5, 4},   // y-
      {2, 3, 7, 6},   // y+
      {0, 3, 2, 1},   // z-
      {4, 5, 6, 7}};  // z+
  switch (t) {
    case ElemType::T3: return t3;
    case ElemType::Q4: return q4;
    case ElemType::Q9: return q9;
    case ElemType::B8: return b8;
  }
  throw UnsupportedElementError("unknown element type");
}

struct Box {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();
};

struct BoundaryFacet {
  int elem = -1;
  int local_facet = -1;
  std::string tag;
};

struct Mesh {
  int dim = 2;
  ElemType elem_type = ElemType::Q4;
  std::vector<Vec3> node_coords;              // z = 0 in 2D
  std::vector<std::vector<int>> connectivity; // per element, local order fixed per type
  std::vector<BoundaryFacet> boundary_facets;
  std::map<std::string, std::vector<int>> node_sets;

  int n_nodes() const { return static_cast<int>(node_coords.size()); }
  int n_elems() const { return static_cast<int>(connectivity.size()); }
  int nodes_per_elem() const { return elem_node_count(elem_type); }

  Vec3 elem_centroid(int e) const {
    Vec3 c = Vec3::Zero();
    for (int n : connectivity[e]) c += node_coords[n];
    return c / static_cast<double>(connectivity[e].size());
  }

  // Global node ids of a facet, in the facet's local order.
  std::vector<int> facet_nodes(const BoundaryFacet& f) const {
    std::vector<int> out;
    for (int ln : elem_facets(elem_type)[f.local_facet])
      out.push_back(connectivity[f.elem][ln]);
    return out;
  }

  Vec3 facet_center(const BoundaryFacet& f) const {
    Vec3 c = Vec3::Zero();
    auto fn = facet_nodes(f);
    for (int n : fn) c += node_coords[n];
    return c / static_cast<double>(fn.size());
  }

  std::vector<int> find_nodes(const std::function<bool(const Vec3&)>& pred) const {
    std::vector<int> out;
    for (int n = 0; n < n_nodes(); ++n)
      if (pred(node_coords[n])) out.push_back(n);
    return out;
  }

  // Unique node within tol of x; throws if none or ambiguous.
  int find_node(const Vec3& x, double tol) const {
    int hit = -1;
    for (int n = 0; n < n_nodes(); ++n) {
      if ((node_coords[n] - x).norm() <= tol) {
        if (hit >= 0) throw InvalidArgumentError("find_node: multiple nodes within tolerance");
        hit = n;
      }
    }
    if (hit < 0) throw InvalidArgumentError("find_node: no node within tolerance");
    return hit;
  }

  void add_node_set(const std::string& name, std::vector<int> ids) {
    node_sets[name] = std::move(ids);
  }

  // Re-tag boundary facets: fn gets (facet center, current tag) and returns a
  // replacement tag or nullopt to keep the current one.
  void retag_boundary_facets(
      const std::function<std::optional<std::string>(const Vec3&, const std::string&)>& fn) {
    for (auto& f : boundary_facets) {
      if (auto t = fn(facet_center(f), f.tag)) f.tag = *t;
    }
  }
};

// Piecewise-constant permeability over axis-aligned sub-boxes.
struct RegionBox {
  Vec3 lo, hi;
  double k = 1.0;
};

struct RegionField {
  std::vector<RegionBox> boxes;

  static RegionField uniform(double k) {
    RegionField f;
    const double big = 1e300;
    f.boxes.push_back({Vec3(-big, -big, -big), Vec3(big, big, big), k});
    return f;
  }

  double lookup(const Vec3& x) const {
    const double tol = 1e-12;
    for (const auto& b : boxes) {
      bool in = true;
      for (int d = 0; d < 3; ++d)
        in = in && x[d] >= b.lo[d] - tol && x[d] <= b.hi[d] + tol;
      if (in) return b.k;
    }
    throw RegionLookupError("point outside all permeability regions");
  }

  // Check the boxes tile [lo,hi] (first `dim` axes) without interior overlap.
  void validate(const Vec3& lo, const Vec3& hi, int dim) const {
    double vol = 0.0, domain = 1.0;
    for (int d = 0; d < dim; ++d) domain *= hi[d] - lo[d];
    for (const auto& b : boxes) {
      if (b.k <= 0.0) throw InvalidArgumentError("permeability must be positive");
      double v = 1.0;
      for (int d = 0; d < dim; ++d) v *= b.hi[d] - b.lo[d];
      if (v <= 0.0) throw InvalidArgumentError("degenerate permeability region");
      vol += v;
    }
    if (std::abs(vol - domain) > 1e-12 * std::abs(domain))
      throw InvalidArgumentError("permeability regions do not cover the domain");
    for (size_t i = 0; i < boxes.size(); ++i)
      for (size_t j = i + 1; j < boxes.size(); ++j) {
        double overlap = 1.0;
        for (int d = 0; d < dim; ++d) {
          double w = std::min(boxes[i].hi[d], boxes[j].hi[d]) -
                     std::max(boxes[i].lo[d], boxes[j].lo[d]);
          overlap *= std::max(w, 0.0);
        }
        if (overlap > 1e-12 * std::abs(domain))
          throw InvalidArgumentError("permeability regions overlap");
      }
  }
};

namespace detail {

inline void check_grid_args(int nx, int ny, int nz, const Box& box, int dim) {
  if (nx < 1 || ny < 1 || nz < 1)
    throw InvalidArgumentError("mesh subdivisions must be >= 1");
  for (int d = 0; d < dim; ++d)
    if (!(box.hi[d] - box.lo[d] > 0.0))
      throw InvalidArgumentError("mesh box has non-positive extent");
}

}  // namespace detail

// Structured quadrilateral mesh; order 1 -> Q4, order 2 -> Q9 (nodes on the
// (2nx+1) x (2ny+1) lattice, element-local ordering lexicographic in (xi,eta)).
inline Mesh generate_quad(int nx, int ny, const Box& box, int order) {
  if (order != 1 && order != 2) throw InvalidArgumentError("quad order must be 1 or 2");
  detail::check_grid_args(nx, ny, 1, box, 2);
  Mesh m;
  m.dim = 2;
  m.elem_type = order == 1 ? ElemType::Q4 : ElemType::Q9;
  const int mx = order * nx + 1, my = order * ny + 1;
  const double hx = (box.hi.x() - box.lo.x()) / (mx - 1);
  const double hy = (box.hi.y() - box.lo.y()) / (my - 1);
  m.node_coords.reserve(static_cast<size_t>(mx) * my);
  for (int j = 0; j < my; ++j)
    for (int i = 0; i < mx; ++i)
      m.node_coords.emplace_back(box.lo.x() + i * hx, box.lo.y() + j * hy, 0.0);

  auto nid = [mx](int i, int j) { return j * mx + i; };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      std::vector<int> conn;
      if (order == 1) {
        conn = {nid(i, j), nid(i + 1, j), nid(i + 1, j + 1), nid(i, j + 1)};
      } else {
        for (int b = 0; b < 3; ++b)
          for (int a = 0; a < 3; ++a) conn.push_back(nid(2 * i + a, 2 * j + b));
      }
      m.connectivity.push_back(std::move(conn));
      const int e = m.n_elems() - 1;
      // Facet order for both Q4 and Q9: 0 bottom, 1 right, 2 top, 3 left.
      if (j == 0) m.boundary_facets.push_back({e, 0, "bottom"});
      if (i == nx - 1) m.boundary_facets.push_back({e, 1, "right"});
      if (j == ny - 1) m.boundary_facets.push_back({e, 2, "top"});
      if (i == 0) m.boundary_facets.push_back({e, 3, "left"});
    }
  return m;
}

// Triangles: each structured cell split along the same diagonal (lower-left to
// upper-right), so refinement is reproducible. h is the short-edge length.
inline Mesh generate_tri(int nx, int ny, const Box& box) {
  detail::check_grid_args(nx, ny, 1, box, 2);
  Mesh m;
  m.dim = 2;
  m.elem_type = ElemType::T3;
  const int mx = nx + 1, my = ny + 1;
  const double hx = (box.hi.x() - box.lo.x()) / nx;
  const double hy = (box.hi.y() - box.lo.y()) / ny;
  for (int j = 0; j < my; ++j)
    for (int i = 0; i < mx; ++i)
      m.node_coords.emplace_back(box.lo.x() + i * hx, box.lo.y() + j * hy, 0.0);

  auto nid = [mx](int i, int j) { return j * mx + i; };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int a = nid(i, j), b = nid(i + 1, j), c = nid(i + 1, j + 1), d = nid(i, j + 1);
      m.connectivity.push_back({a, b, c});  // lower triangle, edges: ab, bc, ca
      const int lower = m.n_elems() - 1;
      m.connectivity.push_back({a, c, d});  // upper triangle, edges: ac, cd, da
      const int upper = m.n_elems() - 1;
      if (j == 0) m.boundary_facets.push_back({lower, 0, "bottom"});
      if (i == nx - 1) m.boundary_facets.push_back({lower, 1, "right"});
      if (j == ny - 1) m.boundary_facets.push_back({upper, 1, "top"});
      if (i == 0) m.boundary_facets.push_back({upper, 2, "left"});
    }
  return m;
}

inline Mesh generate_hex(int nx, int ny, int nz, const Box& box) {
  detail::check_grid_args(nx, ny, nz, box, 3);
  Mesh m;
  m.dim = 3;
  m.elem_type = ElemType::B8;
  const int mx = nx + 1, my = ny + 1, mz = nz + 1;
  const double hx = (box.hi.x() - box.lo.x()) / nx;
  const double hy = (box.hi.y() - box.lo.y()) / ny;
  const double hz = (box.hi.z() - box.lo.z()) / nz;
  for (int k = 0; k < mz; ++k)
    for (int j = 0; j < my; ++j)
      for (int i = 0; i < mx; ++i)
        m.node_coords.emplace_back(box.lo.x() + i * hx, box.lo.y() + j * hy,
                                   box.lo.z() + k * hz);

  auto nid = [mx, my](int i, int j, int k) { return (k * my + j) * mx + i; };
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        m.connectivity.push_back({nid(i, j, k), nid(i + 1, j, k), nid(i + 1, j + 1, k),
                                  nid(i, j + 1, k), nid(i, j, k + 1), nid(i + 1, j, k + 1),
                                  nid(i + 1, j + 1, k + 1), nid(i, j + 1, k + 1)});
        const int e = m.n_elems() - 1;
        if (i == 0) m.boundary_facets.push_back({e, 0, "left"});
        if (i == nx - 1) m.boundary_facets.push_back({e, 1, "right"});
        if (j == 0) m.boundary_facets.push_back({e, 2, "front"});
        if (j == ny - 1) m.boundary_facets.push_back({e, 3, "back"});
        if (k == 0) m.boundary_facets.push_back({e, 4, "bottom"});
        if (k == nz - 1) m.boundary_facets.push_back({e, 5, "top"});
      }
  return m;
}

// Remove all elements inside the hole boxes. Holes must align with element
// boundaries: an element overlapping a hole only partially is an error.
// Newly exposed facets are tagged "impervious"; surviving boundary facets keep
// their tags; orphaned nodes are compacted away.
inline Mesh carve_holes(const Mesh& mesh, const std::vector<Box>& holes) {
  if (holes.empty()) return mesh;

  double scale = 0.0;
  for (const auto& x : mesh.node_coords) scale = std::max(scale, x.cwiseAbs().maxCoeff());
  const double tol = 1e-9 * std::max(scale, 1.0);

  std::vector<char> removed(mesh.n_elems(), 0);
  for (int e = 0; e < mesh.n_elems(); ++e) {
    Vec3 lo = mesh.node_coords[mesh.connectivity[e][0]];
    Vec3 hi = lo;
    for (int n : mesh.connectivity[e]) {
      lo = lo.cwiseMin(mesh.node_coords[n]);
      hi = hi.cwiseMax(mesh.node_coords[n]);
    }
    for (const auto& h : holes) {
      bool inside = true, outside = false;
      for (int d = 0; d < mesh.dim; ++d) {
        inside = inside && lo[d] >= h.lo[d] - tol && hi[d] <= h.hi[d] + tol;
        outside = outside || hi[d] <= h.lo[d] + tol || lo[d] >= h.hi[d] - tol;
      }
      if (inside)
        removed[e] = 1;
      else if (!outside)
        throw InvalidArgumentError("hole box does not align with the element grid");
    }
  }

  // Old boundary tags keyed by sorted global facet nodes (old numbering).
  std::map<std::vector<int>, std::string> old_tags;
  for (const auto& f : mesh.boundary_facets) {
    auto key = mesh.facet_nodes(f);
    std::sort(key.begin(), key.end());
    old_tags[std::move(key)] = f.tag;
  }

  Mesh out;
  out.dim = mesh.dim;
  out.elem_type = mesh.elem_type;
  std::vector<int> kept;
  for (int e = 0; e < mesh.n_elems(); ++e)
    if (!removed[e]) kept.push_back(e);
  if (kept.empty()) throw InvalidArgumentError("holes remove every element");

  // Facet occurrence count over surviving elements: count 1 => boundary.
  const auto& facets = elem_facets(mesh.elem_type);
  std::map<std::vector<int>, int> count;
  for (int e : kept)
    for (const auto& lf : facets) {
      std::vector<int> key;
      for (int ln : lf) key.push_back(mesh.connectivity[e][ln]);
      std::sort(key.begin(), key.end());
      ++count[key];
    }

  std::vector<int> remap(mesh.n_nodes(), -1);
  for (int e : kept)
    for (int n : mesh.connectivity[e])
      if (remap[n] < 0) {
        remap[n] = out.n_nodes();
        out.node_coords.push_back(mesh.node_coords[n]);
      }

  for (size_t ke = 0; ke < kept.size(); ++ke) {
    const int e = kept[ke];
    std::vector<int> conn;
    for (int n : mesh.connectivity[e]) conn.push_back(remap[n]);
    out.connectivity.push_back(std::move(conn));
    for (int lf = 0; lf < static_cast<int>(facets.size()); ++lf) {
      std::vector<int> key;
      for (int ln : facets[lf]) key.push_back(mesh.connectivity[e][ln]);
      std::sort(key.begin(), key.end());
      if (count.at(key) != 1) continue;
      auto it = old_tags.find(key);
      out.boundary_facets.push_back(
          {static_cast<int>(ke), lf, it != old_tags.end() ? it->second : "impervious"});
    }
  }

  for (const auto& [name, ids] : mesh.node_sets) {
    std::vector<int> mapped;
    for (int n : ids)
      if (remap[n] >= 0) mapped.push_back(remap[n]);
    if (!mapped.empty()) out.node_sets[name] = std::move(mapped);
  }
  return out;
}

}  // namespace dflow
