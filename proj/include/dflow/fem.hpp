// fem.hpp - reference elements: Lagrange shape functions, Gauss quadrature,
// isoparametric Jacobians, field interpolation, and facet (boundary) geometry.
//
// Reference elements: [-1,1]^d for Q4/Q9/B8, the unit right triangle
// {xi>=0, eta>=0, xi+eta<=1} for T3. Q9 nodes are ordered tensor-product
// lexicographically (xi fastest):
//   6 7 8
//   3 4 5
//   0 1 2
// Assembly quadrature is fixed per element type (2x2 Q4, 3x3 Q9, 3-point T3,
// 2x2x2 B8); quadrature_refined() is a one-order-higher rule used by
// postprocessing so error integrands are not sampled only at stiffness Gauss
// points (gradients superconverge there and would fake H1 rates).

#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "dflow/common.hpp"
#include "dflow/mesh.hpp"

namespace dflow {

struct ShapeEval {
  VecX N;    // nnode
  MatX dN;   // nnode x rdim, gradients in reference coordinates
};

inline ShapeEval shape(ElemType t, const Vec3& xi) {
  ShapeEval s;
  const double x = xi[0], y = xi[1], z = xi[2];
  switch (t) {
    case ElemType::T3: {
      s.N.resize(3);
      s.dN.resize(3, 2);
      s.N << 1.0 - x - y, x, y;
      s.dN << -1, -1, 1, 0, 0, 1;
      return s;
    }
    case ElemType::Q4: {
      s.N.resize(4);
      s.dN.resize(4, 2);
      const double sx[4] = {-1, 1, 1, -1}, sy[4] = {-1, -1, 1, 1};
      for (int a = 0; a < 4; ++a) {
        s.N[a] = 0.25 * (1 + sx[a] * x) * (1 + sy[a] * y);
        s.dN(a, 0) = 0.25 * sx[a] * (1 + sy[a] * y);
        s.dN(a, 1) = 0.25 * sy[a] * (1 + sx[a] * x);
      }
      return s;
    }
    case ElemType::Q9: {
      auto l = [](int i, double u) {
        return i == 0 ? 0.5 * u * (u - 1) : (i == 1 ? 1 - u * u : 0.5 * u * (u + 1));
      };
      auto dl = [](int i, double u) {
        return i == 0 ? u - 0.5 : (i == 1 ? -2 * u : u + 0.5);
      };
      s.N.resize(9);
      s.dN.resize(9, 2);
      for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 3; ++i) {
          const int a = 3 * j + i;
          s.N[a] = l(i, x) * l(j, y);
          s.dN(a, 0) = dl(i, x) * l(j, y);
          s.dN(a, 1) = l(i, x) * dl(j, y);
        }
      return s;
    }
    case ElemType::B8: {
      s.N.resize(8);
      s.dN.resize(8, 3);
      const double sx[8] = {-1, 1, 1, -1, -1, 1, 1, -1};
      const double sy[8] = {-1, -1, 1, 1, -1, -1, 1, 1};
      const double sz[8] = {-1, -1, -1, -1, 1, 1, 1, 1};
      for (int a = 0; a < 8; ++a) {
        s.N[a] = 0.125 * (1 + sx[a] * x) * (1 + sy[a] * y) * (1 + sz[a] * z);
        s.dN(a, 0) = 0.125 * sx[a] * (1 + sy[a] * y) * (1 + sz[a] * z);
        s.dN(a, 1) = 0.125 * sy[a] * (1 + sx[a] * x) * (1 + sz[a] * z);
        s.dN(a, 2) = 0.125 * sz[a] * (1 + sx[a] * x) * (1 + sy[a] * y);
      }
      return s;
    }
  }
  throw UnsupportedElementError("unknown element type");
}

struct QuadraturePoint {
  Vec3 xi = Vec3::Zero();
  double w = 0.0;
};

namespace detail {

inline std::vector<QuadraturePoint> tensor_gauss(int npt, int dim) {
  std::vector<double> g, w;
  if (npt == 2) {
    const double a = 1.0 / std::sqrt(3.0);
    g = {-a, a};
    w = {1.0, 1.0};
  } else if (npt == 3) {
    const double a = std::sqrt(0.6);
    g = {-a, 0.0, a};
    w = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  } else {
    const double a = std::sqrt((3.0 - 2.0 * std::sqrt(6.0 / 5.0)) / 7.0);
    const double b = std::sqrt((3.0 + 2.0 * std::sqrt(6.0 / 5.0)) / 7.0);
    const double wa = (18.0 + std::sqrt(30.0)) / 36.0;
    const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
    g = {-b, -a, a, b};
    w = {wb, wa, wa, wb};
  }
  std::vector<QuadraturePoint> out;
  const int nz = dim > 2 ? npt : 1, ny = dim > 1 ? npt : 1;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < npt; ++i) {
        QuadraturePoint q;
        q.xi = Vec3(g[i], dim > 1 ? g[j] : 0.0, dim > 2 ? g[k] : 0.0);
        q.w = w[i] * (dim > 1 ? w[j] : 1.0) * (dim > 2 ? w[k] : 1.0);
        out.push_back(q);
      }
  return out;
}

}  // namespace detail

// Fixed assembly rules, exact for the constant-alpha stiffness integrands.
inline const std::vector<QuadraturePoint>& quadrature(ElemType t) {
  static const std::vector<QuadraturePoint> t3 = {
      {Vec3(1.0 / 6.0, 1.0 / 6.0, 0), 1.0 / 6.0},
      {Vec3(2.0 / 3.0, 1.0 / 6.0, 0), 1.0 / 6.0},
      {Vec3(1.0 / 6.0, 2.0 / 3.0, 0), 1.0 / 6.0}};
  static const std::vector<QuadraturePoint> q4 = detail::tensor_gauss(2, 2);
  static const std::vector<QuadraturePoint> q9 = detail::tensor_gauss(3, 2);
  static const std::vector<QuadraturePoint> b8 = detail::tensor_gauss(2, 3);
  switch (t) {
    case ElemType::T3: return t3;
    case ElemType::Q4: return q4;
    case ElemType::Q9: return q9;
    case ElemType::B8: return b8;
  }
  throw UnsupportedElementError("unknown element type");
}

// Elevated rules for postprocessing integrals (errors, dissipation, fluxes).
inline const std::vector<QuadraturePoint>& quadrature_refined(ElemType t) {
  // Degree-4 six-point triangle rule (weights scaled to reference area 1/2).
  static const std::vector<QuadraturePoint> t3 = [] {
    const double a1 = 0.445948490915965, w1 = 0.223381589678011;
    const double a2 = 0.091576213509771, w2 = 0.109951743655322;
    std::vector<QuadraturePoint> q = {
        {Vec3(a1, a1, 0), w1 / 2}, {Vec3(1 - 2 * a1, a1, 0), w1 / 2},
        {Vec3(a1, 1 - 2 * a1, 0), w1 / 2}, {Vec3(a2, a2, 0), w2 / 2},
        {Vec3(1 - 2 * a2, a2, 0), w2 / 2}, {Vec3(a2, 1 - 2 * a2, 0), w2 / 2}};
    return q;
  }();
  static const std::vector<QuadraturePoint> q4 = detail::tensor_gauss(3, 2);
  static const std::vector<QuadraturePoint> q9 = detail::tensor_gauss(4, 2);
  static const std::vector<QuadraturePoint> b8 = detail::tensor_gauss(3, 3);
  switch (t) {
    case ElemType::T3: return t3;
    case ElemType::Q4: return q4;
    case ElemType::Q9: return q9;
    case ElemType::B8: return b8;
  }
  throw UnsupportedElementError("unknown element type");
}

struct ElementEval {
  VecX N;       // shape values
  MatX grad;    // nnode x dim, physical gradients
  double detJ = 0.0;
  Vec3 x = Vec3::Zero();  // physical point
};

inline ElementEval eval_element(const Mesh& mesh, int elem, const Vec3& xi) {
  const int nd = mesh.dim;
  const auto& conn = mesh.connectivity[elem];
  ShapeEval s = shape(mesh.elem_type, xi);
  ElementEval ev;
  ev.N = s.N;
  ev.x = Vec3::Zero();
  MatX J = MatX::Zero(nd, nd);  // J(i,j) = d x_i / d xi_j
  for (int a = 0; a < s.N.size(); ++a) {
    const Vec3& xa = mesh.node_coords[conn[a]];
    ev.x += s.N[a] * xa;
    for (int i = 0; i < nd; ++i)
      for (int j = 0; j < nd; ++j) J(i, j) += xa[i] * s.dN(a, j);
  }
  ev.detJ = J.determinant();
  if (!(ev.detJ > 0.0))
    throw DegenerateElementError("non-positive Jacobian in element " + std::to_string(elem));
  ev.grad = s.dN * J.inverse();  // dN_a/dx_i = dN_a/dxi_j * (J^-1)_{ji}
  return ev;
}

// value = sum N_a u_a, gradient = sum (grad N_a) u_a for an m-component field
// given as an (nnode x m) nodal array. Returns (value m, gradient m x dim).
inline std::pair<VecX, MatX> interpolate(const MatX& nodal, const ElementEval& ev) {
  if (nodal.rows() != ev.N.size())
    throw InvalidArgumentError("interpolate: nodal row count does not match element");
  VecX val = nodal.transpose() * ev.N;
  MatX grad = nodal.transpose() * ev.grad;
  return {std::move(val), std::move(grad)};
}

// ---------------------------------------------------------------------------
// Facets. 2D elements have line facets (2 or 3 nodes); B8 has bilinear quads.
// Facet node order follows elem_facets(); for 2D that's counter-clockwise
// around the element, so the outward normal is the tangent rotated by -90deg.
// ---------------------------------------------------------------------------

struct FacetQuadPoint {
  double s = 0, t = 0;  // facet-local coordinates in [-1,1]
  double w = 0;
};

inline const std::vector<FacetQuadPoint>& facet_quadrature(ElemType t) {
  static const std::vector<FacetQuadPoint> line = [] {
    auto g = detail::tensor_gauss(3, 1);
    std::vector<FacetQuadPoint> q;
    for (const auto& p : g) q.push_back({p.xi[0], 0.0, p.w});
    return q;
  }();
  static const std::vector<FacetQuadPoint> quad = [] {
    auto g = detail::tensor_gauss(3, 2);
    std::vector<FacetQuadPoint> q;
    for (const auto& p : g) q.push_back({p.xi[0], p.xi[1], p.w});
    return q;
  }();
  return t == ElemType::B8 ? quad : line;
}

struct FacetEval {
  VecX N;        // shape values of the facet's nodes (facet-local order)
  Vec3 x = Vec3::Zero();
  Vec3 normal = Vec3::Zero();  // outward unit normal
  double jxw = 0.0;            // surface measure times quadrature weight
};

inline FacetEval eval_facet(const Mesh& mesh, int elem, int local_facet,
                            const FacetQuadPoint& qp) {
  const auto& lf = elem_facets(mesh.elem_type)[local_facet];
  const int nfn = static_cast<int>(lf.size());
  FacetEval ev;
  ev.N.resize(nfn);
  MatX dN(nfn, mesh.dim == 3 ? 2 : 1);
  if (nfn == 2) {
    ev.N << 0.5 * (1 - qp.s), 0.5 * (1 + qp.s);
    dN << -0.5, 0.5;
  } else if (nfn == 3) {
    ev.N << 0.5 * qp.s * (qp.s - 1), 1 - qp.s * qp.s, 0.5 * qp.s * (qp.s + 1);
    dN << qp.s - 0.5, -2 * qp.s, qp.s + 0.5;
  } else {  // bilinear quad facet of B8
    const double sx[4] = {-1, 1, 1, -1}, sy[4] = {-1, -1, 1, 1};
    for (int a = 0; a < 4; ++a) {
      ev.N[a] = 0.25 * (1 + sx[a] * qp.s) * (1 + sy[a] * qp.t);
      dN(a, 0) = 0.25 * sx[a] * (1 + sy[a] * qp.t);
      dN(a, 1) = 0.25 * sy[a] * (1 + sx[a] * qp.s);
    }
  }

  std::vector<Vec3> xa(nfn);
  for (int a = 0; a < nfn; ++a) {
    xa[a] = mesh.node_coords[mesh.connectivity[elem][lf[a]]];
    ev.x += ev.N[a] * xa[a];
  }
  if (mesh.dim == 2) {
    Vec3 t = Vec3::Zero();
    for (int a = 0; a < nfn; ++a) t += dN(a, 0) * xa[a];
    const double len = t.norm();
    if (!(len > 0)) throw DegenerateElementError("zero-length boundary facet");
    ev.normal = Vec3(t.y(), -t.x(), 0.0) / len;
    ev.jxw = len * qp.w;
  } else {
    Vec3 t1 = Vec3::Zero(), t2 = Vec3::Zero();
    for (int a = 0; a < nfn; ++a) {
      t1 += dN(a, 0) * xa[a];
      t2 += dN(a, 1) * xa[a];
    }
    Vec3 n = t1.cross(t2);
    const double len = n.norm();
    if (!(len > 0)) throw DegenerateElementError("degenerate boundary facet");
    ev.normal = n / len;
    ev.jxw = len * qp.w;
  }
  return ev;
}

}  // namespace dflow
