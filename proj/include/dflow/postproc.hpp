// postproc.hpp - diagnostics on computed mixed solutions: error norms and
// convergence slopes, element-wise mass balance, boundary flux, total drag
// dissipation, the reciprocity residual, and the minimum-dissipation
// comparison against kinematically admissible candidate fields.
//
// All volume integrals here use the elevated quadrature rules so that error
// norms are not sampled only at the assembly points (where residuals of the
// discrete solution can be artificially small).

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dflow/common.hpp"
#include "dflow/drag.hpp"
#include "dflow/fem.hpp"
#include "dflow/mesh.hpp"
#include "dflow/solver.hpp"

namespace dflow {

// Analytic reference fields with gradients, evaluable anywhere in the domain.
// grad_v(c, d) = d v_c / d x_d; grad_p has length dim.
struct ExactFields {
  std::function<VecX(const Vec3&)> v;
  std::function<MatX(const Vec3&)> grad_v;
  std::function<double(const Vec3&)> p;
  std::function<VecX(const Vec3&)> grad_p;
};

struct ErrorReport {
  double v_l2 = 0.0;
  double v_h1 = 0.0;  // H1 seminorm
  double p_l2 = 0.0;
  double p_h1 = 0.0;  // H1 seminorm
  double h = 0.0;
  int n_dofs = 0;
};

inline ErrorReport error_norms(const Mesh& mesh, const MixedSolution& sol,
                               const ExactFields& exact, double h = 0.0) {
  if (sol.v.rows() != mesh.n_nodes() || sol.p.size() != mesh.n_nodes())
    throw InvalidArgumentError("solution size does not match mesh");
  const int nd = mesh.dim;
  double v2 = 0, vg2 = 0, p2 = 0, pg2 = 0;
  const auto& rule = quadrature_refined(mesh.elem_type);
  MatX vn, pn;
  for (int e = 0; e < mesh.n_elems(); ++e) {
    const auto& conn = mesh.connectivity[e];
    const int nn = static_cast<int>(conn.size());
    vn.resize(nn, nd);
    pn.resize(nn, 1);
    for (int a = 0; a < nn; ++a) {
      vn.row(a) = sol.v.row(conn[a]);
      pn(a, 0) = sol.p[conn[a]];
    }
    for (const auto& qp : rule) {
      ElementEval ev = eval_element(mesh, e, qp.xi);
      const double wj = qp.w * ev.detJ;
      auto [vh, gvh] = interpolate(vn, ev);
      auto [ph, gph] = interpolate(pn, ev);
      v2 += wj * (vh - exact.v(ev.x)).squaredNorm();
      vg2 += wj * (gvh - exact.grad_v(ev.x)).squaredNorm();
      const double dp = ph[0] - exact.p(ev.x);
      p2 += wj * dp * dp;
      pg2 += wj * (gph.row(0).transpose().head(nd) - exact.grad_p(ev.x)).squaredNorm();
    }
  }
  ErrorReport out;
  out.v_l2 = std::sqrt(v2);
  out.v_h1 = std::sqrt(vg2);
  out.p_l2 = std::sqrt(p2);
  out.p_h1 = std::sqrt(pg2);
  out.h = h;
  out.n_dofs = mesh.n_nodes() * (nd + 1);
  return out;
}

// Least-squares slope of log(error) vs log(h). Returns the raw fit slope
// (h^2 data gives +2.00); table writers negate it to match the usual
// "convergence rates printed negative" presentation.
inline double convergence_slope(const std::vector<std::pair<double, double>>& series) {
  if (series.size() < 2)
    throw InvalidArgumentError("convergence_slope needs at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [h, err] : series) {
    if (!(h > 0) || !(err > 0))
      throw InvalidArgumentError("convergence_slope requires positive h and error values");
    const double x = std::log(h), y = std::log(err);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(series.size());
  const double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-300)
    throw InvalidArgumentError("convergence_slope: all h values coincide");
  return (n * sxy - sx * sy) / denom;
}

// Net flux of v_h out of each element, as the facet integral over the full
// element boundary. The divergence-theorem twin below integrates div v_h over
// the element volume; the two agree at quadrature exactness and serve as a
// mutual self-check.
inline VecX element_boundary_net_flux(const Mesh& mesh, const MixedSolution& sol) {
  const int nd = mesh.dim;
  VecX out = VecX::Zero(mesh.n_elems());
  const int n_facets = static_cast<int>(elem_facets(mesh.elem_type).size());
  for (int e = 0; e < mesh.n_elems(); ++e) {
    double net = 0.0;
    for (int lf = 0; lf < n_facets; ++lf) {
      const auto fn = mesh.facet_nodes({e, lf, ""});
      for (const auto& fqp : facet_quadrature(mesh.elem_type)) {
        FacetEval ev = eval_facet(mesh, e, lf, fqp);
        double vn = 0.0;
        for (size_t a = 0; a < fn.size(); ++a)
          for (int c = 0; c < nd; ++c) vn += ev.N[a] * sol.v(fn[a], c) * ev.normal[c];
        net += ev.jxw * vn;
      }
    }
    out[e] = net;
  }
  return out;
}

inline VecX element_divergence_integral(const Mesh& mesh, const MixedSolution& sol) {
  const int nd = mesh.dim;
  VecX out = VecX::Zero(mesh.n_elems());
  MatX vn;
  for (int e = 0; e < mesh.n_elems(); ++e) {
    const auto& conn = mesh.connectivity[e];
    vn.resize(static_cast<int>(conn.size()), nd);
    for (size_t a = 0; a < conn.size(); ++a) vn.row(a) = sol.v.row(conn[a]);
    double net = 0.0;
    for (const auto& qp : quadrature(mesh.elem_type)) {
      ElementEval ev = eval_element(mesh, e, qp.xi);
      auto [vq, gv] = interpolate(vn, ev);
      net += qp.w * ev.detJ * gv.topLeftCorner(nd, nd).trace();
    }
    out[e] = net;
  }
  return out;
}

// Flux of v_h through the boundary facets carrying one of the given tags,
// with outward normals.
inline double boundary_flux(const Mesh& mesh, const MixedSolution& sol,
                            const std::vector<std::string>& tags) {
  const int nd = mesh.dim;
  double flux = 0.0;
  for (const auto& f : mesh.boundary_facets) {
    if (std::find(tags.begin(), tags.end(), f.tag) == tags.end()) continue;
    const auto fn = mesh.facet_nodes(f);
    for (const auto& fqp : facet_quadrature(mesh.elem_type)) {
      FacetEval ev = eval_facet(mesh, f.elem, f.local_facet, fqp);
      double vn = 0.0;
      for (size_t a = 0; a < fn.size(); ++a)
        for (int c = 0; c < nd; ++c) vn += ev.N[a] * sol.v(fn[a], c) * ev.normal[c];
      flux += ev.jxw * vn;
    }
  }
  return flux;
}

struct MassBalanceReport {
  VecX e_K;           // per-element |net boundary flux|
  double Q = 0.0;     // flux through the production boundary
  VecX ratio;         // e_K / |Q|, or e_K itself when zero_flux
  double max_ratio = 0.0;
  double mean_ratio = 0.0;
  bool zero_flux = false;  // |Q| too small to normalize against
};

inline MassBalanceReport local_mass_balance(const Mesh& mesh, const MixedSolution& sol,
                                            const std::vector<std::string>& production_tags) {
  MassBalanceReport rep;
  rep.e_K = element_boundary_net_flux(mesh, sol).cwiseAbs();
  rep.Q = production_tags.empty() ? 0.0 : boundary_flux(mesh, sol, production_tags);
  rep.zero_flux = std::abs(rep.Q) < 1e-14;
  rep.ratio = rep.zero_flux ? rep.e_K : VecX(rep.e_K / std::abs(rep.Q));
  rep.max_ratio = rep.ratio.size() ? rep.ratio.maxCoeff() : 0.0;
  rep.mean_ratio = rep.ratio.size() ? rep.ratio.mean() : 0.0;
  return rep;
}

// Total drag dissipation: integral of alpha(v_h, p_h, x) * |v_h|^2 over the
// domain, with alpha evaluated from the solution itself.
inline double total_dissipation(const Mesh& mesh, const MixedSolution& sol,
                                const DragModel& model) {
  const int nd = mesh.dim;
  double phi = 0.0;
  MatX vn, pn;
  for (int e = 0; e < mesh.n_elems(); ++e) {
    const auto& conn = mesh.connectivity[e];
    const int nn = static_cast<int>(conn.size());
    vn.resize(nn, nd);
    pn.resize(nn, 1);
    for (int a = 0; a < nn; ++a) {
      vn.row(a) = sol.v.row(conn[a]);
      pn(a, 0) = sol.p[conn[a]];
    }
    for (const auto& qp : quadrature_refined(mesh.elem_type)) {
      ElementEval ev = eval_element(mesh, e, qp.xi);
      auto [vq, gv] = interpolate(vn, ev);
      auto [pq, gp] = interpolate(pn, ev);
      phi += qp.w * ev.detJ * model.alpha(vq, pq[0], ev.x) * vq.squaredNorm();
    }
  }
  return phi;
}

struct ReciprocityData {
  BodyForce b;
  double rho = 1.0;
};

struct ReciprocityTerms {
  double body_12 = 0.0;  // volume integral of rho_1 b_1 . v_2
  double bdry_12 = 0.0;  // boundary integral of p_1 (v_2 . n)
  double body_21 = 0.0;
  double bdry_21 = 0.0;
  double lhs() const { return body_12 - bdry_12; }
  double rhs() const { return body_21 - bdry_21; }
  double residual() const { return std::abs(lhs() - rhs()); }
  double scale() const {
    return std::max({std::abs(body_12), std::abs(bdry_12), std::abs(body_21),
                     std::abs(bdry_21), 1e-300});
  }
};

// Crossed work identity for two solutions sharing one mesh and one constant
// drag coefficient:
//   (rho_1 b_1; v_2) - (p_1; v_2.n)_bdry = (rho_2 b_2; v_1) - (p_2; v_1.n)_bdry.
// It fails by design for velocity-dependent drag, which tests exercise as a
// negative case.
inline ReciprocityTerms reciprocity_terms(const Mesh& mesh, const MixedSolution& s1,
                                          const ReciprocityData& d1, const MixedSolution& s2,
                                          const ReciprocityData& d2) {
  const int nd = mesh.dim;
  ReciprocityTerms t;
  MatX v1n, v2n;
  for (int e = 0; e < mesh.n_elems(); ++e) {
    const auto& conn = mesh.connectivity[e];
    const int nn = static_cast<int>(conn.size());
    v1n.resize(nn, nd);
    v2n.resize(nn, nd);
    for (int a = 0; a < nn; ++a) {
      v1n.row(a) = s1.v.row(conn[a]);
      v2n.row(a) = s2.v.row(conn[a]);
    }
    for (const auto& qp : quadrature_refined(mesh.elem_type)) {
      ElementEval ev = eval_element(mesh, e, qp.xi);
      const double wj = qp.w * ev.detJ;
      auto [v1q, g1] = interpolate(v1n, ev);
      auto [v2q, g2] = interpolate(v2n, ev);
      t.body_12 += wj * d1.rho * d1.b(ev.x).dot(v2q);
      t.body_21 += wj * d2.rho * d2.b(ev.x).dot(v1q);
    }
  }
  for (const auto& f : mesh.boundary_facets) {
    const auto fn = mesh.facet_nodes(f);
    for (const auto& fqp : facet_quadrature(mesh.elem_type)) {
      FacetEval ev = eval_facet(mesh, f.elem, f.local_facet, fqp);
      double p1 = 0, p2 = 0, v1nrm = 0, v2nrm = 0;
      for (size_t a = 0; a < fn.size(); ++a) {
        p1 += ev.N[a] * s1.p[fn[a]];
        p2 += ev.N[a] * s2.p[fn[a]];
        for (int c = 0; c < nd; ++c) {
          v1nrm += ev.N[a] * s1.v(fn[a], c) * ev.normal[c];
          v2nrm += ev.N[a] * s2.v(fn[a], c) * ev.normal[c];
        }
      }
      t.bdry_12 += ev.jxw * p1 * v2nrm;
      t.bdry_21 += ev.jxw * p2 * v1nrm;
    }
  }
  return t;
}

inline double reciprocity_residual(const Mesh& mesh, const MixedSolution& s1,
                                   const ReciprocityData& d1, const MixedSolution& s2,
                                   const ReciprocityData& d2) {
  return reciprocity_terms(mesh, s1, d1, s2, d2).residual();
}

struct DissipationPair {
  double solution = 0.0;
  double candidate = 0.0;
};

namespace detail {

// Central-difference divergence of an analytic field; keeps the admissibility
// check independent of caller-supplied derivative information.
inline double fd_divergence(const std::function<VecX(const Vec3&)>& v, const Vec3& x, int nd) {
  double div = 0.0;
  for (int c = 0; c < nd; ++c) {
    const double eps = 1e-6 * (1.0 + std::abs(x[c]));
    Vec3 xp = x, xm = x;
    xp[c] += eps;
    xm[c] -= eps;
    div += (v(xp)[c] - v(xm)[c]) / (2.0 * eps);
  }
  return div;
}

}  // namespace detail

// Minimum-dissipation comparison: evaluates the drag dissipation of the
// computed solution and of an analytic candidate field, with alpha frozen at
// the solution's (v_h, p_h) in both integrals. The candidate must be
// kinematically admissible: (numerically) divergence-free in the domain and
// matching the prescribed normal velocity on every tagged flux facet.
inline DissipationPair dissipation_comparison(
    const Mesh& mesh, const MixedSolution& sol,
    const std::function<VecX(const Vec3&)>& candidate, const DragModel& model,
    const std::map<std::string, std::function<double(const Vec3&)>>& facet_vn,
    double adm_tol = 1e-6) {
  const int nd = mesh.dim;

  double div2 = 0.0;
  DissipationPair out;
  MatX vn, pn;
  for (int e = 0; e < mesh.n_elems(); ++e) {
    const auto& conn = mesh.connectivity[e];
    const int nn = static_cast<int>(conn.size());
    vn.resize(nn, nd);
    pn.resize(nn, 1);
    for (int a = 0; a < nn; ++a) {
      vn.row(a) = sol.v.row(conn[a]);
      pn(a, 0) = sol.p[conn[a]];
    }
    for (const auto& qp : quadrature_refined(mesh.elem_type)) {
      ElementEval ev = eval_element(mesh, e, qp.xi);
      const double wj = qp.w * ev.detJ;
      auto [vq, gv] = interpolate(vn, ev);
      auto [pq, gp] = interpolate(pn, ev);
      const double a_q = model.alpha(vq, pq[0], ev.x);
      const VecX cq = candidate(ev.x);
      if (cq.size() != nd)
        throw InvalidArgumentError("candidate field has wrong dimension");
      out.solution += wj * a_q * vq.squaredNorm();
      out.candidate += wj * a_q * cq.squaredNorm();
      const double d = detail::fd_divergence(candidate, ev.x, nd);
      div2 += wj * d * d;
    }
  }
  if (div2 > adm_tol)
    throw InvalidArgumentError("candidate field is not divergence-free: integral of (div c)^2 = " +
                               std::to_string(div2));

  double bc2 = 0.0;
  for (const auto& f : mesh.boundary_facets) {
    auto it = facet_vn.find(f.tag);
    if (it == facet_vn.end()) continue;
    for (const auto& fqp : facet_quadrature(mesh.elem_type)) {
      FacetEval ev = eval_facet(mesh, f.elem, f.local_facet, fqp);
      const VecX cq = candidate(ev.x);
      double cn = 0.0;
      for (int c = 0; c < nd; ++c) cn += cq[c] * ev.normal[c];
      const double mis = cn - it->second(ev.x);
      bc2 += ev.jxw * mis * mis;
    }
  }
  if (bc2 > adm_tol)
    throw InvalidArgumentError(
        "candidate field violates the prescribed normal velocity: boundary misfit integral = " +
        std::to_string(bc2));
  return out;
}

}  // namespace dflow
