// formulations.hpp - linearized element systems for the two mixed formalisms.
//
// Strong form:  alpha(v,p,x) v + grad p = rho b,  div v = 0.
// Each nonlinear iteration solves a linearized problem around the snapshot
// (v_i, p_i). With
//   c_p = theta * dalpha/dp           (scalar)
//   C_v = theta * (dalpha/dv (x) v_i) (rank-one tensor, (x) = outer product)
// the drag increment operators at a quadrature point are
//   D_next(v,p) = c_p p v_i + C_v v        (applied to the next iterate)
//   D_cur       = c_p p_i v_i + C_v v_i    (known, moves to the load side)
// and the same operator applied to test functions is the G term. theta = 0 is
// Picard, theta = 1 the consistent (Newton-type) linearization.
//
// LS: minimize  1/2 |A^{-1/2}(alpha v + D_next - D_cur + grad p - rho b)|^2
//             + 1/2 |div v|^2
// over the next iterate, A = a I with a = ls_weight(). Writing
// R = alpha v + D_next + grad p for trial and test alike, the element system
// is Ke = Int a^-1 R(w,q).R(v,p) + div w div v, fe = Int a^-1 R(w,q).(rho b +
// D_cur). All nine left pairings and six right pairings are produced by the
// single R x R / R x rhs product. Pressure BCs are strong (trial space).
//
// VMS: Ke collects (w; alpha v + D_next) - (div w; p) - (q; div v)
//              - 1/2 (alpha w + grad q; alpha^-1 (alpha v + D_next + grad p)),
// fe collects  (w; rho b + D_cur) - 1/2 (alpha w + grad q; alpha^-1 (rho b +
// D_cur)) and the weak pressure boundary term -(w.n; p0) on Gamma_p facets,
// moved to the load side. The D_next inside the stabilization has no G-type
// test counterpart; the displayed form is implemented as-is, unsymmetrized.
// alpha in the stabilization factor is evaluated from the snapshot.

#pragma once

#include <functional>
#include <vector>

#include "dflow/common.hpp"
#include "dflow/drag.hpp"
#include "dflow/fem.hpp"

namespace dflow {

enum class Formulation { LS, VMS };

struct IterateSnapshot {
  MatX v;        // element-local nodal velocities of the current iterate,
                 // (nodes-per-element x dim), rows in connectivity order
  VecX p;        // element-local nodal pressures, same ordering
  double theta = 1.0;
};

struct LinearizationTerms {
  double c_p = 0.0;
  MatX C_v;        // dim x dim, rank <= 1
  VecX d_current;  // D_cur vector at the quadrature point
};

inline LinearizationTerms linearization_terms(const DragModel& model, const VecX& v_q,
                                              double p_q, const Vec3& x_q, double theta) {
  if (theta < 0.0 || theta > 1.0)
    throw InvalidArgumentError("linearization selector theta must be in [0,1]");
  LinearizationTerms t;
  t.c_p = theta * model.dalpha_dp(v_q, p_q, x_q);
  t.C_v = theta * (model.dalpha_dv(v_q, p_q, x_q) * v_q.transpose());
  t.d_current = t.c_p * p_q * v_q + t.C_v * v_q;
  return t;
}

// A = a I: weight 1 -> a = 1 (unweighted residual), weight 2 -> a = alpha.
inline double ls_weight(int weight_id, double alpha_value) {
  if (!(alpha_value > 0.0))
    throw ConstitutiveViolationError("ls_weight requires alpha > 0");
  if (weight_id == 1) return 1.0;
  if (weight_id == 2) return alpha_value;
  throw InvalidArgumentError("ls weight id must be 1 or 2");
}

struct ElementSystem {
  MatX Ke;
  VecX fe;
  std::vector<int> dof_map;
};

using BodyForce = std::function<VecX(const Vec3&)>;

// Element DOF order: velocity components node-major, then pressures.
// Globally: velocity DOF of (node n, comp c) = n*dim + c, pressure DOF of
// node n = n_nodes*dim + n.
inline std::vector<int> element_dof_map(const Mesh& mesh, int elem) {
  const int nd = mesh.dim;
  const auto& conn = mesh.connectivity[elem];
  std::vector<int> map;
  map.reserve(conn.size() * (nd + 1));
  for (int n : conn)
    for (int c = 0; c < nd; ++c) map.push_back(n * nd + c);
  for (int n : conn) map.push_back(mesh.n_nodes() * nd + n);
  return map;
}

namespace detail {

// Per-quadrature-point DOF operators. Columns span the element DOFs in
// element_dof_map order; rows are spatial components (or 1 for scalars).
struct QpOperators {
  MatX W;    // velocity value:        w(x_q)
  MatX DIV;  // velocity divergence:   div w (1 row)
  MatX GP;   // pressure gradient:     grad q
  MatX PR;   // pressure value:        q (1 row)
  MatX Dop;  // drag increment D_next (equals the G operator on test functions)
};

inline QpOperators qp_operators(const ElementEval& ev, int nd,
                                const LinearizationTerms& lin, const VecX& v_q) {
  const int nn = static_cast<int>(ev.N.size());
  const int ndof = (nd + 1) * nn;
  QpOperators op;
  op.W = MatX::Zero(nd, ndof);
  op.DIV = MatX::Zero(1, ndof);
  op.GP = MatX::Zero(nd, ndof);
  op.PR = MatX::Zero(1, ndof);
  op.Dop = MatX::Zero(nd, ndof);
  for (int a = 0; a < nn; ++a) {
    for (int c = 0; c < nd; ++c) {
      const int col = a * nd + c;
      op.W(c, col) = ev.N[a];
      op.DIV(0, col) = ev.grad(a, c);
      op.Dop.col(col) = ev.N[a] * lin.C_v.col(c);
    }
    const int pcol = nd * nn + a;
    op.PR(0, pcol) = ev.N[a];
    op.GP.col(pcol) = ev.grad.row(a).transpose();
    op.Dop.col(pcol) = lin.c_p * ev.N[a] * v_q;
  }
  return op;
}

struct QpState {
  ElementEval ev;
  VecX v_q;
  double p_q;
  double alpha;
  LinearizationTerms lin;
  VecX rhs;  // rho b + D_cur
};

inline QpState qp_state(const Mesh& mesh, int elem, const DragModel& model,
                        const IterateSnapshot& snap, const BodyForce& body_force,
                        double rho, const Vec3& xi) {
  QpState st;
  st.ev = eval_element(mesh, elem, xi);
  auto [vv, vg] = interpolate(snap.v, st.ev);
  auto [pv, pg] = interpolate(MatX(snap.p), st.ev);
  st.v_q = vv;
  st.p_q = pv[0];
  st.alpha = model.alpha(st.v_q, st.p_q, st.ev.x);
  st.lin = linearization_terms(model, st.v_q, st.p_q, st.ev.x, snap.theta);
  st.rhs = rho * body_force(st.ev.x) + st.lin.d_current;
  return st;
}

}  // namespace detail

inline ElementSystem ls_element_system(const Mesh& mesh, int elem, const DragModel& model,
                                       const IterateSnapshot& snap, int weight_id,
                                       const BodyForce& body_force, double rho) {
  const int nd = mesh.dim;
  const int ndof = (nd + 1) * mesh.nodes_per_elem();
  ElementSystem sys;
  sys.Ke = MatX::Zero(ndof, ndof);
  sys.fe = VecX::Zero(ndof);
  sys.dof_map = element_dof_map(mesh, elem);

  for (const auto& qp : quadrature(mesh.elem_type)) {
    auto st = detail::qp_state(mesh, elem, model, snap, body_force, rho, qp.xi);
    auto op = detail::qp_operators(st.ev, nd, st.lin, st.v_q);
    const double wj = qp.w * st.ev.detJ;
    const double inv_a = 1.0 / ls_weight(weight_id, st.alpha);
    MatX R = st.alpha * op.W + op.Dop + op.GP;
    sys.Ke.noalias() += wj * (inv_a * (R.transpose() * R) + op.DIV.transpose() * op.DIV);
    sys.fe.noalias() += (wj * inv_a) * (R.transpose() * st.rhs);
  }
  return sys;
}

struct WeakPressureFacet {
  int local_facet = -1;
  double p0 = 0.0;
};

inline ElementSystem vms_element_system(const Mesh& mesh, int elem, const DragModel& model,
                                        const IterateSnapshot& snap,
                                        const BodyForce& body_force, double rho,
                                        const std::vector<WeakPressureFacet>& weak_facets = {}) {
  const int nd = mesh.dim;
  const int nn = mesh.nodes_per_elem();
  const int ndof = (nd + 1) * nn;
  ElementSystem sys;
  sys.Ke = MatX::Zero(ndof, ndof);
  sys.fe = VecX::Zero(ndof);
  sys.dof_map = element_dof_map(mesh, elem);

  for (const auto& qp : quadrature(mesh.elem_type)) {
    auto st = detail::qp_state(mesh, elem, model, snap, body_force, rho, qp.xi);
    auto op = detail::qp_operators(st.ev, nd, st.lin, st.v_q);
    const double wj = qp.w * st.ev.detJ;
    MatX T = st.alpha * op.W + op.GP;                 // test side of the stabilization
    MatX R = st.alpha * op.W + op.Dop + op.GP;        // trial side
    sys.Ke.noalias() += wj * (op.W.transpose() * (st.alpha * op.W + op.Dop)
                              - op.DIV.transpose() * op.PR
                              - op.PR.transpose() * op.DIV
                              - (0.5 / st.alpha) * (T.transpose() * R));
    sys.fe.noalias() += wj * (op.W.transpose() * st.rhs
                              - (0.5 / st.alpha) * (T.transpose() * st.rhs));
  }

  // Weak pressure data on Gamma_p: -(w.n, p0) moved to the load side.
  for (const auto& wf : weak_facets) {
    const auto& lf = elem_facets(mesh.elem_type)[wf.local_facet];
    for (const auto& fqp : facet_quadrature(mesh.elem_type)) {
      FacetEval fev = eval_facet(mesh, elem, wf.local_facet, fqp);
      for (size_t a = 0; a < lf.size(); ++a)
        for (int c = 0; c < nd; ++c)
          sys.fe[lf[a] * nd + c] -= fev.jxw * fev.N[a] * fev.normal[c] * wf.p0;
    }
  }
  return sys;
}

}  // namespace dflow
