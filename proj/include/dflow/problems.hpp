// problems.hpp - the benchmark problem library: a manufactured-solution
// verification problem, the quarter five-spot well configuration, a 3D
// constant-flow patch test, and a family of representative reservoir
// configurations (homogeneous, layered, staggered-barrier).

#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "dflow/common.hpp"
#include "dflow/drag.hpp"
#include "dflow/mesh.hpp"
#include "dflow/postproc.hpp"
#include "dflow/solver.hpp"

namespace dflow {

inline DragModel make_model(DragVariant var, double mu0 = 1.0, double beta_b = 0.1,
                            double beta_f = 0.5, double k = 1.0) {
  DragModel m;
  m.variant = var;
  m.mu0 = mu0;
  m.beta_b = has_barus(var) ? beta_b : 0.0;
  m.beta_f = has_forchheimer(var) ? beta_f : 0.0;
  m.permeability = RegionField::uniform(k);
  return m;
}

// ---------------------------------------------------------------------------
// Manufactured solution on the unit square
//
//   v = (2y(x+y), 4x - y^2),  p = 10 - xy - sin(pi x) sin(pi y)
//
// The pair is divergence-free, and the body force b = (alpha(v,p,x) v +
// grad p) / rho makes it an exact solution for every drag model (alpha is
// evaluated at the exact fields, so b changes with the model while v and p
// do not). Normal velocity from the exact field is prescribed on the whole
// boundary; the pressure datum p(0,0) = 10 is pinned.
// ---------------------------------------------------------------------------

inline ExactFields mms_exact_fields() {
  ExactFields ex;
  ex.v = [](const Vec3& x) {
    VecX v(2);
    v << 2.0 * x.y() * (x.x() + x.y()), 4.0 * x.x() - x.y() * x.y();
    return v;
  };
  ex.grad_v = [](const Vec3& x) {
    MatX g(2, 2);
    g << 2.0 * x.y(), 2.0 * x.x() + 4.0 * x.y(),
         4.0, -2.0 * x.y();
    return g;
  };
  ex.p = [](const Vec3& x) {
    return 10.0 - x.x() * x.y() - std::sin(M_PI * x.x()) * std::sin(M_PI * x.y());
  };
  ex.grad_p = [](const Vec3& x) {
    VecX g(2);
    g << -x.y() - M_PI * std::cos(M_PI * x.x()) * std::sin(M_PI * x.y()),
         -x.x() - M_PI * std::sin(M_PI * x.x()) * std::cos(M_PI * x.y());
    return g;
  };
  return ex;
}

inline BodyForce mms_body_force(const DragModel& model, double rho = 1.0) {
  ExactFields ex = mms_exact_fields();
  return [model, ex, rho](const Vec3& x) {
    const VecX v = ex.v(x);
    return VecX((model.alpha(v, ex.p(x), x) * v + ex.grad_p(x)) / rho);
  };
}

struct MmsSetup {
  Problem problem;
  ExactFields exact;
  double h = 0.0;
};

inline MmsSetup mms_problem(int n, ElemType et, DragVariant var, Formulation f,
                            int weight = 1, double theta = 1.0) {
  if (n < 1) throw InvalidArgumentError("mms_problem: n must be >= 1");
  MmsSetup setup;
  setup.exact = mms_exact_fields();
  setup.h = 1.0 / n;

  Box unit{{0, 0, 0}, {1, 1, 0}};
  Problem& prob = setup.problem;
  switch (et) {
    case ElemType::T3: prob.mesh = generate_tri(n, n, unit); break;
    case ElemType::Q4: prob.mesh = generate_quad(n, n, unit, 1); break;
    case ElemType::Q9: prob.mesh = generate_quad(n, n, unit, 2); break;
    default: throw InvalidArgumentError("mms_problem: 2D element required");
  }
  prob.model = make_model(var);
  prob.formulation = f;
  prob.ls_weight = weight;
  prob.theta = theta;
  prob.rho = 1.0;
  prob.body_force = mms_body_force(prob.model, prob.rho);

  const auto ve = setup.exact.v;
  prob.bcs.facet_vn["bottom"] = [ve](const Vec3& x) { return -ve(x)[1]; };
  prob.bcs.facet_vn["right"] = [ve](const Vec3& x) { return ve(x)[0]; };
  prob.bcs.facet_vn["top"] = [ve](const Vec3& x) { return ve(x)[1]; };
  prob.bcs.facet_vn["left"] = [ve](const Vec3& x) { return -ve(x)[0]; };
  prob.bcs.pressure_pin = {prob.mesh.find_node({0, 0, 0}, 1e-9), 10.0};
  return setup;
}

// ---------------------------------------------------------------------------
// Quarter five-spot on the unit square: injection at corner (0,0) and
// production at corner (1,1), zero normal flow on all outer facets, pressure 1
// pinned at (1,1). Each well prescribes v = (1,1) at its corner node, ramping
// linearly to zero across the two adjacent boundary facets; boundary nodes
// strictly inside that one-element ramp (the midside nodes of quadratic
// facets) carry the interpolated fraction, so the injected flux depends on
// the mesh spacing but not on the element order. The reported quantity of
// interest is the computed injection pressure p(0,0).
// ---------------------------------------------------------------------------

inline Problem five_spot_problem(int nx, ElemType et, const DragModel& model, Formulation f,
                                 int weight = 1, double theta = 1.0) {
  Problem prob;
  Box unit{{0, 0, 0}, {1, 1, 0}};
  switch (et) {
    case ElemType::T3: prob.mesh = generate_tri(nx, nx, unit); break;
    case ElemType::Q4: prob.mesh = generate_quad(nx, nx, unit, 1); break;
    case ElemType::Q9: prob.mesh = generate_quad(nx, nx, unit, 2); break;
    default: throw InvalidArgumentError("five_spot_problem: 2D element required");
  }
  prob.model = model;
  prob.formulation = f;
  prob.ls_weight = weight;
  prob.theta = theta;

  for (const char* tag : {"bottom", "right", "top", "left"})
    prob.bcs.facet_vn[tag] = [](const Vec3&) { return 0.0; };
  const double h = 1.0 / nx;
  const double tol = 1e-9;
  auto add_well = [&](const Vec3& corner) {
    for (int n = 0; n < prob.mesh.n_nodes(); ++n) {
      const Vec3 d = prob.mesh.node_coords[n] - corner;
      const double dist = d.norm();
      if (dist >= h - tol) continue;
      const bool on_x_edge = std::abs(d.y()) < tol;  // edge running along x
      const bool on_y_edge = std::abs(d.x()) < tol;  // edge running along y
      if (!on_x_edge && !on_y_edge) continue;
      const double w = 1.0 - dist / h;
      // The corner node carries the full vector; ramp nodes carry only the
      // component normal to their edge, leaving the tangential flow free.
      if (on_y_edge) prob.bcs.nodal_velocity.push_back({n, 0, w});
      if (on_x_edge) prob.bcs.nodal_velocity.push_back({n, 1, w});
    }
  };
  add_well(Vec3(0, 0, 0));
  add_well(Vec3(1, 1, 0));
  prob.bcs.pressure_pin = {prob.mesh.find_node({1, 1, 0}, 1e-9), 1.0};
  return prob;
}

inline int five_spot_injection_node(const Mesh& mesh) { return mesh.find_node({0, 0, 0}, 1e-9); }

// ---------------------------------------------------------------------------
// 3D constant flow through the unit cube: v.n = -1 on x=0, +1 on x=1, sealed
// elsewhere, p = 0 pinned at the origin. The exact solution is v = (1,0,0)
// with pressure falling along x according to the drag law:
//   Darcy        p = -x
//   Forchheimer  p = -(1 + beta_f) x
//   Barus        p = -ln(1 + beta_b x) / beta_b
// ---------------------------------------------------------------------------

inline Problem patch3d_problem(int nx, DragVariant var, Formulation f, double theta = 1.0,
                               int weight = 1) {
  Problem prob;
  prob.mesh = generate_hex(nx, nx, nx, {{0, 0, 0}, {1, 1, 1}});
  prob.model = make_model(var, 1.0, 0.5, 1.0);
  prob.formulation = f;
  prob.ls_weight = weight;
  prob.theta = theta;
  // v = (1,0,0): outward v.n is -1 on the inflow plane x=0 and +1 at x=1.
  prob.bcs.facet_vn["left"] = [](const Vec3&) { return -1.0; };
  prob.bcs.facet_vn["right"] = [](const Vec3&) { return 1.0; };
  for (const char* tag : {"front", "back", "bottom", "top"})
    prob.bcs.facet_vn[tag] = [](const Vec3&) { return 0.0; };
  prob.bcs.pressure_pin = {prob.mesh.find_node({0, 0, 0}, 1e-9), 0.0};
  return prob;
}

inline double patch3d_exact_pressure(const DragModel& model, double x) {
  switch (model.variant) {
    case DragVariant::Darcy: return -model.mu0 * x;
    case DragVariant::Forchheimer: return -(model.mu0 + model.beta_f) * x;
    case DragVariant::Barus: return -std::log1p(model.beta_b * model.mu0 * x) / model.beta_b;
    default:
      throw InvalidArgumentError("no closed-form patch pressure for this drag variant");
  }
}

// ---------------------------------------------------------------------------
// Representative reservoir family. Geometry is configuration (the published
// figures do not pin it down); defaults: a 2 x 1 strip with two injection
// wells at the upper corners held at p_enh, a production well at the middle
// of the top surface held at atmospheric pressure 1, sealed flanks, and
// gravity-type body force (0, -1).
// ---------------------------------------------------------------------------

struct ReservoirGeometry {
  Box domain{{0, 0, 0}, {2, 1, 0}};
  int nx = 40, ny = 20;
  int order = 2;  // biquadratic by default
  std::vector<std::array<double, 2>> injection{{0.0, 0.2}, {1.8, 2.0}};
  std::vector<std::array<double, 2>> production{{0.9, 1.1}};
};

struct ReservoirSetup {
  Problem problem;
  std::vector<std::string> injection_tags;
  std::vector<std::string> production_tags;
};

inline ReservoirSetup reservoir_problem(const ReservoirGeometry& geo, const DragModel& model,
                                        double p_enh, Formulation f, int weight = 1,
                                        double theta = 1.0) {
  if (geo.injection.empty() || geo.production.empty())
    throw InvalidArgumentError("reservoir geometry needs injection and production spans");
  for (const auto& spans : {geo.injection, geo.production})
    for (const auto& s : spans)
      if (!(s[0] < s[1]) || s[0] < geo.domain.lo.x() - 1e-12 || s[1] > geo.domain.hi.x() + 1e-12)
        throw InvalidArgumentError("well span outside the domain or empty");

  ReservoirSetup setup;
  Problem& prob = setup.problem;
  prob.mesh = generate_quad(geo.nx, geo.ny, geo.domain, geo.order);

  auto in_span = [](const std::vector<std::array<double, 2>>& spans, double x) {
    for (const auto& s : spans)
      if (x > s[0] - 1e-12 && x < s[1] + 1e-12) return true;
    return false;
  };
  int n_inj = 0, n_prod = 0;
  prob.mesh.retag_boundary_facets(
      [&](const Vec3& center, const std::string& tag) -> std::optional<std::string> {
        if (tag != "top") return std::nullopt;
        if (in_span(geo.injection, center.x())) {
          ++n_inj;
          return "injection";
        }
        if (in_span(geo.production, center.x())) {
          ++n_prod;
          return "production";
        }
        return std::nullopt;
      });
  if (n_inj == 0 || n_prod == 0)
    throw InvalidArgumentError("well spans select no facets at this resolution");

  prob.model = model;
  prob.formulation = f;
  prob.ls_weight = weight;
  prob.theta = theta;
  prob.rho = 1.0;
  prob.body_force = [](const Vec3&) {
    VecX b(2);
    b << 0.0, -1.0;
    return b;
  };
  for (const char* tag : {"bottom", "left", "right", "top"})
    prob.bcs.facet_vn[tag] = [](const Vec3&) { return 0.0; };
  prob.bcs.pressure_facets = {{"injection", p_enh}, {"production", 1.0}};
  setup.injection_tags = {"injection"};
  setup.production_tags = {"production"};
  return setup;
}

// Layered variant: horizontal permeability layers (y0, y1, k) spanning the
// full x-extent. The layer stack must tile the domain height.
inline ReservoirSetup layered_problem(const ReservoirGeometry& geo,
                                      const std::vector<std::array<double, 3>>& layers,
                                      DragModel model, double p_enh, Formulation f,
                                      int weight = 1, double theta = 1.0) {
  if (layers.empty()) throw InvalidArgumentError("layered_problem: no layers given");
  RegionField field;
  for (const auto& l : layers) {
    RegionBox box;
    box.lo = Vec3(geo.domain.lo.x(), l[0], 0.0);
    box.hi = Vec3(geo.domain.hi.x(), l[1], 0.0);
    box.k = l[2];
    field.boxes.push_back(box);
  }
  field.validate(geo.domain.lo, geo.domain.hi, 2);
  model.permeability = field;
  return reservoir_problem(geo, model, p_enh, f, weight, theta);
}

// Staggered-barrier variant: vertical flow through a unit square whose
// interior contains three overlapping-in-projection impervious slabs, forcing
// a serpentine path. Injection along the bottom edge at p_enh, production
// along the top at atmospheric pressure, sealed sides and slab walls.
struct StaggeredGeometry {
  int n = 42;
  int order = 1;  // bilinear by default
  std::vector<Box> holes{
      {{0.0, 10.0 / 42.0, 0}, {24.0 / 42.0, 11.0 / 42.0, 0}},
      {{22.0 / 42.0, 21.0 / 42.0, 0}, {1.0, 22.0 / 42.0, 0}},
      {{0.0, 32.0 / 42.0, 0}, {24.0 / 42.0, 33.0 / 42.0, 0}},
  };
};

inline ReservoirSetup staggered_problem(const StaggeredGeometry& geo, const DragModel& model,
                                        double p_enh, Formulation f, int weight = 1,
                                        double theta = 1.0) {
  ReservoirSetup setup;
  Problem& prob = setup.problem;
  prob.mesh = generate_quad(geo.n, geo.n, {{0, 0, 0}, {1, 1, 0}}, geo.order);
  prob.mesh = carve_holes(prob.mesh, geo.holes);
  prob.model = model;
  prob.formulation = f;
  prob.ls_weight = weight;
  prob.theta = theta;
  for (const char* tag : {"left", "right", "impervious"})
    prob.bcs.facet_vn[tag] = [](const Vec3&) { return 0.0; };
  prob.bcs.pressure_facets = {{"bottom", p_enh}, {"top", 1.0}};
  setup.injection_tags = {"bottom"};
  setup.production_tags = {"top"};
  return setup;
}

}  // namespace dflow
