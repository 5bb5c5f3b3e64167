// verify.hpp - the acceptance suite: nine end-to-end checks that pin the
// solver's published behavior. Each check returns a pass/fail result with a
// human-readable detail string; tolerances are fixed here, not configurable,
// so a regression cannot be waved through by loosening a knob at run time.

#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dflow/common.hpp"
#include "dflow/drag.hpp"
#include "dflow/formulations.hpp"
#include "dflow/postproc.hpp"
#include "dflow/problems.hpp"
#include "dflow/solver.hpp"

namespace dflow::verify {

struct CriterionResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline bool in_band(double x, double lo, double hi) { return x >= lo && x <= hi; }

inline std::string join(const std::vector<std::string>& parts, size_t limit = 6) {
  std::string out;
  for (size_t i = 0; i < parts.size() && i < limit; ++i) out += (i ? "; " : "") + parts[i];
  if (parts.size() > limit) out += "; +" + std::to_string(parts.size() - limit) + " more";
  return out;
}

// Least-squares exponent q of r_{k+1} ~ C r_k^q over successive velocity
// increments. Pairs above `cut` belong to the initial transient and pairs
// below `floor` sit in the linear-solver noise, so both are excluded. The
// velocity sequence is used because the pressure increments also carry the
// (stabilized) incompressibility mode, which contracts at its own fixed
// linear rate and masks the linearization order. Linear convergence gives q
// near 1, quadratic near 2; with a single eligible pair the fit degenerates
// to the two-point estimate log r_{k+1} / log r_k.
inline double rate_exponent(const NonlinearReport& rep, double cut = 0.5, double floor = 1e-9) {
  std::vector<std::pair<double, double>> pts;
  for (size_t k = 0; k + 1 < rep.history.size(); ++k) {
    const double rk = rep.history[k].res_v;
    const double rk1 = rep.history[k + 1].res_v;
    if (rk <= cut && rk1 >= floor) pts.emplace_back(std::log(rk), std::log(rk1));
  }
  if (pts.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (pts.size() == 1) return pts[0].second / pts[0].first;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(pts.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline double five_spot_pressure(int nx, ElemType et, const DragModel& model, Formulation f,
                                 int weight, double theta, NonlinearReport* rep_out = nullptr) {
  Problem prob = five_spot_problem(nx, et, model, f, weight, theta);
  const int inj = five_spot_injection_node(prob.mesh);
  auto [sol, rep] = nonlinear_solve(prob);
  if (!rep.converged)
    throw Error("five-spot run did not converge (" + std::to_string(rep.iterations) +
                " iterations)");
  if (rep_out) *rep_out = rep;
  return sol.p[inj];
}

}  // namespace detail

// --- 1 -----------------------------------------------------------------
// Manufactured-solution convergence slopes for Q4 and T3, all four drag
// models, both formulations, h in {1/4 .. 1/64}.
inline CriterionResult check_mms_slopes() {
  using detail::in_band;
  CriterionResult res{"mms_convergence_slopes"};
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::string> failures;

  const DragVariant variants[] = {DragVariant::Darcy, DragVariant::Barus,
                                  DragVariant::Forchheimer, DragVariant::BarusForchheimer};
  const Formulation forms[] = {Formulation::LS, Formulation::VMS};
  const int ns[] = {4, 8, 16, 32, 64};

  for (ElemType et : {ElemType::Q4, ElemType::T3}) {
    for (Formulation f : forms) {
      for (DragVariant var : variants) {
        std::vector<std::pair<double, double>> sv2, sv1, sp2, sp1;
        for (int n : ns) {
          MmsSetup setup = mms_problem(n, et, var, f, 1, 1.0);
          auto [sol, rep] = nonlinear_solve(setup.problem);
          if (!rep.converged) {
            failures.push_back("no convergence at n=" + std::to_string(n));
            continue;
          }
          ErrorReport err = error_norms(setup.problem.mesh, sol, setup.exact, setup.h);
          sv2.emplace_back(setup.h, err.v_l2);
          sv1.emplace_back(setup.h, err.v_h1);
          sp2.emplace_back(setup.h, err.p_l2);
          sp1.emplace_back(setup.h, err.p_h1);
        }
        // Rates are measured on the three finest meshes: the coarse end of
        // the sweep is still preasymptotic for the simplex pressure norms and
        // the stabilized velocity gradient.
        auto tail_slope = [](std::vector<std::pair<double, double>> pts) {
          if (pts.size() > 3) pts.erase(pts.begin(), pts.end() - 3);
          return convergence_slope(pts);
        };
        const double v_l2 = -tail_slope(sv2);
        const double v_h1 = -tail_slope(sv1);
        const double p_l2 = -tail_slope(sp2);
        const double p_h1 = -tail_slope(sp1);
        const std::string id = (et == ElemType::Q4 ? "Q4/" : "T3/") +
                               std::string(f == Formulation::LS ? "ls/" : "vms/") +
                               std::to_string(static_cast<int>(var));
        if (et == ElemType::Q4) {
          if (!in_band(v_l2, -2.10, -1.90))
            failures.push_back(id + " vL2=" + detail::num(v_l2));
          if (!in_band(v_h1, -1.15, -0.85))
            failures.push_back(id + " vH1=" + detail::num(v_h1));
          if (!in_band(p_l2, -2.13, -1.85))
            failures.push_back(id + " pL2=" + detail::num(p_l2));
          if (!in_band(p_h1, -1.05, -0.95))
            failures.push_back(id + " pH1=" + detail::num(p_h1));
        } else {
          if (!in_band(v_l2, -2.07, -1.71))
            failures.push_back(id + " vL2=" + detail::num(v_l2));
          if (!in_band(p_l2, -1.82, -1.52))
            failures.push_back(id + " pL2=" + detail::num(p_l2));
          if (!in_band(p_h1, -1.00, -0.90))
            failures.push_back(id + " pH1=" + detail::num(p_h1));
        }
      }
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > 300.0) failures.push_back("runtime " + detail::num(secs) + "s exceeds 300s");
  res.passed = failures.empty();
  res.detail = res.passed
                   ? "16 element/formulation/model combos in band, " + detail::num(secs) + "s"
                   : detail::join(failures);
  return res;
}

// --- 2 -----------------------------------------------------------------
// Five-spot injection pressures across uniform drag magnitudes: the VMS Q4
// and weighted LS Q9 rows reproduce the reference values within 2%, and
// unweighted LS Q4 under-predicts at high drag by at least 30%.
inline CriterionResult check_weighting_pressures() {
  CriterionResult res{"five_spot_weighting"};
  const double alphas[] = {1, 20, 50, 100, 250, 500, 1000};
  const double vms_q4_ref[] = {1.27, 6.37, 14.42, 27.84, 68.09, 135.18, 269.37};
  const double ls2_q9_ref[] = {1.27, 6.38, 14.46, 27.92, 68.31, 135.60, 269.37};
  std::vector<std::string> failures;

  double vms_q4_last = 0.0, ls1_q4_last = 0.0;
  for (int i = 0; i < 7; ++i) {
    const DragModel m = make_model(DragVariant::Darcy, alphas[i], 0.0, 0.0, 1.0);
    const double p_vms =
        detail::five_spot_pressure(20, ElemType::Q4, m, Formulation::VMS, 1, 1.0);
    const double p_ls2 =
        detail::five_spot_pressure(20, ElemType::Q9, m, Formulation::LS, 2, 1.0);
    if (std::abs(p_vms - vms_q4_ref[i]) > 0.02 * vms_q4_ref[i])
      failures.push_back("vms Q4 alpha=" + detail::num(alphas[i]) + ": " + detail::num(p_vms) +
                         " vs " + detail::num(vms_q4_ref[i]));
    if (std::abs(p_ls2 - ls2_q9_ref[i]) > 0.02 * ls2_q9_ref[i])
      failures.push_back("ls w2 Q9 alpha=" + detail::num(alphas[i]) + ": " + detail::num(p_ls2) +
                         " vs " + detail::num(ls2_q9_ref[i]));
    if (i == 6) {
      vms_q4_last = p_vms;
      ls1_q4_last = detail::five_spot_pressure(20, ElemType::Q4, m, Formulation::LS, 1, 1.0);
    }
  }
  if (!(ls1_q4_last <= 0.70 * vms_q4_last))
    failures.push_back("ls w1 Q4 at alpha=1000 is " + detail::num(ls1_q4_last) +
                       ", not >=30% below vms " + detail::num(vms_q4_last));
  res.passed = failures.empty();
  res.detail = res.passed ? "vms Q4 and ls-w2 Q9 rows within 2%; unweighted LS gap " +
                                detail::num(100.0 * (1.0 - ls1_q4_last / vms_q4_last)) + "%"
                          : detail::join(failures);
  return res;
}

// --- 3 -----------------------------------------------------------------
// Five-spot injection pressures per drag model (beta_b = beta_f = 0.5) at two
// mesh sizes, against reference values, plus the strict drag ordering.
inline CriterionResult check_model_pressures() {
  CriterionResult res{"five_spot_model_comparison"};
  struct Row {
    int nx;
    Formulation f;
    std::array<double, 4> ref;  // darcy, barus, forchheimer, barus_forchheimer
  };
  const Row rows[] = {
      {20, Formulation::LS, {1.2692, 1.5017, 1.3382, 1.5806}},
      {20, Formulation::VMS, {1.2693, 1.5020, 1.3382, 1.5809}},
      {30, Formulation::LS, {1.1967, 1.3538, 1.2430, 1.4045}},
      {30, Formulation::VMS, {1.1967, 1.3539, 1.2430, 1.4047}},
  };
  const DragVariant variants[] = {DragVariant::Darcy, DragVariant::Barus,
                                  DragVariant::Forchheimer, DragVariant::BarusForchheimer};
  std::vector<std::string> failures;
  for (const auto& row : rows) {
    std::array<double, 4> got{};
    for (int i = 0; i < 4; ++i) {
      const DragModel m = make_model(variants[i], 1.0, 0.5, 0.5);
      got[i] = detail::five_spot_pressure(row.nx, ElemType::Q9, m, row.f,
                                          row.f == Formulation::LS ? 2 : 1, 1.0);
      if (std::abs(got[i] - row.ref[i]) > 0.01 * row.ref[i])
        failures.push_back("nx=" + std::to_string(row.nx) +
                           (row.f == Formulation::LS ? " ls " : " vms ") + detail::num(got[i]) +
                           " vs " + detail::num(row.ref[i]));
    }
    // Expected ordering: darcy < forchheimer < barus < combined.
    if (!(got[0] < got[2] && got[2] < got[1] && got[1] < got[3]))
      failures.push_back("ordering D<F<MB<MBF violated at nx=" + std::to_string(row.nx));
  }
  res.passed = failures.empty();
  res.detail = res.passed ? "8 rows within 1%, drag ordering strict" : detail::join(failures);
  return res;
}

// --- 4 -----------------------------------------------------------------
// Picard vs consistent linearization on the five-spot Barus problem
// (beta_b = 0.6, Q9): iteration counts and terminal convergence rates.
inline CriterionResult check_linearization() {
  CriterionResult res{"linearization_convergence"};
  std::vector<std::string> failures;
  const DragModel m = make_model(DragVariant::Barus, 1.0, 0.6, 0.0);
  for (Formulation f : {Formulation::LS, Formulation::VMS}) {
    const int weight = f == Formulation::LS ? 2 : 1;
    const std::string fname = f == Formulation::LS ? "ls" : "vms";

    NonlinearReport picard;
    detail::five_spot_pressure(20, ElemType::Q9, m, f, weight, 0.0, &picard);
    if (picard.iterations < 8 || picard.iterations > 10)
      failures.push_back(fname + " picard iterations " + std::to_string(picard.iterations) +
                         " outside [8,10]");
    const double q_picard = detail::rate_exponent(picard);
    if (!(q_picard >= 0.5 && q_picard <= 1.5))
      failures.push_back(fname + " picard rate exponent " + detail::num(q_picard) +
                         " not linear-like");

    NonlinearReport newton;
    detail::five_spot_pressure(20, ElemType::Q9, m, f, weight, 1.0, &newton);
    if (newton.iterations < 5 || newton.iterations > 7)
      failures.push_back(fname + " consistent iterations " + std::to_string(newton.iterations) +
                         " outside [5,7]");
    const double q_newton = detail::rate_exponent(newton);
    if (!(q_newton >= 1.7))
      failures.push_back(fname + " consistent rate exponent " + detail::num(q_newton) +
                         " below 1.7");
  }
  res.passed = failures.empty();
  res.detail = res.passed ? "picard 8-10 linear, consistent 5-7 quadratic, both formulations"
                          : detail::join(failures);
  return res;
}

// --- 5 -----------------------------------------------------------------
// 3D constant-flow patch test on 6^3 bricks: Darcy exact to 1e-10 under both
// formulations; Barus pressure matches the closed-form ODE solution at the
// mid-plane within 1e-3.
inline CriterionResult check_patch3d() {
  CriterionResult res{"patch3d"};
  std::vector<std::string> failures;
  for (Formulation f : {Formulation::LS, Formulation::VMS}) {
    const std::string fname = f == Formulation::LS ? "ls" : "vms";
    {
      Problem prob = patch3d_problem(6, DragVariant::Darcy, f);
      auto [sol, rep] = nonlinear_solve(prob);
      double v_err = 0.0, p_err = 0.0;
      for (int n = 0; n < prob.mesh.n_nodes(); ++n) {
        v_err = std::max(v_err, std::abs(sol.v(n, 0) - 1.0));
        v_err = std::max(v_err, std::abs(sol.v(n, 1)));
        v_err = std::max(v_err, std::abs(sol.v(n, 2)));
        p_err = std::max(p_err, std::abs(sol.p[n] - patch3d_exact_pressure(
                                                        prob.model, prob.mesh.node_coords[n].x())));
      }
      if (v_err > 1e-10) failures.push_back(fname + " darcy v error " + detail::num(v_err));
      if (p_err > 1e-10) failures.push_back(fname + " darcy p error " + detail::num(p_err));
    }
    {
      // Fixed-point (theta = 0) iteration, matching how the reference pressure
      // profiles are computed; the least-squares theta = 1 fixed point differs
      // from it at discretization-error order.
      Problem prob = patch3d_problem(6, DragVariant::Barus, f, 0.0);
      auto [sol, rep] = nonlinear_solve(prob);
      if (!rep.converged) failures.push_back(fname + " barus run did not converge");
      double p_err = 0.0;
      for (int n : prob.mesh.find_nodes(
               [](const Vec3& x) { return std::abs(x.x() - 0.5) < 1e-9; }))
        p_err = std::max(p_err,
                         std::abs(sol.p[n] - patch3d_exact_pressure(prob.model, 0.5)));
      if (p_err > 1e-3)
        failures.push_back(fname + " barus mid-plane p error " + detail::num(p_err));
    }
  }
  res.passed = failures.empty();
  res.detail = res.passed ? "darcy exact, barus mid-plane within 1e-3, both formulations"
                          : detail::join(failures);
  return res;
}

// --- 6 -----------------------------------------------------------------
// Dissipation under refinement on the five-spot suite: non-increasing with h
// for every model/formulation pair, with LS dissipation at or above VMS.
inline CriterionResult check_min_dissipation() {
  CriterionResult res{"minimum_dissipation"};
  std::vector<std::string> failures;
  const int ns[] = {4, 6, 8, 10, 12};
  const DragVariant variants[] = {DragVariant::Darcy, DragVariant::Barus,
                                  DragVariant::Forchheimer, DragVariant::BarusForchheimer};
  for (DragVariant var : variants) {
    const DragModel m = make_model(var, 1.0, 0.1, 0.5);
    std::array<std::vector<double>, 2> phis;  // [0]=LS, [1]=VMS
    for (int fi = 0; fi < 2; ++fi) {
      const Formulation f = fi == 0 ? Formulation::LS : Formulation::VMS;
      for (int n : ns) {
        Problem prob = five_spot_problem(n, ElemType::Q9, m, f, fi == 0 ? 2 : 1, 1.0);
        auto [sol, rep] = nonlinear_solve(prob);
        if (!rep.converged) {
          failures.push_back("no convergence at n=" + std::to_string(n));
          continue;
        }
        phis[fi].push_back(total_dissipation(prob.mesh, sol, m));
      }
    }
    for (int fi = 0; fi < 2; ++fi)
      for (size_t i = 0; i + 1 < phis[fi].size(); ++i)
        if (phis[fi][i + 1] > phis[fi][i] * (1.0 + 1e-10))
          failures.push_back(std::string(fi == 0 ? "ls" : "vms") + " model " +
                             std::to_string(static_cast<int>(var)) + " dissipation rises at h#" +
                             std::to_string(i + 1));
    for (size_t i = 0; i < phis[0].size() && i < phis[1].size(); ++i)
      if (!(phis[0][i] >= phis[1][i] - 1e-8))
        failures.push_back("ls dissipation " + detail::num(phis[0][i]) + " below vms " +
                           detail::num(phis[1][i]) + " at h#" + std::to_string(i));
  }
  res.passed = failures.empty();
  res.detail = res.passed ? "dissipation non-increasing under refinement; ls >= vms at every h"
                          : detail::join(failures);
  return res;
}

// --- 7 -----------------------------------------------------------------
// Reciprocity of crossed work terms for two polynomial Darcy problems with a
// shared constant drag; the combined Barus-Forchheimer model is the
// documented counterexample.
namespace detail {

struct PolyCase {
  Problem prob;
  ReciprocityData data;
};

// Two divergence-free quadratic velocity fields with quadratic pressures;
// both lie in the Q9 space, so structured-mesh solves reproduce them to
// machine accuracy.
inline PolyCase make_poly_case(int which, const DragModel& model, int nx, Formulation f) {
  std::function<VecX(const Vec3&)> v;
  std::function<double(const Vec3&)> p;
  std::function<VecX(const Vec3&)> grad_p;
  if (which == 1) {
    v = [](const Vec3& x) {
      VecX out(2);
      out << 2.0 * x.y() * (x.x() + x.y()), 4.0 * x.x() - x.y() * x.y();
      return out;
    };
    p = [](const Vec3& x) { return 1.0 - x.x() * x.y(); };
    grad_p = [](const Vec3& x) {
      VecX g(2);
      g << -x.y(), -x.x();
      return g;
    };
  } else {
    v = [](const Vec3& x) {
      VecX out(2);
      out << 3.0 * x.y() * x.y() - 3.0 * x.x() * x.x(),
          6.0 * x.x() * x.y() - 3.0 * x.x() * x.x();
      return out;
    };
    p = [](const Vec3& x) {
      return x.x() * x.x() - x.y() * x.y() + x.x() * x.y();
    };
    grad_p = [](const Vec3& x) {
      VecX g(2);
      g << 2.0 * x.x() + x.y(), x.x() - 2.0 * x.y();
      return g;
    };
  }

  PolyCase pc;
  pc.prob.mesh = generate_quad(nx, nx, {{0, 0, 0}, {1, 1, 0}}, 2);
  pc.prob.model = model;
  pc.prob.formulation = f;
  pc.prob.theta = 1.0;
  pc.prob.body_force = [model, v, p, grad_p](const Vec3& x) {
    const VecX vq = v(x);
    return VecX(model.alpha(vq, p(x), x) * vq + grad_p(x));
  };
  pc.prob.bcs.facet_vn["bottom"] = [v](const Vec3& x) { return -v(x)[1]; };
  pc.prob.bcs.facet_vn["right"] = [v](const Vec3& x) { return v(x)[0]; };
  pc.prob.bcs.facet_vn["top"] = [v](const Vec3& x) { return v(x)[1]; };
  pc.prob.bcs.facet_vn["left"] = [v](const Vec3& x) { return -v(x)[0]; };
  pc.prob.bcs.pressure_pin = {pc.prob.mesh.find_node({0, 0, 0}, 1e-9), p(Vec3(0, 0, 0))};
  pc.data.b = pc.prob.body_force;
  pc.data.rho = 1.0;
  return pc;
}

inline double reciprocity_rel_residual(const DragModel& model, int nx) {
  PolyCase c1 = make_poly_case(1, model, nx, Formulation::LS);
  PolyCase c2 = make_poly_case(2, model, nx, Formulation::LS);
  auto [s1, r1] = nonlinear_solve(c1.prob);
  auto [s2, r2] = nonlinear_solve(c2.prob);
  if (!r1.converged || !r2.converged) throw Error("reciprocity solve did not converge");
  ReciprocityTerms t = reciprocity_terms(c1.prob.mesh, s1, c1.data, s2, c2.data);
  return t.residual() / t.scale();
}

}  // namespace detail

inline CriterionResult check_reciprocity() {
  CriterionResult res{"reciprocity"};
  std::vector<std::string> failures;
  const double darcy_rel =
      detail::reciprocity_rel_residual(make_model(DragVariant::Darcy, 2.0, 0.0, 0.0), 8);
  if (!(darcy_rel <= 1e-8))
    failures.push_back("constant-drag relative residual " + detail::num(darcy_rel));
  const double mbf_rel = detail::reciprocity_rel_residual(
      make_model(DragVariant::BarusForchheimer, 1.0, 0.5, 0.5), 8);
  if (!(mbf_rel >= 1e-3))
    failures.push_back("combined-model residual " + detail::num(mbf_rel) +
                       " unexpectedly small");
  res.passed = failures.empty();
  res.detail = res.passed ? "darcy rel residual " + detail::num(darcy_rel) +
                                ", combined-model counterexample " + detail::num(mbf_rel)
                          : detail::join(failures);
  return res;
}

// --- 8 -----------------------------------------------------------------
// Ceiling-flux behavior on the representative reservoir: Darcy flux linear in
// injection pressure, nonlinear drag curves strictly concave with the
// combined model lowest, and local mass-balance ratios growing with pressure
// and larger under VMS than LS.
namespace detail {

struct ReservoirRun {
  double flux = 0.0;
  double max_ratio = 0.0;
};

inline ReservoirRun reservoir_run(DragVariant var, double p_enh, Formulation f) {
  ReservoirGeometry geo;
  geo.nx = 20;
  geo.ny = 10;
  const DragModel model = make_model(var, 1.0, 0.005, 0.01);
  ReservoirSetup setup =
      reservoir_problem(geo, model, p_enh, f, f == Formulation::LS ? 2 : 1, 1.0);
  auto [sol, rep] = nonlinear_solve(setup.problem);
  if (!rep.converged)
    throw Error("reservoir run did not converge (p_enh " + num(p_enh) + ")");
  ReservoirRun out;
  out.flux = boundary_flux(setup.problem.mesh, sol, setup.production_tags);
  out.max_ratio =
      local_mass_balance(setup.problem.mesh, sol, setup.production_tags).max_ratio;
  return out;
}

}  // namespace detail

inline CriterionResult check_ceiling_flux() {
  CriterionResult res{"ceiling_flux"};
  std::vector<std::string> failures;
  const double ps[] = {250, 500, 750, 1000};

  std::map<DragVariant, std::array<detail::ReservoirRun, 4>> ls;
  for (DragVariant var : {DragVariant::Darcy, DragVariant::Barus, DragVariant::Forchheimer,
                          DragVariant::BarusForchheimer})
    for (int i = 0; i < 4; ++i) ls[var][i] = detail::reservoir_run(var, ps[i], Formulation::LS);

  // Darcy: straight-line fit residual within 1% of the largest flux.
  {
    const auto& runs = ls[DragVariant::Darcy];
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < 4; ++i) {
      sx += ps[i];
      sy += runs[i].flux;
      sxx += ps[i] * ps[i];
      sxy += ps[i] * runs[i].flux;
    }
    const double b = (4 * sxy - sx * sy) / (4 * sxx - sx * sx);
    const double a = (sy - b * sx) / 4;
    double max_resid = 0, max_flux = 0;
    for (int i = 0; i < 4; ++i) {
      max_resid = std::max(max_resid, std::abs(runs[i].flux - (a + b * ps[i])));
      max_flux = std::max(max_flux, std::abs(runs[i].flux));
    }
    if (max_resid > 0.01 * max_flux)
      failures.push_back("darcy flux-pressure fit residual " + detail::num(max_resid) +
                         " vs max flux " + detail::num(max_flux));
  }

  // Nonlinear drag: strictly concave flux curves, combined model lowest.
  for (DragVariant var :
       {DragVariant::Barus, DragVariant::Forchheimer, DragVariant::BarusForchheimer}) {
    const auto& runs = ls[var];
    for (int i = 1; i < 3; ++i)
      if (!(runs[i + 1].flux - 2 * runs[i].flux + runs[i - 1].flux < 0))
        failures.push_back("model " + std::to_string(static_cast<int>(var)) +
                           " flux curve not concave at p=" + detail::num(ps[i]));
  }
  for (int i = 0; i < 4; ++i) {
    const double mbf = ls[DragVariant::BarusForchheimer][i].flux;
    const double lo =
        std::min(ls[DragVariant::Barus][i].flux, ls[DragVariant::Forchheimer][i].flux);
    if (!(mbf <= lo * (1.0 + 1e-9)))
      failures.push_back("combined flux " + detail::num(mbf) + " above min(MB,F) " +
                         detail::num(lo) + " at p=" + detail::num(ps[i]));
  }

  // Mass-balance ratios: growing with injection pressure, VMS above LS.
  const auto& mbf_ls = ls[DragVariant::BarusForchheimer];
  for (int i = 0; i + 1 < 4; ++i)
    if (!(mbf_ls[i + 1].max_ratio > mbf_ls[i].max_ratio))
      failures.push_back("max balance ratio not growing at p=" + detail::num(ps[i + 1]));
  for (int i = 0; i < 4; ++i) {
    const detail::ReservoirRun vms =
        detail::reservoir_run(DragVariant::BarusForchheimer, ps[i], Formulation::VMS);
    if (!(vms.max_ratio >= mbf_ls[i].max_ratio - 1e-12))
      failures.push_back("vms max ratio " + detail::num(vms.max_ratio) + " below ls " +
                         detail::num(mbf_ls[i].max_ratio) + " at p=" + detail::num(ps[i]));
  }

  res.passed = failures.empty();
  res.detail = res.passed
                   ? "darcy linear, nonlinear curves concave, combined lowest, ratios grow"
                   : detail::join(failures);
  return res;
}

// --- 9 -----------------------------------------------------------------
// Oracle equivalence: the assembled element matrix is the finite-difference
// Hessian of an independently coded discrete functional, and global assembly
// matches a dense scatter-add.
namespace detail {

// Value of the (linearized) weighted residual functional on one element,
// computed with plain shape-function loops and no operator matrices. Its
// Hessian in the element DOFs is the element matrix by construction.
inline double ls_functional(const Mesh& mesh, int e, const DragModel& model,
                            const IterateSnapshot& snap, int weight_id, const BodyForce& bf,
                            double rho, const VecX& u) {
  const int nd = mesh.dim;
  const int nn = mesh.nodes_per_elem();
  double value = 0.0;
  for (const auto& qp : quadrature(mesh.elem_type)) {
    ElementEval ev = eval_element(mesh, e, qp.xi);
    VecX v_i = VecX::Zero(nd), v_u = VecX::Zero(nd), gp = VecX::Zero(nd);
    double p_i = 0, p_u = 0, div = 0;
    for (int a = 0; a < nn; ++a) {
      p_i += ev.N[a] * snap.p[a];
      p_u += ev.N[a] * u[nd * nn + a];
      for (int c = 0; c < nd; ++c) {
        v_i[c] += ev.N[a] * snap.v(a, c);
        v_u[c] += ev.N[a] * u[a * nd + c];
        div += ev.grad(a, c) * u[a * nd + c];
        gp[c] += ev.grad(a, c) * u[nd * nn + a];
      }
    }
    const double alpha = model.alpha(v_i, p_i, ev.x);
    const double c_p = snap.theta * model.dalpha_dp(v_i, p_i, ev.x);
    const VecX dav = snap.theta * model.dalpha_dv(v_i, p_i, ev.x);
    const VecX d_cur = c_p * p_i * v_i + dav * v_i.dot(v_i);
    const VecX rhs = rho * bf(ev.x) + d_cur;
    const VecX L = alpha * v_u + c_p * p_u * v_i + dav * v_i.dot(v_u) + gp - rhs;
    const double inv_a = 1.0 / ls_weight(weight_id, alpha);
    value += qp.w * ev.detJ * (0.5 * inv_a * L.squaredNorm() + 0.5 * div * div);
  }
  return value;
}

inline MatX fd_hessian(const std::function<double(const VecX&)>& f, const VecX& u0, double eps) {
  const int n = static_cast<int>(u0.size());
  MatX H(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      VecX upp = u0, upm = u0, ump = u0, umm = u0;
      upp[i] += eps;
      upp[j] += eps;
      upm[i] += eps;
      upm[j] -= eps;
      ump[i] -= eps;
      ump[j] += eps;
      umm[i] -= eps;
      umm[j] -= eps;
      H(i, j) = (f(upp) - f(upm) - f(ump) + f(umm)) / (4.0 * eps * eps);
    }
  return H;
}

}  // namespace detail

inline CriterionResult check_oracle_equivalence() {
  CriterionResult res{"oracle_equivalence"};
  std::vector<std::string> failures;
  const DragModel model = make_model(DragVariant::BarusForchheimer, 1.0, 0.5, 0.5);
  const BodyForce bf = [](const Vec3& x) {
    VecX b(2);
    b << 1.0 + x.x(), 2.0 - x.y();
    return b;
  };
  const double rho = 1.2;

  for (int nelx : {1, 2}) {
    const Mesh mesh = generate_quad(nelx, 1, {{0, 0, 0}, {static_cast<double>(nelx), 1, 0}}, 1);
    MatX v_iter(mesh.n_nodes(), 2);
    VecX p_iter(mesh.n_nodes());
    for (int n = 0; n < mesh.n_nodes(); ++n) {
      v_iter(n, 0) = 0.3 + 0.11 * n;
      v_iter(n, 1) = -0.2 + 0.07 * n;
      p_iter[n] = 0.5 + 0.13 * n;
    }

    for (int e = 0; e < mesh.n_elems(); ++e) {
      IterateSnapshot snap;
      snap.theta = 1.0;
      const auto& conn = mesh.connectivity[e];
      snap.v.resize(static_cast<int>(conn.size()), 2);
      snap.p.resize(static_cast<int>(conn.size()));
      for (size_t a = 0; a < conn.size(); ++a) {
        snap.v.row(static_cast<int>(a)) = v_iter.row(conn[a]);
        snap.p[static_cast<int>(a)] = p_iter[conn[a]];
      }
      ElementSystem sys = ls_element_system(mesh, e, model, snap, 2, bf, rho);
      VecX u0 = VecX::Constant(sys.Ke.rows(), 0.25);
      MatX H = detail::fd_hessian(
          [&](const VecX& u) {
            return detail::ls_functional(mesh, e, model, snap, 2, bf, rho, u);
          },
          u0, 1e-4);
      const double rel = (H - sys.Ke).norm() / sys.Ke.norm();
      if (!(rel <= 1e-6))
        failures.push_back("element Hessian mismatch " + detail::num(rel) + " (mesh " +
                           std::to_string(nelx) + ", elem " + std::to_string(e) + ")");
    }

    // Dense scatter-add oracle for the assembled matrix.
    BoundaryConditions none;
    SparseSystem sys = assemble(mesh, Formulation::LS, 2, model, v_iter, p_iter, 1.0, none,
                                bf, rho);
    const int ndof = mesh.n_nodes() * 3;
    MatX dense = MatX::Zero(ndof, ndof);
    VecX dense_b = VecX::Zero(ndof);
    for (int e = 0; e < mesh.n_elems(); ++e) {
      IterateSnapshot snap;
      snap.theta = 1.0;
      const auto& conn = mesh.connectivity[e];
      snap.v.resize(static_cast<int>(conn.size()), 2);
      snap.p.resize(static_cast<int>(conn.size()));
      for (size_t a = 0; a < conn.size(); ++a) {
        snap.v.row(static_cast<int>(a)) = v_iter.row(conn[a]);
        snap.p[static_cast<int>(a)] = p_iter[conn[a]];
      }
      ElementSystem es = ls_element_system(mesh, e, model, snap, 2, bf, rho);
      for (size_t i = 0; i < es.dof_map.size(); ++i) {
        dense_b[es.dof_map[i]] += es.fe[static_cast<int>(i)];
        for (size_t j = 0; j < es.dof_map.size(); ++j)
          dense(es.dof_map[i], es.dof_map[j]) += es.Ke(static_cast<int>(i), static_cast<int>(j));
      }
    }
    const double scale = dense.cwiseAbs().maxCoeff();
    const double a_diff = (MatX(sys.A) - dense).cwiseAbs().maxCoeff();
    const double b_diff = (sys.b - dense_b).cwiseAbs().maxCoeff();
    if (a_diff > 1e-12 * scale || b_diff > 1e-12 * scale)
      failures.push_back("assembly differs from dense oracle by " + detail::num(a_diff) + "/" +
                         detail::num(b_diff));
  }
  res.passed = failures.empty();
  res.detail = res.passed ? "element matrices match FD Hessians; assembly matches dense oracle"
                          : detail::join(failures);
  return res;
}

// -------------------------------------------------------------------------

inline std::vector<CriterionResult> run_all() {
  using Check = CriterionResult (*)();
  const Check checks[] = {check_mms_slopes,     check_weighting_pressures,
                          check_model_pressures, check_linearization,
                          check_patch3d,        check_min_dissipation,
                          check_reciprocity,    check_ceiling_flux,
                          check_oracle_equivalence};
  std::vector<CriterionResult> out;
  for (Check c : checks) {
    try {
      out.push_back(c());
    } catch (const std::exception& e) {
      CriterionResult r;
      r.name = "criterion_" + std::to_string(out.size() + 1);
      r.passed = false;
      r.detail = std::string("exception: ") + e.what();
      out.push_back(r);
    }
  }
  return out;
}

}  // namespace dflow::verify
