// runner.hpp - executes a RunConfig end to end: builds the problem, drives
// the nonlinear solver, postprocesses per problem type, and writes CSV/VTK
// artifacts. Each CSV row ends with the full parameter fingerprint
// (model, formulation, weight, theta, h, element count) so rows from
// different runs can be concatenated without losing provenance.
//
// CSV files are written atomically (temp file + rename) with %.10g number
// formatting, so re-running an identical config yields byte-identical
// output.

#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dflow/common.hpp"
#include "dflow/config.hpp"
#include "dflow/postproc.hpp"
#include "dflow/problems.hpp"
#include "dflow/solver.hpp"
#include "dflow/vtk.hpp"

namespace dflow {

enum class RunStatus { Ok = 0, NonConverged = 2, InvalidConfig = 3 };

struct RunArtifacts {
  RunStatus status = RunStatus::Ok;
  std::vector<std::string> files;
  std::string message;
};

namespace detail {

inline std::string csv_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

inline void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error("cannot open '" + tmp + "' for writing");
    out << content;
    if (!out) throw Error("write failure on '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

inline void write_csv(const std::string& path, const std::string& header,
                      const std::vector<std::string>& rows) {
  std::string content = header + "\n";
  for (const auto& r : rows) content += r + "\n";
  write_text_atomic(path, content);
}

// Fingerprint cells carried by every CSV row: model, formulation, weight,
// theta, h, element count. Schemas whose leading columns already name some of
// these append only the remainder, so no column appears twice.
struct Fingerprint {
  std::string model;
  std::string formulation;
  int weight = 1;
  double theta = 1.0;
  std::string h;  // possibly a ;-joined list for sweep summaries
  std::string nele;

  std::string cells() const {  // model,formalism,weight,theta,h,nele
    return model + "," + formulation + "," + std::to_string(weight) + "," + csv_num(theta) +
           "," + h + "," + nele;
  }
  std::string cells_wthn() const {  // weight,theta,h,nele
    return std::to_string(weight) + "," + csv_num(theta) + "," + h + "," + nele;
  }
  std::string cells_mthn() const {  // model,theta,h,nele
    return model + "," + csv_num(theta) + "," + h + "," + nele;
  }
};

inline DragModel model_from_config(const RunConfig& cfg) {
  return make_model(parse_variant(cfg.variant), cfg.mu0, cfg.beta_b, cfg.beta_f, cfg.k);
}

inline void iteration_csv_rows(const NonlinearReport& rep, const Fingerprint& fp,
                               std::vector<std::string>& rows) {
  for (const auto& r : rep.history)
    rows.push_back(std::to_string(r.i) + "," + csv_num(r.res_v) + "," + csv_num(r.res_p) + "," +
                   fp.cells());
}

inline std::string out_path(const RunConfig& cfg, const std::string& name) {
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

inline void run_mms(const RunConfig& cfg, RunArtifacts& art) {
  const ElemType et = parse_elem_type(cfg.element);
  if (elem_dim(et) != 2) throw ConfigError("mms problem is two-dimensional");
  std::vector<double> hs = cfg.h_list;
  if (hs.empty()) hs = {1.0 / 4, 1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64};

  std::vector<std::pair<double, ErrorReport>> errs;
  NonlinearReport last_rep;
  MixedSolution last_sol;
  Mesh last_mesh;
  std::string h_cells, nele_cells;
  for (double h : hs) {
    const int n = std::max(1, static_cast<int>(std::lround(1.0 / h)));
    MmsSetup setup = mms_problem(n, et, parse_variant(cfg.variant),
                                 parse_formulation(cfg.formulation), cfg.weight, cfg.theta);
    setup.problem.model = model_from_config(cfg);
    setup.problem.rho = cfg.rho;
    setup.problem.body_force = mms_body_force(setup.problem.model, cfg.rho);
    setup.problem.tol = cfg.tol;
    setup.problem.max_iterations = cfg.max_iterations;
    auto [sol, rep] = nonlinear_solve(setup.problem);
    if (!rep.converged) art.status = RunStatus::NonConverged;
    errs.emplace_back(setup.h, error_norms(setup.problem.mesh, sol, setup.exact, setup.h));
    h_cells += (h_cells.empty() ? "" : ";") + csv_num(setup.h);
    nele_cells += (nele_cells.empty() ? "" : ";") +
                  std::to_string(setup.problem.mesh.n_elems());
    last_rep = rep;
    last_sol = sol;
    last_mesh = setup.problem.mesh;
    last_sol.mesh = &last_mesh;
  }

  Fingerprint fp{cfg.variant, cfg.formulation, cfg.weight, cfg.theta, h_cells, nele_cells};
  const struct {
    const char* field;
    const char* norm;
    double ErrorReport::*member;
  } kinds[] = {{"v", "L2", &ErrorReport::v_l2},
               {"v", "H1", &ErrorReport::v_h1},
               {"p", "L2", &ErrorReport::p_l2},
               {"p", "H1", &ErrorReport::p_h1}};
  std::vector<std::string> rows;
  for (const auto& kind : kinds) {
    std::vector<std::pair<double, double>> series;
    for (const auto& [h, rep] : errs) series.emplace_back(h, rep.*(kind.member));
    // Negated: rates are conventionally printed as negative slopes.
    const double slope = -convergence_slope(series);
    rows.push_back(cfg.element + "," + cfg.formulation + "," + cfg.variant + "," + kind.field +
                   "," + kind.norm + "," + csv_num(slope) + "," + fp.cells_wthn());
  }
  const std::string slopes_path = out_path(cfg, "mms_slopes.csv");
  write_csv(slopes_path, "element,formalism,model,field,norm,slope,weight,theta,h,nele", rows);
  art.files.push_back(slopes_path);

  std::vector<std::string> iter_rows;
  iteration_csv_rows(last_rep, fp, iter_rows);
  const std::string iter_path = out_path(cfg, "iterations.csv");
  write_csv(iter_path, "i,res_v,res_p,model,formalism,weight,theta,h,nele", iter_rows);
  art.files.push_back(iter_path);

  if (cfg.vtk) {
    const std::string vtk_path = out_path(cfg, "mms.vtk");
    write_vtk(vtk_path, last_mesh, last_sol);
    art.files.push_back(vtk_path);
  }
  art.message = "mms: " + std::to_string(errs.size()) + " meshes, finest v-L2 error " +
                csv_num(errs.back().second.v_l2);
}

inline void run_five_spot(const RunConfig& cfg, RunArtifacts& art) {
  const ElemType et = parse_elem_type(cfg.element);
  if (elem_dim(et) != 2) throw ConfigError("five_spot problem is two-dimensional");
  const int nx = cfg.nx;
  const double h = 1.0 / nx;

  struct Case {
    double alpha;
    DragModel model;
  };
  std::vector<Case> cases;
  if (!cfg.alpha_list.empty()) {
    // Weighting study: Darcy drag swept over uniform drag magnitudes.
    for (double a : cfg.alpha_list)
      cases.push_back({a, make_model(DragVariant::Darcy, a, 0.0, 0.0, 1.0)});
  } else {
    cases.push_back({cfg.mu0 / cfg.k, model_from_config(cfg)});
  }

  std::vector<std::string> rows;
  NonlinearReport last_rep;
  MixedSolution last_sol;
  Mesh last_mesh;
  for (const auto& c : cases) {
    Problem prob = five_spot_problem(nx, et, c.model, parse_formulation(cfg.formulation),
                                     cfg.weight, cfg.theta);
    prob.tol = cfg.tol;
    prob.max_iterations = cfg.max_iterations;
    const int inj = five_spot_injection_node(prob.mesh);
    auto [sol, rep] = nonlinear_solve(prob);
    if (!rep.converged) art.status = RunStatus::NonConverged;
    Fingerprint fp{cfg.alpha_list.empty() ? cfg.variant : "darcy", cfg.formulation, cfg.weight,
                   cfg.theta, csv_num(h), std::to_string(prob.mesh.n_elems())};
    rows.push_back(csv_num(c.alpha) + "," + cfg.formulation + "," + std::to_string(cfg.weight) +
                   "," + cfg.element + "," + csv_num(sol.p[inj]) + "," + fp.cells_mthn());
    last_rep = rep;
    last_sol = sol;
    last_mesh = prob.mesh;
    last_sol.mesh = &last_mesh;
  }

  const std::string fs_path = out_path(cfg, "five_spot.csv");
  write_csv(fs_path, "alpha,formalism,weight,element,p_injection,model,theta,h,nele", rows);
  art.files.push_back(fs_path);

  Fingerprint fp{cfg.alpha_list.empty() ? cfg.variant : "darcy", cfg.formulation, cfg.weight,
                 cfg.theta, csv_num(h), std::to_string(last_mesh.n_elems())};
  std::vector<std::string> iter_rows;
  iteration_csv_rows(last_rep, fp, iter_rows);
  const std::string iter_path = out_path(cfg, "iterations.csv");
  write_csv(iter_path, "i,res_v,res_p,model,formalism,weight,theta,h,nele", iter_rows);
  art.files.push_back(iter_path);

  if (cfg.vtk) {
    const std::string vtk_path = out_path(cfg, "five_spot.vtk");
    write_vtk(vtk_path, last_mesh, last_sol);
    art.files.push_back(vtk_path);
  }
  art.message = "five_spot: " + std::to_string(cases.size()) + " case(s)";
}

inline void run_patch3d(const RunConfig& cfg, RunArtifacts& art) {
  if (cfg.element != "B8") throw ConfigError("patch3d requires element = B8");
  Problem prob = patch3d_problem(cfg.nx, parse_variant(cfg.variant),
                                 parse_formulation(cfg.formulation), cfg.theta, cfg.weight);
  prob.model = model_from_config(cfg);
  prob.tol = cfg.tol;
  prob.max_iterations = cfg.max_iterations;
  auto [sol, rep] = nonlinear_solve(prob);
  if (!rep.converged) art.status = RunStatus::NonConverged;

  double v_err = 0.0;
  for (int n = 0; n < prob.mesh.n_nodes(); ++n) {
    v_err = std::max(v_err, std::abs(sol.v(n, 0) - 1.0));
    v_err = std::max(v_err, std::abs(sol.v(n, 1)));
    v_err = std::max(v_err, std::abs(sol.v(n, 2)));
  }
  art.message = "patch3d: max nodal velocity deviation " + detail::csv_num(v_err);
  if (prob.model.variant != DragVariant::BarusForchheimer) {
    double p_err = 0.0;
    for (int n = 0; n < prob.mesh.n_nodes(); ++n)
      p_err = std::max(p_err, std::abs(sol.p[n] - patch3d_exact_pressure(
                                                      prob.model, prob.mesh.node_coords[n].x())));
    art.message += ", max nodal pressure deviation " + detail::csv_num(p_err);
  }

  Fingerprint fp{cfg.variant, cfg.formulation, cfg.weight, cfg.theta,
                 csv_num(1.0 / cfg.nx), std::to_string(prob.mesh.n_elems())};
  std::vector<std::string> iter_rows;
  iteration_csv_rows(rep, fp, iter_rows);
  const std::string iter_path = out_path(cfg, "iterations.csv");
  write_csv(iter_path, "i,res_v,res_p,model,formalism,weight,theta,h,nele", iter_rows);
  art.files.push_back(iter_path);

  if (cfg.vtk) {
    const std::string vtk_path = out_path(cfg, "patch3d.vtk");
    write_vtk(vtk_path, prob.mesh, sol);
    art.files.push_back(vtk_path);
  }
}

inline void run_reservoir_family(const RunConfig& cfg, RunArtifacts& art) {
  const ElemType et = parse_elem_type(cfg.element);
  if (et != ElemType::Q4 && et != ElemType::Q9)
    throw ConfigError("reservoir-family problems support Q4 or Q9 elements");
  const int order = et == ElemType::Q9 ? 2 : 1;
  const DragModel model = model_from_config(cfg);
  const Formulation form = parse_formulation(cfg.formulation);

  ReservoirSetup setup;
  double h = 0.0;
  if (cfg.type == "staggered") {
    StaggeredGeometry geo;
    geo.n = cfg.nx;
    geo.order = order;
    if (!cfg.holes.empty()) {
      geo.holes.clear();
      for (const auto& b : cfg.holes)
        geo.holes.push_back({{b[0], b[2], 0.0}, {b[1], b[3], 0.0}});
    }
    setup = staggered_problem(geo, model, cfg.p_enh, form, cfg.weight, cfg.theta);
    h = 1.0 / geo.n;
  } else {
    ReservoirGeometry geo;
    geo.domain = {{cfg.domain[0], cfg.domain[2], 0.0}, {cfg.domain[1], cfg.domain[3], 0.0}};
    geo.nx = cfg.nx;
    geo.ny = cfg.ny > 0 ? cfg.ny : cfg.nx;
    geo.order = order;
    if (!cfg.injection.empty()) geo.injection = cfg.injection;
    if (!cfg.production.empty()) geo.production = cfg.production;
    h = std::max((geo.domain.hi.x() - geo.domain.lo.x()) / geo.nx,
                 (geo.domain.hi.y() - geo.domain.lo.y()) / geo.ny);
    if (cfg.type == "layered") {
      std::vector<std::array<double, 3>> layers = cfg.layers;
      if (layers.empty())
        layers = {{0.0, 0.2, 1.0}, {0.2, 0.4, 0.1}, {0.4, 0.6, 1.0},
                  {0.6, 0.8, 0.1}, {0.8, 1.0, 1.0}};
      setup = layered_problem(geo, layers, model, cfg.p_enh, form, cfg.weight, cfg.theta);
    } else {
      setup = reservoir_problem(geo, model, cfg.p_enh, form, cfg.weight, cfg.theta);
    }
  }

  Problem& prob = setup.problem;
  prob.tol = cfg.tol;
  prob.max_iterations = cfg.max_iterations;
  auto [sol, rep] = nonlinear_solve(prob);
  if (!rep.converged) art.status = RunStatus::NonConverged;

  const double flux = boundary_flux(prob.mesh, sol, setup.production_tags);
  MassBalanceReport mb = local_mass_balance(prob.mesh, sol, setup.production_tags);
  const double phi = total_dissipation(prob.mesh, sol, prob.model);

  Fingerprint fp{cfg.variant, cfg.formulation, cfg.weight, cfg.theta, csv_num(h),
                 std::to_string(prob.mesh.n_elems())};
  const std::string flux_path = out_path(cfg, "flux.csv");
  write_csv(flux_path, "problem,model,formalism,p_enh,flux,weight,theta,h,nele",
            {cfg.type + "," + cfg.variant + "," + cfg.formulation + "," + csv_num(cfg.p_enh) +
             "," + csv_num(flux) + "," + fp.cells_wthn()});
  art.files.push_back(flux_path);

  std::vector<std::string> iter_rows;
  iteration_csv_rows(rep, fp, iter_rows);
  const std::string iter_path = out_path(cfg, "iterations.csv");
  write_csv(iter_path, "i,res_v,res_p,model,formalism,weight,theta,h,nele", iter_rows);
  art.files.push_back(iter_path);

  if (cfg.vtk) {
    VecX perm(prob.mesh.n_elems());
    for (int e = 0; e < prob.mesh.n_elems(); ++e)
      perm[e] = prob.model.permeability.lookup(prob.mesh.elem_centroid(e));
    const std::string vtk_path = out_path(cfg, cfg.type + ".vtk");
    write_vtk(vtk_path, prob.mesh, sol,
              {{"mass_balance_ratio", mb.ratio}, {"permeability", perm}});
    art.files.push_back(vtk_path);
  }
  art.message = cfg.type + ": production flux " + csv_num(flux) + ", max balance ratio " +
                csv_num(mb.max_ratio) + ", dissipation " + csv_num(phi) +
                (rep.converged ? "" : " [NOT CONVERGED]");
}

}  // namespace detail

inline RunArtifacts run(const RunConfig& cfg) {
  RunArtifacts art;
  try {
    std::filesystem::create_directories(cfg.out_dir);
    if (cfg.type == "mms") detail::run_mms(cfg, art);
    else if (cfg.type == "five_spot") detail::run_five_spot(cfg, art);
    else if (cfg.type == "patch3d") detail::run_patch3d(cfg, art);
    else if (cfg.type == "reservoir" || cfg.type == "layered" || cfg.type == "staggered")
      detail::run_reservoir_family(cfg, art);
    else throw ConfigError("unknown problem type '" + cfg.type + "'");
  } catch (const ConfigError& e) {
    art.status = RunStatus::InvalidConfig;
    art.message = e.what();
  } catch (const InvalidArgumentError& e) {
    art.status = RunStatus::InvalidConfig;
    art.message = e.what();
  }
  return art;
}

}  // namespace dflow
