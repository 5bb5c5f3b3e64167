// Benchmark problem factories, run configuration round-trips, VTK output
// structure, and the end-to-end runner.

#include <catch2/catch_amalgamated.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "dflow/config.hpp"
#include "dflow/problems.hpp"
#include "dflow/runner.hpp"
#include "dflow/vtk.hpp"

using namespace dflow;
using Catch::Matchers::ContainsSubstring;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

int count_tag(const Mesh& m, const std::string& tag) {
  int n = 0;
  for (const auto& f : m.boundary_facets) n += f.tag == tag;
  return n;
}

}  // namespace

TEST_CASE("manufactured fields: spot values and internal consistency") {
  ExactFields ex = mms_exact_fields();
  CHECK(ex.v(Vec3(1, 1, 0))[0] == Catch::Approx(4.0));
  CHECK(ex.v(Vec3(1, 1, 0))[1] == Catch::Approx(3.0));
  CHECK(ex.p(Vec3(0, 0, 0)) == Catch::Approx(10.0));

  // Divergence-free by construction, gradients consistent with the values.
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> dist(0.05, 0.95);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec3 x(dist(rng), dist(rng), 0);
    MatX gv = ex.grad_v(x);
    CHECK(std::abs(gv(0, 0) + gv(1, 1)) < 1e-14);
    const double eps = 1e-6;
    for (int d = 0; d < 2; ++d) {
      Vec3 xp = x, xm = x;
      xp[d] += eps;
      xm[d] -= eps;
      VecX fd_v = (ex.v(xp) - ex.v(xm)) / (2 * eps);
      for (int c = 0; c < 2; ++c) CHECK(gv(c, d) == Catch::Approx(fd_v[c]).margin(1e-8));
      const double fd_p = (ex.p(xp) - ex.p(xm)) / (2 * eps);
      CHECK(ex.grad_p(x)[d] == Catch::Approx(fd_p).margin(1e-8));
    }
  }
}

TEST_CASE("manufactured body force closes the momentum balance") {
  // Darcy with alpha = 1: b = v + grad p; at (1/2,1/2) that is (0.5, 1.25).
  DragModel darcy = make_model(DragVariant::Darcy);
  BodyForce b = mms_body_force(darcy, 1.0);
  VecX val = b(Vec3(0.5, 0.5, 0));
  CHECK(val[0] == Catch::Approx(0.5).margin(1e-14));
  CHECK(val[1] == Catch::Approx(1.25).margin(1e-14));

  // For every variant, alpha v + grad p - rho b vanishes pointwise.
  ExactFields ex = mms_exact_fields();
  const double rho = 1.3;
  for (DragVariant var : {DragVariant::Darcy, DragVariant::Barus, DragVariant::Forchheimer,
                          DragVariant::BarusForchheimer}) {
    DragModel m = make_model(var);
    BodyForce bf = mms_body_force(m, rho);
    const Vec3 x(0.37, 0.81, 0);
    VecX res = m.alpha(ex.v(x), ex.p(x), x) * ex.v(x) + ex.grad_p(x) - rho * bf(x);
    CHECK(res.cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("make_model zeroes coefficients outside the variant") {
  DragModel darcy = make_model(DragVariant::Darcy, 1.0, 0.9, 0.9);
  CHECK(darcy.beta_b == 0.0);
  CHECK(darcy.beta_f == 0.0);
  DragModel barus = make_model(DragVariant::Barus, 1.0, 0.9, 0.9);
  CHECK(barus.beta_b == 0.9);
  CHECK(barus.beta_f == 0.0);
  DragModel mbf = make_model(DragVariant::BarusForchheimer, 1.0, 0.9, 0.8);
  CHECK(mbf.beta_b == 0.9);
  CHECK(mbf.beta_f == 0.8);
}

TEST_CASE("manufactured-solution problem assembles and converges") {
  for (ElemType et : {ElemType::Q4, ElemType::T3, ElemType::Q9}) {
    MmsSetup setup = mms_problem(4, et, DragVariant::BarusForchheimer, Formulation::LS, 1, 1.0);
    CHECK(setup.h == Catch::Approx(0.25));
    auto [sol, rep] = nonlinear_solve(setup.problem);
    CHECK(rep.converged);
    ErrorReport err = error_norms(setup.problem.mesh, sol, setup.exact, setup.h);
    CHECK(err.v_l2 < 0.5);  // coarse-mesh sanity; rates are checked elsewhere
    CHECK(err.p_l2 < 0.5);
  }
  CHECK_THROWS_AS(mms_problem(4, ElemType::B8, DragVariant::Darcy, Formulation::LS),
                  InvalidArgumentError);
  CHECK_THROWS_AS(mms_problem(0, ElemType::Q4, DragVariant::Darcy, Formulation::LS),
                  InvalidArgumentError);
}

TEST_CASE("five-spot wells pressurize the injection corner") {
  DragModel darcy = make_model(DragVariant::Darcy);
  for (Formulation f : {Formulation::LS, Formulation::VMS}) {
    Problem prob = five_spot_problem(8, ElemType::Q4, darcy, f);
    REQUIRE(prob.bcs.nodal_velocity.size() == 4u);
    auto [sol, rep] = nonlinear_solve(prob);
    REQUIRE(rep.converged);
    const int inj = five_spot_injection_node(prob.mesh);
    const int prod = prob.mesh.find_node({1, 1, 0}, 1e-9);
    CHECK(sol.p[prod] == Catch::Approx(1.0).margin(1e-10));
    CHECK(sol.p[inj] > 1.0);
  }
}

TEST_CASE("3D patch flow recovers closed-form pressure profiles") {
  // Constant velocity is exactly representable, and for constant or linear
  // pressure drops the discrete solution is exact.
  for (DragVariant var : {DragVariant::Darcy, DragVariant::Forchheimer}) {
    for (Formulation f : {Formulation::LS, Formulation::VMS}) {
      Problem prob = patch3d_problem(2, var, f);
      auto [sol, rep] = nonlinear_solve(prob);
      REQUIRE(rep.converged);
      for (int n = 0; n < prob.mesh.n_nodes(); ++n) {
        CHECK(sol.v(n, 0) == Catch::Approx(1.0).margin(1e-8));
        CHECK(sol.v(n, 1) == Catch::Approx(0.0).margin(1e-8));
        CHECK(sol.v(n, 2) == Catch::Approx(0.0).margin(1e-8));
        const double want = patch3d_exact_pressure(prob.model, prob.mesh.node_coords[n].x());
        CHECK(sol.p[n] == Catch::Approx(want).margin(1e-8));
      }
    }
  }
  DragModel mbf = make_model(DragVariant::BarusForchheimer);
  CHECK_THROWS_AS(patch3d_exact_pressure(mbf, 0.5), InvalidArgumentError);
}

TEST_CASE("reservoir wells are carved out of the top boundary") {
  ReservoirGeometry geo;
  geo.nx = 20;
  geo.ny = 10;
  geo.order = 1;
  ReservoirSetup setup = reservoir_problem(geo, make_model(DragVariant::Darcy), 100.0,
                                           Formulation::VMS);
  const Mesh& m = setup.problem.mesh;
  CHECK(count_tag(m, "injection") == 4);   // [0,0.2] and [1.8,2] at facet width 0.1
  CHECK(count_tag(m, "production") == 2);  // [0.9,1.1]
  CHECK(count_tag(m, "top") == 14);
  CHECK(setup.problem.bcs.pressure_facets.at("injection") == 100.0);
  CHECK(setup.problem.bcs.pressure_facets.at("production") == 1.0);
  CHECK(setup.problem.bcs.facet_vn.count("top") == 1u);
  CHECK(setup.injection_tags == std::vector<std::string>{"injection"});

  ReservoirGeometry bad = geo;
  bad.injection = {{-0.5, 0.2}};
  CHECK_THROWS_AS(reservoir_problem(bad, make_model(DragVariant::Darcy), 100.0, Formulation::VMS),
                  InvalidArgumentError);
  ReservoirGeometry tiny = geo;
  tiny.injection = {{0.001, 0.002}};  // selects no facet at this resolution
  CHECK_THROWS_AS(reservoir_problem(tiny, make_model(DragVariant::Darcy), 100.0,
                                    Formulation::VMS),
                  InvalidArgumentError);
}

TEST_CASE("reservoir solve produces outflow at the production well") {
  ReservoirGeometry geo;
  geo.nx = 10;
  geo.ny = 5;
  geo.order = 1;
  ReservoirSetup setup =
      reservoir_problem(geo, make_model(DragVariant::Darcy), 50.0, Formulation::VMS);
  auto [sol, rep] = nonlinear_solve(setup.problem);
  REQUIRE(rep.converged);
  const double out = boundary_flux(setup.problem.mesh, sol, setup.production_tags);
  const double in = boundary_flux(setup.problem.mesh, sol, setup.injection_tags);
  CHECK(out > 0.0);
  CHECK(in < 0.0);
  CHECK(std::abs(out + in) < 1e-7 * std::max(1.0, out));  // sealed otherwise
  MassBalanceReport mb = local_mass_balance(setup.problem.mesh, sol, setup.production_tags);
  CHECK(mb.max_ratio < 0.5);
}

TEST_CASE("layered permeability stacks must tile the domain") {
  ReservoirGeometry geo;
  geo.nx = 10;
  geo.ny = 5;
  geo.order = 1;
  ReservoirSetup setup = layered_problem(geo, {{0.0, 0.5, 1.0}, {0.5, 1.0, 0.1}},
                                         make_model(DragVariant::Darcy), 100.0, Formulation::LS);
  const RegionField& perm = setup.problem.model.permeability;
  CHECK(perm.lookup(Vec3(1.0, 0.25, 0)) == 1.0);
  CHECK(perm.lookup(Vec3(1.0, 0.75, 0)) == 0.1);

  CHECK_THROWS_AS(layered_problem(geo, {{0.0, 0.4, 1.0}, {0.5, 1.0, 0.1}},
                                  make_model(DragVariant::Darcy), 100.0, Formulation::LS),
                  InvalidArgumentError);
  CHECK_THROWS_AS(layered_problem(geo, {}, make_model(DragVariant::Darcy), 100.0,
                                  Formulation::LS),
                  InvalidArgumentError);
}

TEST_CASE("staggered barriers carve the documented layout") {
  StaggeredGeometry geo;
  ReservoirSetup setup = staggered_problem(geo, make_model(DragVariant::Darcy), 10.0,
                                           Formulation::LS);
  const Mesh& m = setup.problem.mesh;
  CHECK(m.n_elems() == 1696);
  CHECK(m.n_nodes() == 1849);
  CHECK(count_tag(m, "impervious") == 139);
  CHECK(setup.problem.bcs.facet_vn.count("impervious") == 1u);
  CHECK(setup.problem.bcs.pressure_facets.at("bottom") == 10.0);
  CHECK(setup.problem.bcs.pressure_facets.at("top") == 1.0);
}

TEST_CASE("config serialization round-trips") {
  RunConfig cfg;
  cfg.type = "layered";
  cfg.element = "Q9";
  cfg.nx = 12;
  cfg.ny = 7;
  cfg.h_list = {0.25, 0.125, 1.0 / 3.0};
  cfg.variant = "barus_forchheimer";
  cfg.mu0 = 1.25;
  cfg.beta_b = 0.005;
  cfg.beta_f = 0.01;
  cfg.k = 0.3;
  cfg.rho = 0.9;
  cfg.layers = {{0.0, 0.5, 1.0}, {0.5, 1.0, 0.1}};
  cfg.formulation = "vms";
  cfg.weight = 2;
  cfg.theta = 0.5;
  cfg.tol = 1e-9;
  cfg.max_iterations = 33;
  cfg.domain = {0.0, 3.0, 0.0, 1.5};
  cfg.holes = {{0.1, 0.2, 0.3, 0.4}};
  cfg.p_enh = 1234.5;
  cfg.alpha_list = {1, 5, 1000};
  cfg.injection = {{0.0, 0.2}, {1.8, 2.0}};
  cfg.production = {{0.9, 1.1}};
  cfg.out_dir = "somewhere/else";
  cfg.vtk = false;

  RunConfig back = parse_config(serialize_config(cfg));
  CHECK(back == cfg);

  RunConfig defaults;
  CHECK(parse_config(serialize_config(defaults)) == defaults);
  CHECK(parse_config("") == defaults);
}

TEST_CASE("config parsing: comments, lists, and errors") {
  RunConfig cfg = parse_config(
      "# leading comment\n"
      "[problem]\n"
      "type = mms   # trailing comment\n"
      "h_list = 0.25; 0.125\n"
      "[wells]\n"
      "injection = 0:0.2 ; 1.8:2\n");
  CHECK(cfg.type == "mms");
  CHECK(cfg.h_list == std::vector<double>{0.25, 0.125});
  REQUIRE(cfg.injection.size() == 2u);
  CHECK(cfg.injection[1][0] == 1.8);

  CHECK_THROWS_WITH(parse_config("[problem\ntype = mms\n"), ContainsSubstring("line 1"));
  CHECK_THROWS_WITH(parse_config("[problem]\nno equals sign\n"), ContainsSubstring("line 2"));
  CHECK_THROWS_AS(parse_config("[problem]\nvariant = darcy\n"), ConfigError);  // wrong section
  CHECK_THROWS_AS(parse_config("[problem]\nnx = seven\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[problem]\nnx = 2.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[output]\nvtk = maybe\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[model]\nlayers = 0:0.2\n"), ConfigError);  // needs 3 fields
}

TEST_CASE("single-key overrides resolve sections") {
  RunConfig cfg;
  set_config_key(cfg, "model.beta_b", "0.25");
  CHECK(cfg.beta_b == 0.25);
  set_config_key(cfg, "beta_f", "0.75");  // unique bare key
  CHECK(cfg.beta_f == 0.75);
  set_config_key(cfg, "p_enh", "42");
  CHECK(cfg.p_enh == 42.0);
  CHECK_THROWS_AS(set_config_key(cfg, "type", "mms"), ConfigError);  // problem vs formulation
  CHECK_THROWS_AS(set_config_key(cfg, "no_such_key", "1"), ConfigError);
}

TEST_CASE("enum bridges round-trip and reject junk") {
  for (ElemType t : {ElemType::T3, ElemType::Q4, ElemType::Q9, ElemType::B8})
    CHECK(parse_elem_type(elem_type_name(t)) == t);
  for (DragVariant v : {DragVariant::Darcy, DragVariant::Barus, DragVariant::Forchheimer,
                        DragVariant::BarusForchheimer})
    CHECK(parse_variant(variant_name(v)) == v);
  CHECK(parse_formulation("ls") == Formulation::LS);
  CHECK(parse_formulation("vms") == Formulation::VMS);
  CHECK_THROWS_AS(parse_elem_type("Q8"), ConfigError);
  CHECK_THROWS_AS(parse_variant("navier"), ConfigError);
  CHECK_THROWS_AS(parse_formulation("galerkin"), ConfigError);
}

TEST_CASE("VTK output structure, including the biquadratic permutation") {
  Mesh m = generate_quad(1, 1, {{0, 0, 0}, {1, 1, 0}}, 2);
  MixedSolution sol;
  sol.v.resize(9, 2);
  sol.p.resize(9);
  for (int n = 0; n < 9; ++n) {
    sol.v(n, 0) = n + 1.0;
    sol.v(n, 1) = 2.0 * n;
    sol.p[n] = 1.5 * n;
  }
  sol.mesh = &m;

  const std::string path = "dflow_test_q9.vtk";
  VecX cell_val(1);
  cell_val[0] = 0.125;
  write_vtk(path, m, sol, {{"permeability", cell_val}});
  const std::string text = slurp(path);
  CHECK_THAT(text, ContainsSubstring("# vtk DataFile Version 3.0"));
  CHECK_THAT(text, ContainsSubstring("ASCII\nDATASET UNSTRUCTURED_GRID\n"));
  CHECK_THAT(text, ContainsSubstring("POINTS 9 double\n"));
  CHECK_THAT(text, ContainsSubstring("CELLS 1 10\n9 0 2 8 6 1 5 7 3 4\n"));
  CHECK_THAT(text, ContainsSubstring("CELL_TYPES 1\n28\n"));
  CHECK_THAT(text, ContainsSubstring("POINT_DATA 9\nVECTORS velocity double\n1 0 0\n"));
  CHECK_THAT(text, ContainsSubstring("SCALARS pressure double\nLOOKUP_TABLE default\n0\n1.5\n"));
  CHECK_THAT(text, ContainsSubstring("CELL_DATA 1\nSCALARS permeability double\n"
                                     "LOOKUP_TABLE default\n0.125\n"));
  std::filesystem::remove(path);

  CHECK(vtk_cell_type(ElemType::T3) == 5);
  CHECK(vtk_cell_type(ElemType::Q4) == 9);
  CHECK(vtk_cell_type(ElemType::B8) == 12);

  MixedSolution wrong;
  wrong.v = MatX::Zero(3, 2);
  wrong.p = VecX::Zero(9);
  CHECK_THROWS_AS(write_vtk(path, m, wrong), InvalidArgumentError);
}

TEST_CASE("runner: five-spot run is deterministic byte for byte") {
  RunConfig cfg;
  cfg.type = "five_spot";
  cfg.element = "Q4";
  cfg.nx = 4;
  cfg.variant = "barus_forchheimer";
  cfg.out_dir = "dflow_test_out/five_spot";

  RunArtifacts first = run(cfg);
  REQUIRE(first.status == RunStatus::Ok);
  REQUIRE_FALSE(first.files.empty());
  std::map<std::string, std::string> bytes;
  for (const auto& f : first.files) bytes[f] = slurp(f);

  RunArtifacts second = run(cfg);
  REQUIRE(second.status == RunStatus::Ok);
  CHECK(second.files == first.files);
  for (const auto& f : second.files) CHECK(slurp(f) == bytes[f]);

  const std::string csv = bytes[first.files[0]];
  CHECK_THAT(csv, ContainsSubstring("alpha,formalism,weight,element,p_injection,"
                                    "model,theta,h,nele\n"));
  CHECK_THAT(csv, ContainsSubstring("barus_forchheimer"));
  std::filesystem::remove_all("dflow_test_out");
}

TEST_CASE("runner: manufactured-solution study emits slopes") {
  RunConfig cfg;
  cfg.type = "mms";
  cfg.element = "Q4";
  cfg.h_list = {0.25, 0.125};
  cfg.variant = "darcy";
  cfg.vtk = false;
  cfg.out_dir = "dflow_test_out/mms";
  RunArtifacts art = run(cfg);
  REQUIRE(art.status == RunStatus::Ok);
  const std::string csv = slurp(art.files[0]);
  CHECK_THAT(csv,
             ContainsSubstring("element,formalism,model,field,norm,slope,weight,theta,h,nele\n"));
  // Four rows (v/p x L2/H1) plus header.
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  CHECK_THAT(csv, ContainsSubstring("Q4,ls,darcy,v,L2,"));
  CHECK_THAT(csv, ContainsSubstring("0.25;0.125"));
  std::filesystem::remove_all("dflow_test_out");
}

TEST_CASE("runner: reservoir flux table") {
  RunConfig cfg;
  cfg.type = "reservoir";
  cfg.element = "Q4";
  cfg.nx = 10;
  cfg.ny = 5;
  cfg.formulation = "vms";
  cfg.p_enh = 50.0;
  cfg.vtk = true;
  cfg.out_dir = "dflow_test_out/reservoir";
  RunArtifacts art = run(cfg);
  REQUIRE(art.status == RunStatus::Ok);
  const std::string csv = slurp(art.files[0]);
  CHECK_THAT(csv, ContainsSubstring("problem,model,formalism,p_enh,flux,weight,theta,h,nele\n"));
  CHECK_THAT(csv, ContainsSubstring("reservoir,darcy,vms,50,"));
  // The VTK file carries the permeability and balance cell data.
  const std::string vtk = slurp(art.files.back());
  CHECK_THAT(vtk, ContainsSubstring("CELL_DATA 50"));
  CHECK_THAT(vtk, ContainsSubstring("SCALARS mass_balance_ratio double"));
  CHECK_THAT(vtk, ContainsSubstring("SCALARS permeability double"));
  std::filesystem::remove_all("dflow_test_out");
}

TEST_CASE("runner: bad configurations map to the invalid-config status") {
  RunConfig cfg;
  cfg.type = "no_such_problem";
  cfg.out_dir = "dflow_test_out/bad";
  CHECK(run(cfg).status == RunStatus::InvalidConfig);

  RunConfig patch;
  patch.type = "patch3d";
  patch.element = "Q4";  // needs B8
  patch.out_dir = "dflow_test_out/bad";
  CHECK(run(patch).status == RunStatus::InvalidConfig);

  RunConfig mms3d;
  mms3d.type = "mms";
  mms3d.element = "B8";
  mms3d.out_dir = "dflow_test_out/bad";
  CHECK(run(mms3d).status == RunStatus::InvalidConfig);
  std::filesystem::remove_all("dflow_test_out");
}

TEST_CASE("runner: hitting the iteration cap reports non-convergence") {
  RunConfig cfg;
  cfg.type = "five_spot";
  cfg.element = "Q4";
  cfg.nx = 4;
  cfg.variant = "barus_forchheimer";
  cfg.max_iterations = 1;
  cfg.vtk = false;
  cfg.out_dir = "dflow_test_out/nonconv";
  CHECK(run(cfg).status == RunStatus::NonConverged);
  std::filesystem::remove_all("dflow_test_out");
}
