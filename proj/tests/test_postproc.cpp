// Error norms, convergence slopes, mass balance, fluxes, dissipation, and the
// reciprocity identity.

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "dflow/postproc.hpp"

using namespace dflow;

namespace {

VecX vec2(double x, double y) {
  VecX v(2);
  v << x, y;
  return v;
}

DragModel darcy_model(double alpha) {
  DragModel m;
  m.variant = DragVariant::Darcy;
  m.mu0 = alpha;
  return m;
}

// Nodal injection of analytic fields into a solution container.
MixedSolution inject(const Mesh& mesh, const std::function<VecX(const Vec3&)>& v,
                     const std::function<double(const Vec3&)>& p) {
  MixedSolution sol;
  sol.v.resize(mesh.n_nodes(), mesh.dim);
  sol.p.resize(mesh.n_nodes());
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    sol.v.row(n) = v(mesh.node_coords[n]).transpose();
    sol.p[n] = p(mesh.node_coords[n]);
  }
  sol.mesh = &mesh;
  return sol;
}

// Linear exact fields, representable in every element type.
ExactFields linear_fields() {
  ExactFields ex;
  ex.v = [](const Vec3& x) { return vec2(2 * x.x() + x.y(), x.x() - 2 * x.y()); };
  ex.grad_v = [](const Vec3&) {
    MatX g(2, 2);
    g << 2, 1, 1, -2;
    return g;
  };
  ex.p = [](const Vec3& x) { return 3.0 - x.x() + 2.0 * x.y(); };
  ex.grad_p = [](const Vec3&) { return vec2(-1, 2); };
  return ex;
}

}  // namespace

TEST_CASE("error norms vanish for nodally exact linear fields") {
  ExactFields ex = linear_fields();
  Mesh meshes[] = {generate_quad(3, 2, {{0, 0, 0}, {2, 1, 0}}, 1),
                   generate_quad(2, 2, {{0, 0, 0}, {2, 1, 0}}, 2),
                   generate_tri(3, 3, {{0, 0, 0}, {2, 1, 0}})};
  for (const Mesh& m : meshes) {
    MixedSolution sol = inject(m, ex.v, ex.p);
    ErrorReport rep = error_norms(m, sol, ex, 0.5);
    CHECK(rep.v_l2 < 1e-12);
    CHECK(rep.v_h1 < 1e-12);
    CHECK(rep.p_l2 < 1e-12);
    CHECK(rep.p_h1 < 1e-12);
    CHECK(rep.h == 0.5);
    CHECK(rep.n_dofs == m.n_nodes() * 3);
  }
}

TEST_CASE("a constant pressure offset moves only the L2 pressure error") {
  ExactFields ex = linear_fields();
  Mesh m = generate_quad(4, 2, {{0, 0, 0}, {2, 1, 0}}, 1);  // area 2
  MixedSolution sol = inject(m, ex.v, [&](const Vec3& x) { return ex.p(x) + 0.25; });
  ErrorReport rep = error_norms(m, sol, ex);
  CHECK(rep.p_l2 == Catch::Approx(0.25 * std::sqrt(2.0)).epsilon(1e-12));
  CHECK(rep.p_h1 < 1e-12);
  CHECK(rep.v_l2 < 1e-12);
}

TEST_CASE("solution size mismatches are rejected") {
  Mesh m = generate_quad(2, 2, {{0, 0, 0}, {1, 1, 0}}, 1);
  MixedSolution sol;
  sol.v = MatX::Zero(3, 2);
  sol.p = VecX::Zero(m.n_nodes());
  CHECK_THROWS_AS(error_norms(m, sol, linear_fields()), InvalidArgumentError);
}

TEST_CASE("convergence slope recovers synthetic rates") {
  std::vector<std::pair<double, double>> quadratic, linear;
  for (double h : {0.25, 0.125, 0.0625, 0.03125}) {
    quadratic.push_back({h, 3.0 * h * h});
    linear.push_back({h, 0.7 * h});
  }
  CHECK(convergence_slope(quadratic) == Catch::Approx(2.0).margin(1e-12));
  CHECK(convergence_slope(linear) == Catch::Approx(1.0).margin(1e-12));

  CHECK_THROWS_AS(convergence_slope({{0.5, 1.0}}), InvalidArgumentError);
  CHECK_THROWS_AS(convergence_slope({{0.5, 1.0}, {0.5, 2.0}}), InvalidArgumentError);
  CHECK_THROWS_AS(convergence_slope({{0.5, 1.0}, {-0.25, 2.0}}), InvalidArgumentError);
  CHECK_THROWS_AS(convergence_slope({{0.5, 0.0}, {0.25, 1.0}}), InvalidArgumentError);
}

TEST_CASE("facet and volume divergence integrals agree") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Mesh meshes[] = {generate_quad(3, 3, {{0, 0, 0}, {1, 1, 0}}, 1),
                   generate_quad(2, 2, {{0, 0, 0}, {1, 1, 0}}, 2),
                   generate_tri(3, 3, {{0, 0, 0}, {1, 1, 0}}),
                   generate_hex(2, 2, 2, {{0, 0, 0}, {1, 1, 1}})};
  for (const Mesh& m : meshes) {
    MixedSolution sol;
    sol.v.resize(m.n_nodes(), m.dim);
    for (int n = 0; n < m.n_nodes(); ++n)
      for (int c = 0; c < m.dim; ++c) sol.v(n, c) = dist(rng);
    sol.p = VecX::Zero(m.n_nodes());
    sol.mesh = &m;
    VecX facet = element_boundary_net_flux(m, sol);
    VecX volume = element_divergence_integral(m, sol);
    CHECK((facet - volume).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("element flux of a linearly divergent field") {
  Mesh m = generate_quad(2, 2, {{0, 0, 0}, {1, 1, 0}}, 1);
  MixedSolution sol = inject(m, [](const Vec3& x) { return vec2(x.x(), x.y()); },
                             [](const Vec3&) { return 0.0; });
  VecX flux = element_boundary_net_flux(m, sol);
  for (int e = 0; e < m.n_elems(); ++e)
    CHECK(flux[e] == Catch::Approx(2.0 * 0.25).margin(1e-13));  // div v = 2, area 1/4
}

TEST_CASE("mass balance of a uniform flow") {
  Mesh m = generate_quad(3, 3, {{0, 0, 0}, {1, 1, 0}}, 1);
  MixedSolution sol = inject(m, [](const Vec3&) { return vec2(1, 0); },
                             [](const Vec3&) { return 0.0; });
  MassBalanceReport rep = local_mass_balance(m, sol, {"right"});
  CHECK(rep.Q == Catch::Approx(1.0).margin(1e-13));
  CHECK_FALSE(rep.zero_flux);
  CHECK(rep.e_K.maxCoeff() < 1e-13);
  CHECK(rep.max_ratio < 1e-12);
  CHECK(rep.mean_ratio < 1e-12);

  MixedSolution rest = inject(m, [](const Vec3&) { return vec2(0, 0); },
                              [](const Vec3&) { return 0.0; });
  MassBalanceReport rep0 = local_mass_balance(m, rest, {"right"});
  CHECK(rep0.zero_flux);
  CHECK(rep0.max_ratio < 1e-13);  // falls back to the raw imbalance
}

TEST_CASE("boundary flux through tagged sides") {
  Mesh m = generate_quad(3, 3, {{0, 0, 0}, {1, 1, 0}}, 1);
  MixedSolution sol = inject(m, [](const Vec3&) { return vec2(1, 0); },
                             [](const Vec3&) { return 0.0; });
  CHECK(boundary_flux(m, sol, {"right"}) == Catch::Approx(1.0).margin(1e-13));
  CHECK(boundary_flux(m, sol, {"left"}) == Catch::Approx(-1.0).margin(1e-13));
  CHECK(boundary_flux(m, sol, {"top", "bottom"}) == Catch::Approx(0.0).margin(1e-13));
  CHECK(boundary_flux(m, sol, {"left", "right", "top", "bottom"}) ==
        Catch::Approx(0.0).margin(1e-12));

  Mesh b = generate_hex(1, 1, 1, {{0, 0, 0}, {1, 1, 1}});
  MixedSolution s3;
  s3.v = MatX::Zero(b.n_nodes(), 3);
  s3.v.col(0).setConstant(1.0);
  s3.p = VecX::Zero(b.n_nodes());
  s3.mesh = &b;
  CHECK(boundary_flux(b, s3, {"right"}) == Catch::Approx(1.0).margin(1e-13));
}

TEST_CASE("total dissipation of simple states") {
  Mesh m = generate_quad(2, 2, {{0, 0, 0}, {1, 1, 0}}, 1);
  MixedSolution zero = inject(m, [](const Vec3&) { return vec2(0, 0); },
                              [](const Vec3&) { return 0.0; });
  CHECK(total_dissipation(m, zero, darcy_model(1.0)) == 0.0);

  MixedSolution uni = inject(m, [](const Vec3&) { return vec2(1, 0); },
                             [](const Vec3&) { return 0.0; });
  CHECK(total_dissipation(m, uni, darcy_model(1.0)) == Catch::Approx(1.0).margin(1e-13));
  CHECK(total_dissipation(m, uni, darcy_model(2.0)) == Catch::Approx(2.0).margin(1e-13));
}

TEST_CASE("reciprocity holds for shared constant drag") {
  Mesh m = generate_quad(6, 6, {{0, 0, 0}, {1, 1, 0}}, 1);
  const double alpha = 1.0;

  // Two divergence-free states with body forces chosen so each solves
  // alpha v + grad p = rho b.
  auto v1 = [](const Vec3& x) { return vec2(x.y(), 0.0); };
  auto p1 = [](const Vec3& x) { return x.x() + 2.0 * x.y(); };
  auto v2 = [](const Vec3& x) { return vec2(x.x(), -x.y()); };
  auto p2 = [](const Vec3& x) { return x.x() * x.y(); };

  ReciprocityData d1{[&](const Vec3& x) -> VecX { return alpha * v1(x) + vec2(1, 2); }, 1.0};
  ReciprocityData d2{[&](const Vec3& x) -> VecX { return alpha * v2(x) + vec2(x.y(), x.x()); },
                     1.0};
  MixedSolution s1 = inject(m, v1, p1);
  MixedSolution s2 = inject(m, v2, p2);

  ReciprocityTerms t = reciprocity_terms(m, s1, d1, s2, d2);
  CHECK(t.residual() <= 1e-12 * t.scale());
  CHECK(t.scale() > 0.1);  // the identity is exercised with nonzero terms

  // Identical data on both slots is trivially reciprocal.
  ReciprocityTerms same = reciprocity_terms(m, s1, d1, s1, d1);
  CHECK(same.residual() <= 1e-14 * same.scale());
}

TEST_CASE("dissipation comparison accepts the solution itself") {
  Mesh m = generate_quad(4, 4, {{0, 0, 0}, {1, 1, 0}}, 1);
  MixedSolution sol = inject(m, [](const Vec3&) { return vec2(1, 0); },
                             [](const Vec3&) { return 0.0; });
  std::map<std::string, std::function<double(const Vec3&)>> vn = {
      {"left", [](const Vec3&) { return -1.0; }},
      {"right", [](const Vec3&) { return 1.0; }},
      {"top", [](const Vec3&) { return 0.0; }},
      {"bottom", [](const Vec3&) { return 0.0; }}};
  DissipationPair pair = dissipation_comparison(
      m, sol, [](const Vec3&) { return vec2(1, 0); }, darcy_model(1.0), vn);
  CHECK(pair.solution == Catch::Approx(1.0).margin(1e-12));
  CHECK(pair.candidate == Catch::Approx(pair.solution).margin(1e-12));
}

TEST_CASE("admissible perturbations only increase the dissipation") {
  Mesh m = generate_quad(8, 8, {{0, 0, 0}, {1, 1, 0}}, 1);
  MixedSolution sol = inject(m, [](const Vec3&) { return vec2(1, 0); },
                             [](const Vec3&) { return 0.0; });
  std::map<std::string, std::function<double(const Vec3&)>> vn = {
      {"left", [](const Vec3&) { return -1.0; }},
      {"right", [](const Vec3&) { return 1.0; }},
      {"top", [](const Vec3&) { return 0.0; }},
      {"bottom", [](const Vec3&) { return 0.0; }}};
  // Divergence-free bubble with zero boundary normal velocity, from the
  // stream function sin(pi x) sin(pi y).
  const double pi = std::acos(-1.0);
  auto candidate = [pi](const Vec3& x) {
    return vec2(1.0 + pi * std::sin(pi * x.x()) * std::cos(pi * x.y()),
                -pi * std::cos(pi * x.x()) * std::sin(pi * x.y()));
  };
  DissipationPair pair = dissipation_comparison(m, sol, candidate, darcy_model(1.0), vn);
  CHECK(pair.candidate >= pair.solution - 1e-10);
  CHECK(pair.candidate == Catch::Approx(1.0 + pi * pi / 2.0).epsilon(1e-6));
}

TEST_CASE("inadmissible candidates are rejected") {
  Mesh m = generate_quad(4, 4, {{0, 0, 0}, {1, 1, 0}}, 1);
  MixedSolution sol = inject(m, [](const Vec3&) { return vec2(1, 0); },
                             [](const Vec3&) { return 0.0; });
  std::map<std::string, std::function<double(const Vec3&)>> vn = {
      {"left", [](const Vec3&) { return -1.0; }},
      {"right", [](const Vec3&) { return 1.0; }},
      {"top", [](const Vec3&) { return 0.0; }},
      {"bottom", [](const Vec3&) { return 0.0; }}};

  // Not divergence-free.
  CHECK_THROWS_AS(dissipation_comparison(
                      m, sol, [](const Vec3& x) { return vec2(x.x(), x.y()); },
                      darcy_model(1.0), vn),
                  InvalidArgumentError);
  // Divergence-free but violating the inflow data.
  CHECK_THROWS_AS(dissipation_comparison(
                      m, sol, [](const Vec3&) { return vec2(0, 1); }, darcy_model(1.0), vn),
                  InvalidArgumentError);
}
