// drag.hpp - constitutive layer: the drag coefficient alpha(v, p, x) and its
// derivatives for the four model variants, plus the non-dimensionalization map.
//
//   Darcy             alpha = mu0 / k(x)
//   Barus             alpha = (mu0 / k(x)) * exp(beta_b * p)
//   Forchheimer       alpha = mu0 / k(x) + beta_f * |v|
//   BarusForchheimer  alpha = (mu0 / k(x)) * exp(beta_b * p) + beta_f * |v|
//
// alpha itself uses the exact |v|; the velocity derivative is singular at
// v = 0, so derivatives use the regularized norm |v|_eps = sqrt(v.v + eps^2)
// with eps = v_reg. That keeps residuals exact and tangents bounded.

#pragma once

#include <cmath>

#include "dflow/common.hpp"
#include "dflow/mesh.hpp"

namespace dflow {

enum class DragVariant { Darcy, Barus, Forchheimer, BarusForchheimer };

inline bool has_barus(DragVariant v) {
  return v == DragVariant::Barus || v == DragVariant::BarusForchheimer;
}
inline bool has_forchheimer(DragVariant v) {
  return v == DragVariant::Forchheimer || v == DragVariant::BarusForchheimer;
}

struct DragModel {
  DragVariant variant = DragVariant::Darcy;
  double mu0 = 1.0;     // dimensionless base viscosity
  double beta_b = 0.0;  // Barus coefficient
  double beta_f = 0.0;  // Forchheimer coefficient
  RegionField permeability = RegionField::uniform(1.0);
  double v_reg = 1e-10;  // regularization inside derivatives only

  double alpha(const VecX& v, double p, const Vec3& x) const {
    double a = mu0 / permeability.lookup(x);
    if (has_barus(variant)) a *= std::exp(beta_b * p);
    if (has_forchheimer(variant)) a += beta_f * v.norm();
    return a;
  }

  double dalpha_dp(const VecX& v, double p, const Vec3& x) const {
    (void)v;
    if (!has_barus(variant)) return 0.0;
    return mu0 * beta_b / permeability.lookup(x) * std::exp(beta_b * p);
  }

  VecX dalpha_dv(const VecX& v, double p, const Vec3& x) const {
    (void)p;
    (void)x;
    if (!has_forchheimer(variant)) return VecX::Zero(v.size());
    const double norm_eps = std::sqrt(v.squaredNorm() + v_reg * v_reg);
    return (beta_f / norm_eps) * v;  // exactly zero at v = 0
  }

  double dissipation_density(const VecX& v, double p, const Vec3& x) const {
    return alpha(v, p, x) * v.squaredNorm();
  }
};

// Physical inputs and the barred (dimensionless) quantities derived from them.
struct PhysicalScales {
  double L = 1.0;      // reference length
  double g = 1.0;      // gravitational acceleration
  double p_atm = 1.0;  // atmospheric pressure
  double rho = 1.0;    // fluid density
  double mu0_phys = 1.0;
  double k_phys = 1.0;
  double beta_b_phys = 0.0;
  double beta_f_phys = 0.0;
};

struct NondimensionalSet {
  double mu0 = 1.0;
  double k = 1.0;
  double beta_b = 0.0;
  double beta_f = 0.0;
  double rho = 1.0;
};

inline NondimensionalSet nondimensionalize(const PhysicalScales& s) {
  if (!(s.L > 0) || !(s.g > 0) || !(s.p_atm > 0) || !(s.rho > 0) || !(s.mu0_phys > 0) ||
      !(s.k_phys > 0))
    throw InvalidArgumentError("physical scales must be positive");
  NondimensionalSet n;
  n.mu0 = s.mu0_phys * std::sqrt(s.g / s.L) / s.p_atm;
  n.k = s.k_phys / (s.L * s.L);
  n.beta_b = s.beta_b_phys * s.p_atm;
  n.beta_f = s.beta_f_phys * s.g * s.L * s.L / s.p_atm;
  n.rho = s.rho * s.g * s.L / s.p_atm;
  return n;
}

// Inverse of nondimensionalize given the same (L, g, p_atm) reference scales.
inline PhysicalScales dimensionalize(const NondimensionalSet& n, double L, double g,
                                     double p_atm) {
  if (!(L > 0) || !(g > 0) || !(p_atm > 0))
    throw InvalidArgumentError("reference scales must be positive");
  PhysicalScales s;
  s.L = L;
  s.g = g;
  s.p_atm = p_atm;
  s.mu0_phys = n.mu0 * p_atm / std::sqrt(g / L);
  s.k_phys = n.k * L * L;
  s.beta_b_phys = n.beta_b / p_atm;
  s.beta_f_phys = n.beta_f * p_atm / (g * L * L);
  s.rho = n.rho * p_atm / (g * L);
  return s;
}

}  // namespace dflow
