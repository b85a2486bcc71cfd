// Microscopic inelastic collision law, restitution-coefficient models and the
// energy-dissipation functional D(f,f) = int int f f_* |v - v_*|^3.

#pragma once

#include <span>
#include <utility>
#include <vector>

#include "granular/core_types.hpp"

namespace granular {

struct RestitutionModel {
  AlphaModel kind = AlphaModel::constant;
  double alpha = 1.0;  // constant kind
  double gamma = 0.5;  // velocity_dependent kind, in (0,1)

  static RestitutionModel constant(double alpha) { return {AlphaModel::constant, alpha, 0.5}; }
  static RestitutionModel velocity_dependent(double gamma) { return {AlphaModel::velocity_dependent, 1.0, gamma}; }
  static RestitutionModel from_config(const SimConfig& config) {
    return {config.alpha_model, config.alpha, config.gamma};
  }
};

/// Coefficient at relative speed r >= 0: alpha for the constant model,
/// 1 / (1 + r^gamma) for the velocity-dependent one. Throws DomainError for
/// negative or NaN r.
double restitution(const RestitutionModel& model, double relative_speed);

struct PostCollision {
  double v;
  double v_star;
};

/// Outcome of one binary collision:
///   v'   = (v + v_*)/2 + (alpha/2)(v - v_*)
///   v_*' = (v + v_*)/2 - (alpha/2)(v - v_*)
/// Momentum is conserved; v'^2 + v_*'^2 - v^2 - v_*^2 = -(1 - alpha^2)/2 (v - v_*)^2.
/// alpha = 0 is perfect sticking (both leave at the midpoint).
inline PostCollision collide(double v, double v_star, double alpha) {
  if (alpha == 1.0) return {v, v_star};  // exact, not just up to rounding
  const double mid = 0.5 * (v + v_star);
  const double half_rel = 0.5 * alpha * (v - v_star);
  return {mid + half_rel, mid - half_rel};
}

/// Change of v^2 + v_*^2 produced by collide(), computed from the identity.
inline double quadratic_defect(double v, double v_star, double alpha) {
  const double d = v - v_star;
  return -0.5 * (1.0 - alpha * alpha) * d * d;
}

/// D = sum_{i,j} w_i w_j |v_i - v_j|^3 over ordered pairs (both orderings).
double dissipation_D(std::span<const Particle> particles);

/// D restricted to each cell of the grid (free grids are widened to cover
/// the ensemble; the returned vector matches grid.covering(...)).
std::vector<double> dissipation_D_per_cell(const ParticleEnsemble& ensemble, const Grid& grid);

/// Lower bounds on D with rho = sum w and theta = sum w (v - u)^2. Jensen
/// over the pair measure gives D >= 2 sqrt(2) rho^{1/2} theta^{3/2}, which is
/// invariant under rescaling the mass. The rho^{5/2} theta^{3/2} form follows
/// from it only when rho^2 <= 2 sqrt(2), e.g. for unit total mass.
double dissipation_lower_bound(std::span<const Particle> particles);
double dissipation_lower_bound_jensen(std::span<const Particle> particles);

}  // namespace granular
