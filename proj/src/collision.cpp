#include "granular/collision.hpp"

#include <cmath>
#include <string>

namespace granular {

double restitution(const RestitutionModel& model, double relative_speed) {
  if (!(relative_speed >= 0.0)) {
    throw DomainError("restitution: relative speed must be >= 0, got " + std::to_string(relative_speed));
  }
  if (model.kind == AlphaModel::constant) return model.alpha;
  return 1.0 / (1.0 + std::pow(relative_speed, model.gamma));
}

double dissipation_D(std::span<const Particle> particles) {
  const std::size_t n = particles.size();
  if (n < 2) return 0.0;
  std::vector<double> rows(n, 0.0);
  std::vector<double> terms;
  for (std::size_t i = 0; i < n; ++i) {
    terms.clear();
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = std::abs(particles[i].v - particles[j].v);
      terms.push_back(particles[i].w * particles[j].w * d * d * d);
    }
    rows[i] = pairwise_sum(terms);
  }
  return 2.0 * pairwise_sum(rows);
}

std::vector<double> dissipation_D_per_cell(const ParticleEnsemble& ensemble, const Grid& grid) {
  const Grid g = grid.covering(ensemble.particles);
  const CellBins bins = bin_particles(ensemble.particles, g);
  std::vector<double> out(g.n_cells, 0.0);
  std::vector<Particle> members;
  for (std::size_t c = 0; c < g.n_cells; ++c) {
    members.clear();
    for (auto i : bins.cell(c)) members.push_back(ensemble.particles[i]);
    out[c] = dissipation_D(members);
  }
  return out;
}

namespace {

std::pair<double, double> mass_and_temperature(std::span<const Particle> particles) {
  std::vector<double> mass(particles.size());
  std::vector<double> mom(particles.size());
  for (std::size_t i = 0; i < particles.size(); ++i) {
    mass[i] = particles[i].w;
    mom[i] = particles[i].w * particles[i].v;
  }
  const double rho = pairwise_sum(mass);
  if (rho <= 0.0) return {0.0, 0.0};
  const double u = pairwise_sum(mom) / rho;
  for (std::size_t i = 0; i < particles.size(); ++i) {
    const double d = particles[i].v - u;
    mom[i] = particles[i].w * d * d;
  }
  return {rho, pairwise_sum(mom)};
}

}  // namespace

double dissipation_lower_bound(std::span<const Particle> particles) {
  const auto [rho, theta] = mass_and_temperature(particles);
  return std::pow(rho, 2.5) * std::pow(theta, 1.5);
}

double dissipation_lower_bound_jensen(std::span<const Particle> particles) {
  const auto [rho, theta] = mass_and_temperature(particles);
  return 2.0 * std::sqrt(2.0 * rho) * std::pow(theta, 1.5);
}

}  // namespace granular
