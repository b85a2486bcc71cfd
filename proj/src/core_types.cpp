#include "granular/core_types.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "granular/rng.hpp"

namespace granular {

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kLeaf = 16;
  if (values.size() <= kLeaf) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

namespace {

template <class F>
double reduce_particles(std::span<const Particle> particles, F&& f) {
  std::vector<double> terms(particles.size());
  std::transform(particles.begin(), particles.end(), terms.begin(), f);
  return pairwise_sum(terms);
}

}  // namespace

double ParticleEnsemble::total_mass() const {
  return reduce_particles(particles, [](const Particle& p) { return p.w; });
}

double ParticleEnsemble::momentum() const {
  return reduce_particles(particles, [](const Particle& p) { return p.w * p.v; });
}

double ParticleEnsemble::kinetic_energy() const {
  return reduce_particles(particles, [](const Particle& p) { return 0.5 * p.w * p.v * p.v; });
}

double ParticleEnsemble::velocity_moment(double k) const {
  return reduce_particles(particles, [k](const Particle& p) { return p.w * std::pow(std::abs(p.v), k); });
}

bool ParticleEnsemble::all_finite() const {
  return std::all_of(particles.begin(), particles.end(), [](const Particle& p) {
    return std::isfinite(p.x) && std::isfinite(p.v) && std::isfinite(p.w);
  });
}

Grid Grid::uniform(double x_min, double x_max, std::size_t n_cells, Boundary boundary) {
  if (!(x_max > x_min) || n_cells == 0) {
    throw ConfigError("grid needs x_max > x_min and n_cells >= 1");
  }
  Grid g;
  g.origin = x_min;
  g.dx = (x_max - x_min) / static_cast<double>(n_cells);
  g.first_cell = 0;
  g.n_cells = n_cells;
  g.boundary = boundary;
  return g;
}

std::int64_t Grid::absolute_cell(double x) const {
  const auto c = static_cast<std::int64_t>(std::floor((x - origin) / dx));
  if (boundary == Boundary::periodic) {
    return std::clamp(c, first_cell, first_cell + static_cast<std::int64_t>(n_cells) - 1);
  }
  return c;
}

double Grid::cell_center(std::size_t local) const {
  return origin + (static_cast<double>(first_cell + static_cast<std::int64_t>(local)) + 0.5) * dx;
}

Grid Grid::covering(std::span<const Particle> particles) const {
  if (boundary == Boundary::periodic || particles.empty()) return *this;
  std::int64_t lo = first_cell;
  std::int64_t hi = first_cell + static_cast<std::int64_t>(n_cells) - 1;
  for (const Particle& p : particles) {
    const std::int64_t c = absolute_cell(p.x);
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  Grid g = *this;
  g.first_cell = lo;
  g.n_cells = static_cast<std::size_t>(hi - lo + 1);
  return g;
}

CellBins bin_particles(std::span<const Particle> particles, const Grid& grid) {
  CellBins bins;
  bins.offsets.assign(grid.n_cells + 1, 0);
  std::vector<std::uint32_t> cell_of(particles.size());
  for (std::size_t i = 0; i < particles.size(); ++i) {
    const std::int64_t local = grid.absolute_cell(particles[i].x) - grid.first_cell;
    if (local < 0 || local >= static_cast<std::int64_t>(grid.n_cells)) {
      throw ConsistencyError("particle at x=" + std::to_string(particles[i].x) + " lies outside the grid");
    }
    cell_of[i] = static_cast<std::uint32_t>(local);
    ++bins.offsets[local + 1];
  }
  for (std::size_t c = 0; c < grid.n_cells; ++c) bins.offsets[c + 1] += bins.offsets[c];
  bins.order.resize(particles.size());
  std::vector<std::size_t> cursor(bins.offsets.begin(), bins.offsets.end() - 1);
  for (std::size_t i = 0; i < particles.size(); ++i) {
    bins.order[cursor[cell_of[i]]++] = static_cast<std::uint32_t>(i);
  }
  return bins;
}

double HydroField::total_mass() const {
  std::vector<double> m(rho.size());
  std::transform(rho.begin(), rho.end(), m.begin(), [this](double r) { return r * grid.dx; });
  return pairwise_sum(m);
}

double HydroField::total_temperature() const {
  std::vector<double> m(theta.size());
  std::transform(theta.begin(), theta.end(), m.begin(), [this](double t) { return t * grid.dx; });
  return pairwise_sum(m);
}

HydroField deposit_fields(const ParticleEnsemble& ensemble, const Grid& grid) {
  HydroField field;
  field.grid = grid.covering(ensemble.particles);
  field.time = ensemble.time;
  const std::size_t n = field.grid.n_cells;
  field.rho.assign(n, 0.0);
  field.u.assign(n, 0.0);
  field.theta.assign(n, 0.0);
  const CellBins bins = bin_particles(ensemble.particles, field.grid);
  const double dx = field.grid.dx;
  const auto& ps = ensemble.particles;

#pragma omp parallel
  {
    std::vector<double> mass;
    std::vector<double> mom;
#pragma omp for schedule(static)
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(n); ++c) {
      const auto members = bins.cell(static_cast<std::size_t>(c));
      if (members.empty()) continue;
      mass.resize(members.size());
      mom.resize(members.size());
      for (std::size_t k = 0; k < members.size(); ++k) {
        const Particle& p = ps[members[k]];
        mass[k] = p.w;
        mom[k] = p.w * p.v;
      }
      const double m = pairwise_sum(mass);
      const double u = pairwise_sum(mom) / m;
      for (std::size_t k = 0; k < members.size(); ++k) {
        const Particle& p = ps[members[k]];
        mom[k] = p.w * (p.v - u) * (p.v - u);
      }
      field.rho[c] = m / dx;
      field.u[c] = u;
      field.theta[c] = pairwise_sum(mom) / dx;
    }
  }
  return field;
}

InitKind parse_init_kind(const std::string& name) {
  if (name == "two_state_riemann") return InitKind::two_state_riemann;
  if (name == "double_peak") return InitKind::double_peak;
  if (name == "homogeneous_maxwellianlike") return InitKind::homogeneous_maxwellianlike;
  if (name == "well_prepared_monokinetic") return InitKind::well_prepared_monokinetic;
  throw ConfigError("unknown init kind '" + name + "'");
}

std::string to_string(InitKind kind) {
  switch (kind) {
    case InitKind::two_state_riemann: return "two_state_riemann";
    case InitKind::double_peak: return "double_peak";
    case InitKind::homogeneous_maxwellianlike: return "homogeneous_maxwellianlike";
    case InitKind::well_prepared_monokinetic: return "well_prepared_monokinetic";
  }
  return "unknown";
}

ParticleEnsemble sample_initial(const InitSpec& spec, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ConfigError("sample_initial needs n >= 1");
  if (!(spec.x_max > spec.x_min)) throw ConfigError("init domain needs x_max > x_min");
  if (spec.sigma_v < 0.0) throw ConfigError("init.sigma_v must be non-negative");

  PhiloxStream pos_rng(derive_key(seed, StreamPurpose::initial_positions), 0, 0);
  PhiloxStream vel_rng(derive_key(seed, StreamPurpose::initial_velocities), 0, 0);
  const double length = spec.x_max - spec.x_min;
  const double jitter_half_width = std::sqrt(3.0) * spec.sigma_v;
  auto jitter = [&] { return jitter_half_width * (2.0 * vel_rng.uniform() - 1.0); };

  ParticleEnsemble e;
  e.particles.resize(n);
  const double w = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    Particle& p = e.particles[i];
    p.w = w;
    p.x = spec.x_min + length * pos_rng.uniform();
    switch (spec.kind) {
      case InitKind::two_state_riemann:
        p.v = (p.x < spec.x_split ? spec.u_left : spec.u_right) + jitter();
        break;
      case InitKind::double_peak:
        p.v = (vel_rng.uniform() < 0.5 ? -spec.v_peak : spec.v_peak) + jitter();
        break;
      case InitKind::homogeneous_maxwellianlike: {
        const double u1 = 1.0 - vel_rng.uniform();
        const double u2 = vel_rng.uniform();
        p.v = spec.u0 + spec.sigma_v * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
        break;
      }
      case InitKind::well_prepared_monokinetic: {
        const double s = (p.x - spec.x_min) / length;
        double u = spec.u0;
        if (spec.profile == VelocityProfile::linear) u += spec.amplitude * (2.0 * s - 1.0);
        if (spec.profile == VelocityProfile::sine) u += spec.amplitude * std::sin(2.0 * std::numbers::pi * s);
        p.v = u + jitter();
        break;
      }
    }
  }
  return e;
}

void FunctionalParams::validate() const {
  if (!(eta > 0.0)) throw ConfigError("functional.eta must be > 0");
  if (!(mu > 0.0)) throw ConfigError("functional.mu must be > 0");
  if (!(delta > 0.0)) throw ConfigError("functional.delta must be > 0");
  if (k < 0) throw ConfigError("functional.k must be >= 0");
  for (int kk : k_list) {
    if (kk < 0) throw ConfigError("functional.k_list entries must be >= 0");
  }
}

void SimConfig::validate() const {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0,1]");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in (0,1)");
  if (n_particles == 0) throw ConfigError("n_particles must be >= 1");
  if (n_cells == 0) throw ConfigError("n_cells must be >= 1");
  if (!(x_max > x_min)) throw ConfigError("domain needs x_max > x_min");
  if (!(t_end >= 0.0)) throw ConfigError("t_end must be >= 0");
  if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
  if (!(output_every >= 0.0)) throw ConfigError("output_every must be >= 0");
  functional.validate();
}

}  // namespace granular
