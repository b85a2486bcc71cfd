// Shared value types for the granular-gas kinetic simulator: weighted particle
// ensembles, cell grids, hydrodynamic fields, run configuration and the
// initial-data constructors.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace granular {

// Error taxonomy. Each maps onto one failure class of the solvers and the CLI
// (config errors exit 1, numerical-invariant failures exit 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class TimestepError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class ResolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fixed-order pairwise (tree) reduction. The split points depend only on the
/// length of the input, so the result is independent of thread count.
double pairwise_sum(std::span<const double> values);

struct Particle {
  double x = 0.0;  // position
  double v = 0.0;  // velocity
  double w = 0.0;  // weight (mass)
};

/// Weighted empirical measure sum_i w_i delta(x - x_i) delta(v - v_i).
struct ParticleEnsemble {
  std::vector<Particle> particles;
  double time = 0.0;

  std::size_t size() const { return particles.size(); }
  double total_mass() const;
  double momentum() const;
  /// sum_i w_i v_i^2 / 2
  double kinetic_energy() const;
  /// sum_i w_i |v_i|^k
  double velocity_moment(double k) const;
  bool all_finite() const;
};

enum class Boundary { free, periodic };

/// Uniform cell partition. Cell c (an absolute, possibly negative index)
/// covers [origin + c*dx, origin + (c+1)*dx). The grid owns the contiguous
/// window first_cell .. first_cell + n_cells - 1; a free-boundary grid can be
/// widened to cover data while keeping the same origin and dx so that binning
/// never depends on the window.
struct Grid {
  double origin = 0.0;
  double dx = 1.0;
  std::int64_t first_cell = 0;
  std::size_t n_cells = 1;
  Boundary boundary = Boundary::free;

  static Grid uniform(double x_min, double x_max, std::size_t n_cells, Boundary boundary);

  double x_min() const { return origin + static_cast<double>(first_cell) * dx; }
  double x_max() const {
    return origin + static_cast<double>(first_cell + static_cast<std::int64_t>(n_cells)) * dx;
  }
  double length() const { return static_cast<double>(n_cells) * dx; }

  /// Absolute cell index of x. Periodic grids clamp into the window.
  std::int64_t absolute_cell(double x) const;
  double cell_center(std::size_t local) const;

  /// Free boundary: the smallest window (same origin/dx) containing this
  /// window and every particle. Periodic grids are returned unchanged.
  Grid covering(std::span<const Particle> particles) const;
};

/// Particles grouped by cell with a stable counting sort: within each cell the
/// original particle order is kept, so all per-cell reductions are
/// deterministic.
struct CellBins {
  std::vector<std::size_t> offsets;  // size n_cells + 1
  std::vector<std::uint32_t> order;  // particle indices, grouped by cell

  std::size_t n_cells() const { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::span<const std::uint32_t> cell(std::size_t c) const {
    return {order.data() + offsets[c], offsets[c + 1] - offsets[c]};
  }
};

/// Requires that grid covers every particle (call Grid::covering first for
/// free boundaries).
CellBins bin_particles(std::span<const Particle> particles, const Grid& grid);

/// Cell-averaged hydrodynamic fields: rho = mass/dx, u = mass-mean velocity,
/// theta = sum w (v - u)^2 / dx. Empty cells carry (0, 0, 0).
struct HydroField {
  Grid grid;
  std::vector<double> rho;
  std::vector<double> u;
  std::vector<double> theta;
  double time = 0.0;

  double total_mass() const;
  /// integral of theta dx
  double total_temperature() const;
};

HydroField deposit_fields(const ParticleEnsemble& ensemble, const Grid& grid);

enum class InitKind { two_state_riemann, double_peak, homogeneous_maxwellianlike, well_prepared_monokinetic };
enum class VelocityProfile { constant, linear, sine };

InitKind parse_init_kind(const std::string& name);
std::string to_string(InitKind kind);

/// Initial-data preset. Positions are uniform on [x_min, x_max]; the
/// velocity law depends on the kind. sigma_v is a compactly supported jitter
/// (uniform with that standard deviation) for every kind except
/// homogeneous_maxwellianlike, where it is the Gaussian width.
struct InitSpec {
  InitKind kind = InitKind::two_state_riemann;
  double x_min = 0.0;
  double x_max = 1.0;
  // two_state_riemann
  double u_left = 1.0;
  double u_right = -1.0;
  double x_split = 0.5;
  // double_peak
  double v_peak = 1.0;
  // homogeneous_maxwellianlike / well_prepared_monokinetic
  double u0 = 0.0;
  VelocityProfile profile = VelocityProfile::constant;
  double amplitude = 0.0;
  double sigma_v = 0.0;
};

/// n particles of weight 1/n. Bitwise deterministic for fixed (spec, n, seed).
ParticleEnsemble sample_initial(const InitSpec& spec, std::size_t n, std::uint64_t seed);

/// Parameters of the L_{eta,mu,k} and Lambda_{f,k} functionals.
struct FunctionalParams {
  double eta = 0.1;
  double mu = 0.01;
  int k = 2;
  double delta = 0.01;
  std::vector<int> k_list;
  /// Above this many particles the O(N^2) L functional is estimated on a
  /// deterministic strided subsample (weights rescaled to the full mass).
  std::size_t l_max_particles = 4096;

  void validate() const;
};

enum class AlphaModel { constant, velocity_dependent };

struct SimConfig {
  double epsilon = 1.0;
  AlphaModel alpha_model = AlphaModel::constant;
  double alpha = 0.5;
  double gamma = 0.5;
  std::size_t n_particles = 1000;
  std::size_t n_cells = 100;
  double x_min = 0.0;
  double x_max = 1.0;
  Boundary boundary = Boundary::free;
  double t_end = 1.0;
  double dt = 1e-3;
  std::uint64_t seed = 1;
  FunctionalParams functional;
  InitSpec init;
  std::string output_dir = "out";
  /// Interval between stored snapshots; 0 means t_end / 20.
  double output_every = 0.0;
  bool event_log = false;
  /// Post-merge snapshot at every merge instant in sticky runs. Each one
  /// stores the full cluster list, so this is for small ensembles.
  bool sticky_record_events = false;
  /// Sticky runs start either from every sampled particle or from the
  /// per-cell monokinetic projection of the sampled ensemble.
  bool sticky_project_cells = false;

  Grid grid() const { return Grid::uniform(x_min, x_max, n_cells, boundary); }
  void validate() const;
};

}  // namespace granular
