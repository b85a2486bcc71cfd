// Stochastic particle solver for the scaled granular-gas equation
//
//   df/dt + v df/dx = (1/eps) Q_alpha(f, f)
//
// First-order splitting: free transport, then per-cell binary collisions at
// rate |v - v_*| / eps selected with a majorant / acceptance-rejection
// (no-time-counter style) scheme.

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "granular/collision.hpp"
#include "granular/core_types.hpp"

namespace granular {

/// One accepted collision: pre- and post-collision velocities of the pair and
/// the (common) particle weight.
struct CollisionRecord {
  double v;
  double v_star;
  double v_prime;
  double v_star_prime;
  double w;
};

struct StepReport {
  std::uint64_t n_candidates = 0;
  std::uint64_t n_collision_events = 0;
  /// Loss of sum_i w_i v_i^2 / 2: each event removes (w/2)(1 - alpha^2)/2 (v - v_*)^2.
  double dissipated_energy = 0.0;
  /// Largest per-particle candidate probability (n_c - 1) w V_max dt / (eps dx)
  /// over cells. Above 1 a particle is expected to be drawn more than once
  /// per step and the step is refused.
  double max_collision_probability = 0.0;
  std::vector<CollisionRecord> events;  // filled only when event logging is on

  void accumulate(const StepReport& other);
};

struct DsmcState {
  ParticleEnsemble ensemble;
  Grid grid;  // periodic domain, or origin/dx of the free-boundary partition
  double epsilon = 1.0;
  RestitutionModel model;
  std::uint64_t rng_root = 0;
  std::uint64_t step_index = 0;
  bool log_events = false;

  /// Rejects unequal particle weights (both partners of a collision always
  /// update, which conserves momentum only for equal weights).
  static DsmcState make(const SimConfig& config, ParticleEnsemble ensemble);
};

/// x <- x + v dt, wrapped into [x_min, x_max) for periodic grids. Advances
/// the ensemble time by dt.
void transport_step(DsmcState& state, double dt);

/// Collisions for one step of length dt. Every (step_index, cell) pair draws
/// from its own counter-based stream, so the outcome does not depend on the
/// number of threads. Throws TimestepError (state untouched) if the per-cell
/// candidate probability exceeds 1. Increments step_index.
StepReport collision_step(DsmcState& state, double dt);

struct DsmcRunOptions {
  bool keep_snapshots = true;
  std::function<void(const DsmcState&, const StepReport&)> on_step;
};

struct DsmcRun {
  std::vector<double> output_times;
  std::vector<HydroField> fields;           // one per output time
  std::vector<ParticleEnsemble> snapshots;  // one per output time, if kept
  std::vector<StepReport> reports;          // aggregated over each output interval (first entry empty)
  DsmcState final_state;
};

/// Step indices at which snapshots are stored: 0, every round(output_every/dt)
/// steps, and the last step.
std::vector<std::uint64_t> output_steps(const SimConfig& config);
std::uint64_t step_count(const SimConfig& config);

DsmcRun run_dsmc(const SimConfig& config, const DsmcRunOptions& options = {});
DsmcRun run_dsmc(const SimConfig& config, ParticleEnsemble initial, const DsmcRunOptions& options = {});

enum class TestFunction { one, v, v2, abs_v3, v4 };

double evaluate(TestFunction psi, double v);

/// sum over events of (w/2)(psi(v') + psi(v_*') - psi(v) - psi(v_*)). Zero for
/// psi = 1 and psi = v; minus the dissipated kinetic energy for psi = v^2.
double weak_form_audit(std::span<const CollisionRecord> events, TestFunction psi);

/// Binary event log: the 8-byte magic "GRANEVT1" followed by records of five
/// little-endian doubles (v, v_star, v_prime, v_star_prime, w) up to EOF.
void append_event_log(std::ostream& out, std::span<const CollisionRecord> events);
void write_event_log_header(std::ostream& out);
std::vector<CollisionRecord> read_event_log(const std::string& path);

}  // namespace granular
