// Exact event-driven sticky-particle dynamics: clusters move freely, and when
// two or more meet they merge into a single cluster carrying their total mass
// and momentum. This is the discrete pressureless Euler solution used as the
// reference for the hydrodynamic limit.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "granular/core_types.hpp"

namespace granular {

struct Cluster {
  double x = 0.0;
  double v = 0.0;
  double m = 0.0;
  std::uint64_t id = 0;  // smallest original index among the merged members
};

/// Clusters ordered by strictly increasing position.
struct ClusterState {
  std::vector<Cluster> clusters;
  double time = 0.0;

  std::size_t size() const { return clusters.size(); }
  double total_mass() const;
  double momentum() const;
  double kinetic_energy() const;
};

struct CollisionEvent {
  double t_event = 0.0;
  std::size_t left_index = 0;
  std::size_t right_index = 0;
};

struct StickyTolerances {
  /// Events closer than this to the earliest one are processed as one pile-up.
  double time = 1e-12;
  /// Relative to max(1, spatial extent): members of a merge must coincide.
  double position = 1e-9;
};

/// Free flight of every cluster to time t (no merges).
ClusterState advect(const ClusterState& state, double t);

/// Earliest closing time over adjacent pairs with v_left > v_right.
std::optional<CollisionEvent> next_event(const ClusterState& state);

/// Advects to the event time and replaces the colliding group (the event pair
/// plus any neighbour that sits at the same point) by one cluster with the
/// summed mass, the mass-weighted mean velocity, at the collision point.
/// Throws ConsistencyError if the pair does not actually meet.
ClusterState merge(const ClusterState& state, const CollisionEvent& event, const StickyTolerances& tol = {});

enum class SnapshotKind { initial, event, output, final };

struct StickySnapshot {
  ClusterState state;
  SnapshotKind kind = SnapshotKind::output;
};

struct StickyOptions {
  std::vector<double> output_times;  // sorted; times outside (t0, t_end) are ignored
  bool record_events = true;         // post-merge snapshot at every merge instant
  StickyTolerances tolerances;
};

struct StickyTrajectory {
  std::vector<StickySnapshot> snapshots;  // time-ordered
  std::vector<double> merge_times;
  std::size_t n_merges = 0;  // clusters absorbed (initial count - final count)
  bool has_all_events = false;

  const ClusterState& final_state() const { return snapshots.back().state; }
  /// Exact state at time t (post-merge at merge instants). Needs
  /// has_all_events; throws ResolutionError otherwise.
  ClusterState state_at(double t) const;
  /// State just before t (pre-merge limit at merge instants).
  ClusterState state_before(double t) const;
};

/// Event loop with a lazily invalidated priority queue of adjacent-pair
/// closing times.
StickyTrajectory run_sticky(const ClusterState& initial, double t_end, const StickyOptions& options = {});

/// One particle per cluster, weight = mass, order preserved.
ParticleEnsemble to_ensemble(const ClusterState& state);

/// One cluster per particle, sorted by position; particles sharing a position
/// start merged.
ClusterState from_ensemble(const ParticleEnsemble& ensemble);

/// One cluster per occupied cell: summed mass, cell mean velocity, placed at
/// the cell's centre of mass.
ClusterState monokinetic_projection(const ParticleEnsemble& ensemble, const Grid& grid);

/// CSV `t,cluster_id,x,v,m`, one row per cluster per snapshot.
void write_trajectory_csv(std::ostream& out, const StickyTrajectory& trajectory);
void write_trajectory_csv(const std::string& path, const StickyTrajectory& trajectory);

}  // namespace granular
