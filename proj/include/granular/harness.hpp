// Experiment drivers behind the command-line tool: single DSMC and sticky
// runs, epsilon sweeps against the sticky reference, and field comparison.

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "granular/config.hpp"
#include "granular/core_types.hpp"
#include "granular/diagnostics.hpp"
#include "granular/dsmc.hpp"
#include "granular/sticky.hpp"

namespace granular {

/// Sweep keys: sweep.epsilons (strictly decreasing), sweep.seeds,
/// sweep.compare_to_sticky, sweep.lambda_k, sweep.lambda_delta (0 = cell
/// width).
struct SweepSpec {
  SimConfig base;
  std::vector<double> epsilons;
  std::vector<std::uint64_t> seeds;
  bool compare_to_sticky = true;
  int lambda_k = 2;
  double lambda_delta = 0.0;

  static SweepSpec from_key_values(const KeyValues& kv);
  void validate() const;
  double effective_lambda_delta() const;
};

struct SweepRow {
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  double monokineticity = 0.0;   // integral of theta at t_end
  double w1_to_sticky = 0.0;     // DSMC particles vs sticky clusters at t_end
  double lambda_integral = 0.0;  // trapezoid over output times
  double oleinik_t = 0.0;        // field Oleinik ratio at t_end, times t_end
  std::uint64_t n_collisions = 0;
  double dissipated_energy = 0.0;
  std::string run_dir;  // relative to the sweep output directory; empty if nothing was written
};

struct SweepSummary {
  double epsilon = 0.0;
  std::size_t n_seeds = 0;
  double median_monokineticity = 0.0;
  double median_w1 = 0.0;
  double median_lambda_integral = 0.0;
  double median_oleinik_t = 0.0;
};

struct SweepReport {
  std::vector<SweepRow> rows;  // epsilon-major, seeds in the given order
  std::vector<SweepSummary> summaries;
  std::vector<std::string> files;  // written artifacts, relative to the output directory
};

struct RunOptions {
  std::string out_dir;  // empty: compute only, write nothing
  bool progress = false;
  bool quiet = false;
};

double median(std::vector<double> values);

/// Sticky solution started from the monokinetic projection of the initial
/// ensemble onto the grid (one cluster per occupied cell), with fields
/// deposited at the requested times.
struct StickyReference {
  ClusterState initial;
  StickyTrajectory trajectory;
  std::vector<HydroField> fields;  // at t0 and each output time
};
StickyReference sticky_reference(const ParticleEnsemble& initial, const Grid& grid, double t_end,
                                 const std::vector<double>& output_times);

/// One (epsilon, seed) point of a sweep. Writes fields.csv, diagnostics.csv
/// and (with the sticky comparison) sticky_fields.csv into options.out_dir
/// when it is set.
SweepRow run_sweep_point(const SweepSpec& spec, double epsilon, std::uint64_t seed, const RunOptions& options);

/// Points run concurrently; each owns its sub-directory. Writes sweep.csv,
/// sweep_summary.csv and manifest.json when options.out_dir is set.
SweepReport run_sweep(const SweepSpec& spec, const RunOptions& options);

/// Fields, diagnostics and the optional event log of one DSMC run, with the
/// conservation checks of every stored step. Throws ConsistencyError when an
/// invariant fails.
struct DsmcRunSummary {
  std::size_t n_outputs = 0;
  std::uint64_t n_steps = 0;
  std::uint64_t n_collisions = 0;
  double dissipated_energy = 0.0;
  double mass_drift = 0.0;      // relative
  double momentum_drift = 0.0;  // relative to sum w |v| at t = 0
  double energy_final = 0.0;
  std::vector<std::string> files;
};
DsmcRunSummary run_dsmc_to_disk(const SimConfig& config, const RunOptions& options);

struct StickyRunSummary {
  std::size_t n_initial = 0;
  std::size_t n_final = 0;
  std::size_t n_merges = 0;
  double max_oleinik_t = 0.0;
  std::vector<std::string> files;
};
/// Sticky dynamics on the real line from the sampled initial data (or its
/// cell projection). Writes trajectory.csv, fields.csv, diagnostics.csv.
StickyRunSummary run_sticky_to_disk(const SimConfig& config, const RunOptions& options);

/// W1 between the last snapshots of two field CSV files.
W1Result compare_field_files(const std::string& a, const std::string& b);

/// Writes the canonical key=value rendering of a config.
void write_config_echo(const std::string& path, const SimConfig& config);

}  // namespace granular
