#include "granular/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

#include "granular/field_io.hpp"
#include "json.hpp"

namespace granular {

namespace fs = std::filesystem;

SweepSpec SweepSpec::from_key_values(const KeyValues& kv) {
  SweepSpec s;
  s.base = sim_config_from(kv, true);
  s.epsilons = kv.get_double_list("sweep.epsilons").value_or(std::vector<double>{s.base.epsilon});
  s.seeds = kv.get_uint_list("sweep.seeds").value_or(std::vector<std::uint64_t>{s.base.seed});
  s.compare_to_sticky = kv.get_bool("sweep.compare_to_sticky").value_or(true);
  s.lambda_k = static_cast<int>(kv.get_uint("sweep.lambda_k").value_or(2));
  s.lambda_delta = kv.get_double("sweep.lambda_delta").value_or(0.0);
  for (const std::string& key : kv.unused_keys()) {
    throw ConfigError(kv.source() + ": unknown key '" + key + "'");
  }
  s.validate();
  return s;
}

void SweepSpec::validate() const {
  base.validate();
  if (epsilons.empty()) throw ConfigError("sweep.epsilons is empty");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0.0)) throw ConfigError("sweep.epsilons must be positive");
    if (i > 0 && !(epsilons[i] < epsilons[i - 1])) throw ConfigError("sweep.epsilons must be strictly decreasing");
  }
  if (seeds.empty()) throw ConfigError("sweep.seeds is empty");
  if (lambda_k < 0) throw ConfigError("sweep.lambda_k must be >= 0");
  if (!(lambda_delta >= 0.0)) throw ConfigError("sweep.lambda_delta must be >= 0");
}

double SweepSpec::effective_lambda_delta() const {
  return lambda_delta > 0.0 ? lambda_delta : (base.x_max - base.x_min) / static_cast<double>(base.n_cells);
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

std::string format_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string join(const std::string& dir, const std::string& name) {
  return dir.empty() ? name : (fs::path(dir) / name).string();
}

double trapezoid(const std::vector<double>& t, const std::vector<double>& y) {
  std::vector<double> parts;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) parts.push_back(0.5 * (t[i + 1] - t[i]) * (y[i] + y[i + 1]));
  return pairwise_sum(parts);
}

// stderr ticker, at most ~100 updates per run
class Ticker {
 public:
  Ticker(std::string label, std::uint64_t total, bool enabled)
      : label_(std::move(label)), total_(total), enabled_(enabled && total > 0) {}

  void update(std::uint64_t done, double t) {
    if (!enabled_) return;
    const std::uint64_t pct = done * 100 / total_;
    if (pct == last_ && done != total_) return;
    last_ = pct;
    std::fprintf(stderr, "\r[%s] %3llu%%  step %llu/%llu  t=%.4g", label_.c_str(), static_cast<unsigned long long>(pct),
                 static_cast<unsigned long long>(done), static_cast<unsigned long long>(total_), t);
    if (done == total_) std::fprintf(stderr, "\n");
    std::fflush(stderr);
  }

 private:
  std::string label_;
  std::uint64_t total_;
  bool enabled_;
  std::uint64_t last_ = 101;
};

std::vector<double> sticky_output_times(const SimConfig& c) {
  const double every = c.output_every > 0.0 ? c.output_every : c.t_end / 20.0;
  std::vector<double> out;
  if (!(every > 0.0)) return out;
  for (std::size_t i = 1;; ++i) {
    const double t = static_cast<double>(i) * every;
    if (t >= c.t_end * (1.0 - 1e-12)) break;
    out.push_back(t);
  }
  return out;
}

}  // namespace

StickyReference sticky_reference(const ParticleEnsemble& initial, const Grid& grid, double t_end,
                                 const std::vector<double>& output_times) {
  StickyReference ref;
  ref.initial = monokinetic_projection(initial, grid);
  StickyOptions opts;
  opts.output_times = output_times;
  opts.record_events = false;
  ref.trajectory = run_sticky(ref.initial, t_end, opts);
  for (const StickySnapshot& s : ref.trajectory.snapshots) {
    if (s.kind == SnapshotKind::event) continue;
    HydroField f = deposit_fields(to_ensemble(s.state), grid);
    ref.fields.push_back(std::move(f));
  }
  return ref;
}

SweepRow run_sweep_point(const SweepSpec& spec, double epsilon, std::uint64_t seed, const RunOptions& options) {
  SimConfig c = spec.base;
  c.epsilon = epsilon;
  c.seed = seed;
  c.validate();
  const ParticleEnsemble initial = sample_initial(c.init, c.n_particles, c.seed);

  DsmcRunOptions dopts;
  dopts.keep_snapshots = true;
  Ticker ticker("eps=" + format_g(epsilon) + " seed=" + std::to_string(seed), step_count(c), options.progress);
  dopts.on_step = [&](const DsmcState& s, const StepReport&) { ticker.update(s.step_index, s.ensemble.time); };
  const DsmcRun run = run_dsmc(c, initial, dopts);

  SweepRow row;
  row.epsilon = epsilon;
  row.seed = seed;
  const Grid grid = c.grid();
  std::vector<DiagnosticsRow> diag;
  std::vector<double> lambda;
  for (const ParticleEnsemble& e : run.snapshots) {
    const auto rows = diagnostics_rows(e, grid, c.functional);
    diag.insert(diag.end(), rows.begin(), rows.end());
    lambda.push_back(lambda_trace(e, spec.lambda_k, spec.effective_lambda_delta()));
  }
  row.lambda_integral = trapezoid(run.output_times, lambda);
  row.monokineticity = run.fields.back().total_temperature();
  row.oleinik_t = oleinik_sup(run.fields.back()) * (run.output_times.back() - run.output_times.front());
  for (const StepReport& r : run.reports) {
    row.n_collisions += r.n_collision_events;
    row.dissipated_energy += r.dissipated_energy;
  }

  StickyReference ref;
  if (spec.compare_to_sticky) {
    std::vector<double> times(run.output_times.begin() + 1, run.output_times.end());
    ref = sticky_reference(initial, grid, c.t_end, times);
    row.w1_to_sticky = wasserstein1(MassDistribution::from_ensemble(run.snapshots.back()),
                                    MassDistribution::from_clusters(ref.trajectory.final_state()))
                           .distance;
  }

  if (!options.out_dir.empty()) {
    fs::create_directories(options.out_dir);
    write_fields_csv(join(options.out_dir, "fields.csv"), run.fields);
    write_diagnostics_csv(join(options.out_dir, "diagnostics.csv"), diag);
    if (spec.compare_to_sticky) write_fields_csv(join(options.out_dir, "sticky_fields.csv"), ref.fields);
  }
  return row;
}

SweepReport run_sweep(const SweepSpec& spec, const RunOptions& options) {
  spec.validate();
  struct Point {
    double epsilon;
    std::uint64_t seed;
    std::string dir;
  };
  std::vector<Point> points;
  for (double eps : spec.epsilons) {
    for (std::uint64_t seed : spec.seeds) {
      points.push_back({eps, seed, "eps_" + format_g(eps) + "_seed_" + std::to_string(seed)});
    }
  }

  SweepReport report;
  report.rows.resize(points.size());
  std::vector<std::exception_ptr> errors(points.size());
  const std::int64_t n_points = static_cast<std::int64_t>(points.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n_points; ++i) {
    try {
      RunOptions o = options;
      o.out_dir = options.out_dir.empty() ? std::string{} : join(options.out_dir, points[i].dir);
      SweepRow row = run_sweep_point(spec, points[i].epsilon, points[i].seed, o);
      if (!options.out_dir.empty()) row.run_dir = points[i].dir;
      report.rows[i] = std::move(row);
      if (!options.quiet) {
#pragma omp critical(sweep_log)
        std::fprintf(stderr, "[sweep] eps=%s seed=%llu done\n", format_g(points[i].epsilon).c_str(),
                     static_cast<unsigned long long>(points[i].seed));
      }
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (double eps : spec.epsilons) {
    SweepSummary s;
    s.epsilon = eps;
    std::vector<double> mono, w1, lam, ole;
    for (const SweepRow& r : report.rows) {
      if (r.epsilon != eps) continue;
      mono.push_back(r.monokineticity);
      w1.push_back(r.w1_to_sticky);
      lam.push_back(r.lambda_integral);
      ole.push_back(r.oleinik_t);
    }
    s.n_seeds = mono.size();
    s.median_monokineticity = median(mono);
    s.median_w1 = median(w1);
    s.median_lambda_integral = median(lam);
    s.median_oleinik_t = median(ole);
    report.summaries.push_back(s);
  }

  if (options.out_dir.empty()) return report;

  for (const SweepRow& r : report.rows) {
    report.files.push_back(r.run_dir + "/fields.csv");
    report.files.push_back(r.run_dir + "/diagnostics.csv");
    if (spec.compare_to_sticky) report.files.push_back(r.run_dir + "/sticky_fields.csv");
  }
  {
    std::ofstream out(join(options.out_dir, "sweep.csv"));
    if (!out) throw ConfigError("cannot write sweep.csv in '" + options.out_dir + "'");
    out << "epsilon,seed,monokineticity,w1_to_sticky,lambda_integral,oleinik_t,n_collisions,dissipated_energy\n";
    for (const SweepRow& r : report.rows) {
      out << csv_number(r.epsilon) << ',' << r.seed << ',' << csv_number(r.monokineticity) << ','
          << csv_number(r.w1_to_sticky) << ',' << csv_number(r.lambda_integral) << ',' << csv_number(r.oleinik_t)
          << ',' << r.n_collisions << ',' << csv_number(r.dissipated_energy) << '\n';
    }
  }
  {
    std::ofstream out(join(options.out_dir, "sweep_summary.csv"));
    if (!out) throw ConfigError("cannot write sweep_summary.csv in '" + options.out_dir + "'");
    out << "epsilon,n_seeds,median_monokineticity,median_w1,median_lambda_integral,median_oleinik_t\n";
    for (const SweepSummary& s : report.summaries) {
      out << csv_number(s.epsilon) << ',' << s.n_seeds << ',' << csv_number(s.median_monokineticity) << ','
          << csv_number(s.median_w1) << ',' << csv_number(s.median_lambda_integral) << ','
          << csv_number(s.median_oleinik_t) << '\n';
    }
  }
  report.files.push_back("sweep.csv");
  report.files.push_back("sweep_summary.csv");

  nlohmann::ordered_json manifest;
  nlohmann::ordered_json echo;
  for (const auto& [k, v] : to_key_values(spec.base)) echo[k] = v;
  echo["sweep.epsilons"] = spec.epsilons;
  echo["sweep.seeds"] = spec.seeds;
  echo["sweep.compare_to_sticky"] = spec.compare_to_sticky;
  echo["sweep.lambda_k"] = spec.lambda_k;
  echo["sweep.lambda_delta"] = spec.effective_lambda_delta();
  manifest["spec_echo"] = echo;
  manifest["rows"] = nlohmann::ordered_json::array();
  for (const SweepRow& r : report.rows) {
    manifest["rows"].push_back({{"epsilon", r.epsilon},
                                {"seed", r.seed},
                                {"monokineticity", r.monokineticity},
                                {"w1_to_sticky", r.w1_to_sticky},
                                {"lambda_integral", r.lambda_integral},
                                {"oleinik_t", r.oleinik_t},
                                {"n_collisions", r.n_collisions},
                                {"dissipated_energy", r.dissipated_energy},
                                {"run_dir", r.run_dir}});
  }
  manifest["file_list"] = report.files;
  std::ofstream out(join(options.out_dir, "manifest.json"));
  if (!out) throw ConfigError("cannot write manifest.json in '" + options.out_dir + "'");
  out << manifest.dump(2) << '\n';
  return report;
}

void write_config_echo(const std::string& path, const SimConfig& config) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  for (const auto& [k, v] : to_key_values(config)) out << k << " = " << v << '\n';
}

DsmcRunSummary run_dsmc_to_disk(const SimConfig& config, const RunOptions& options) {
  config.validate();
  DsmcRunSummary summary;
  const ParticleEnsemble initial = sample_initial(config.init, config.n_particles, config.seed);
  const double mass0 = initial.total_mass();
  const double p0 = initial.momentum();
  const double p_scale = std::max(initial.velocity_moment(1.0), std::numeric_limits<double>::min());
  double energy_prev = initial.kinetic_energy();
  const double energy0 = energy_prev;

  std::ofstream events;
  if (!options.out_dir.empty()) {
    fs::create_directories(options.out_dir);
    if (config.event_log) {
      events.open(join(options.out_dir, "events.bin"), std::ios::binary);
      if (!events) throw ConfigError("cannot write events.bin in '" + options.out_dir + "'");
      write_event_log_header(events);
    }
  }

  Ticker ticker("dsmc", step_count(config), options.progress);
  DsmcRunOptions dopts;
  dopts.keep_snapshots = true;
  dopts.on_step = [&](const DsmcState& s, const StepReport& r) {
    const ParticleEnsemble& e = s.ensemble;
    if (!e.all_finite()) throw ConsistencyError("non-finite particle state at t=" + std::to_string(e.time));
    const double mass_drift = std::abs(e.total_mass() - mass0) / mass0;
    const double p_drift = std::abs(e.momentum() - p0) / p_scale;
    summary.mass_drift = std::max(summary.mass_drift, mass_drift);
    summary.momentum_drift = std::max(summary.momentum_drift, p_drift);
    if (mass_drift > 1e-12) throw ConsistencyError("mass drift " + std::to_string(mass_drift));
    if (p_drift > 1e-12) throw ConsistencyError("momentum drift " + std::to_string(p_drift));
    const double energy = e.kinetic_energy();
    if (energy > energy_prev + 1e-12 * energy0 || r.dissipated_energy < 0.0) {
      throw ConsistencyError("kinetic energy increased at t=" + std::to_string(e.time));
    }
    if (std::abs((energy_prev - energy) - r.dissipated_energy) > 1e-10 * std::max(energy0, 1e-300)) {
      throw ConsistencyError("energy loss does not match the dissipation ledger at t=" + std::to_string(e.time));
    }
    energy_prev = energy;
    if (events.is_open()) append_event_log(events, r.events);
    ticker.update(s.step_index, e.time);
  };
  const DsmcRun run = run_dsmc(config, initial, dopts);

  summary.n_outputs = run.output_times.size();
  summary.n_steps = run.final_state.step_index;
  for (const StepReport& r : run.reports) {
    summary.n_collisions += r.n_collision_events;
    summary.dissipated_energy += r.dissipated_energy;
  }
  summary.energy_final = run.final_state.ensemble.kinetic_energy();
  if (options.out_dir.empty()) return summary;

  std::vector<DiagnosticsRow> diag;
  const Grid grid = config.grid();
  for (const ParticleEnsemble& e : run.snapshots) {
    const auto rows = diagnostics_rows(e, grid, config.functional);
    diag.insert(diag.end(), rows.begin(), rows.end());
  }
  write_fields_csv(join(options.out_dir, "fields.csv"), run.fields);
  write_diagnostics_csv(join(options.out_dir, "diagnostics.csv"), diag);
  write_config_echo(join(options.out_dir, "config.txt"), config);
  summary.files = {"fields.csv", "diagnostics.csv", "config.txt"};
  if (events.is_open()) {
    events.close();
    summary.files.push_back("events.bin");
  }
  return summary;
}

StickyRunSummary run_sticky_to_disk(const SimConfig& config, const RunOptions& options) {
  config.validate();
  if (config.boundary == Boundary::periodic) {
    throw ConfigError("sticky dynamics runs on the real line; use boundary = free");
  }
  const ParticleEnsemble sampled = sample_initial(config.init, config.n_particles, config.seed);
  const Grid grid = config.grid();
  const ClusterState initial = config.sticky_project_cells ? monokinetic_projection(sampled, grid) : from_ensemble(sampled);

  StickyOptions opts;
  opts.output_times = sticky_output_times(config);
  opts.record_events = config.sticky_record_events;
  const StickyTrajectory traj = run_sticky(initial, config.t_end, opts);

  StickyRunSummary summary;
  summary.n_initial = initial.size();
  summary.n_final = traj.final_state().size();
  summary.n_merges = traj.n_merges;

  const double m0 = initial.total_mass();
  const double p0 = initial.momentum();
  double p_scale = 0.0;
  for (const Cluster& c : initial.clusters) p_scale += c.m * std::abs(c.v);
  p_scale = std::max(p_scale, std::numeric_limits<double>::min());
  double e_prev = initial.kinetic_energy();
  const double e0 = e_prev;
  for (const StickySnapshot& s : traj.snapshots) {
    const ClusterState& st = s.state;
    if (std::abs(st.total_mass() - m0) > 1e-12 * m0) throw ConsistencyError("sticky mass not conserved");
    if (std::abs(st.momentum() - p0) > 1e-12 * p_scale) throw ConsistencyError("sticky momentum not conserved");
    const double e = st.kinetic_energy();
    if (e > e_prev + 1e-12 * e0) throw ConsistencyError("sticky kinetic energy increased");
    e_prev = e;
    const double elapsed = st.time - initial.time;
    if (elapsed > 0.0) {
      const double r = oleinik_sup(to_ensemble(st)) * elapsed;
      summary.max_oleinik_t = std::max(summary.max_oleinik_t, r);
      if (r > 1.0 + 1e-9) throw ConsistencyError("discrete Oleinik bound violated at t=" + std::to_string(st.time));
    }
  }
  if (options.out_dir.empty()) return summary;

  fs::create_directories(options.out_dir);
  std::vector<HydroField> fields;
  std::vector<DiagnosticsRow> diag;
  for (const StickySnapshot& s : traj.snapshots) {
    if (s.kind == SnapshotKind::event) continue;
    const ParticleEnsemble e = to_ensemble(s.state);
    fields.push_back(deposit_fields(e, grid));
    const auto rows = diagnostics_rows(e, grid, config.functional);
    diag.insert(diag.end(), rows.begin(), rows.end());
  }
  write_trajectory_csv(join(options.out_dir, "trajectory.csv"), traj);
  write_fields_csv(join(options.out_dir, "fields.csv"), fields);
  write_diagnostics_csv(join(options.out_dir, "diagnostics.csv"), diag);
  write_config_echo(join(options.out_dir, "config.txt"), config);
  summary.files = {"trajectory.csv", "fields.csv", "diagnostics.csv", "config.txt"};
  return summary;
}

W1Result compare_field_files(const std::string& a, const std::string& b) {
  const auto fa = read_fields_csv(a);
  const auto fb = read_fields_csv(b);
  if (fa.empty()) throw ConfigError(a + ": no field snapshots");
  if (fb.empty()) throw ConfigError(b + ": no field snapshots");
  return wasserstein1(MassDistribution::from_field(fa.back()), MassDistribution::from_field(fb.back()));
}

}  // namespace granular
