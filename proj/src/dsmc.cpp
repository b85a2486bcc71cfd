#include "granular/dsmc.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "granular/rng.hpp"

namespace granular {

void StepReport::accumulate(const StepReport& other) {
  n_candidates += other.n_candidates;
  n_collision_events += other.n_collision_events;
  dissipated_energy += other.dissipated_energy;
  max_collision_probability = std::max(max_collision_probability, other.max_collision_probability);
  events.insert(events.end(), other.events.begin(), other.events.end());
}

DsmcState DsmcState::make(const SimConfig& config, ParticleEnsemble ensemble) {
  config.validate();
  if (!ensemble.particles.empty()) {
    const double w0 = ensemble.particles.front().w;
    for (const Particle& p : ensemble.particles) {
      if (std::abs(p.w - w0) > 1e-12 * w0) throw ConfigError("DSMC requires equal particle weights");
    }
  }
  DsmcState s;
  s.grid = config.grid();
  if (s.grid.boundary == Boundary::periodic) {
    for (const Particle& p : ensemble.particles) {
      if (p.x < s.grid.x_min() || p.x >= s.grid.x_max()) {
        throw ConfigError("periodic DSMC: initial particle outside the domain");
      }
    }
  }
  s.ensemble = std::move(ensemble);
  s.epsilon = config.epsilon;
  s.model = RestitutionModel::from_config(config);
  s.rng_root = config.seed;
  s.log_events = config.event_log;
  return s;
}

void transport_step(DsmcState& state, double dt) {
  auto& ps = state.ensemble.particles;
  const std::int64_t n = static_cast<std::int64_t>(ps.size());
  if (state.grid.boundary == Boundary::periodic) {
    const double lo = state.grid.x_min();
    const double len = state.grid.length();
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      double x = ps[i].x + ps[i].v * dt - lo;
      x -= len * std::floor(x / len);
      if (x >= len) x -= len;  // floor rounding at the upper edge
      ps[i].x = lo + x;
    }
  } else {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) ps[i].x += ps[i].v * dt;
  }
  state.ensemble.time += dt;
}

namespace {

struct CellPlan {
  std::uint64_t n = 0;
  double v_max = 0.0;      // majorant of |v_i - v_j| in the cell
  double candidates = 0.0;  // expected candidate count
  double probability = 0.0;
};

struct CellResult {
  std::uint64_t candidates = 0;
  std::uint64_t events = 0;
  double dissipated = 0.0;
  std::vector<CollisionRecord> log;
};

}  // namespace

StepReport collision_step(DsmcState& state, double dt) {
  auto& ps = state.ensemble.particles;
  const Grid grid = state.grid.covering(ps);
  const CellBins bins = bin_particles(ps, grid);
  const std::size_t n_cells = grid.n_cells;
  const double scale = dt / (state.epsilon * grid.dx);

  std::vector<CellPlan> plan(n_cells);
  StepReport report;
  for (std::size_t c = 0; c < n_cells; ++c) {
    const auto members = bins.cell(c);
    if (members.size() < 2) continue;
    double lo = ps[members[0]].v;
    double hi = lo;
    std::vector<double> w(members.size());
    for (std::size_t k = 0; k < members.size(); ++k) {
      const double v = ps[members[k]].v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      w[k] = ps[members[k]].w;
    }
    CellPlan& cp = plan[c];
    cp.n = members.size();
    cp.v_max = hi - lo;
    const double w_mean = pairwise_sum(w) / static_cast<double>(cp.n);
    const double nd = static_cast<double>(cp.n);
    cp.probability = (nd - 1.0) * w_mean * cp.v_max * scale;
    cp.candidates = 0.5 * nd * cp.probability;
    report.max_collision_probability = std::max(report.max_collision_probability, cp.probability);
  }
  if (report.max_collision_probability > 1.0) {
    throw TimestepError("DSMC step " + std::to_string(state.step_index) + ": collision probability " +
                        std::to_string(report.max_collision_probability) + " exceeds 1; reduce dt");
  }

  const std::uint64_t key = derive_key(state.rng_root, StreamPurpose::collisions);
  const RestitutionModel model = state.model;
  const bool log = state.log_events;
  std::vector<CellResult> results(n_cells);

#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t ci = 0; ci < static_cast<std::int64_t>(n_cells); ++ci) {
    const CellPlan& cp = plan[ci];
    if (cp.n < 2 || !(cp.v_max > 0.0)) continue;
    const auto members = bins.cell(static_cast<std::size_t>(ci));
    const std::int64_t absolute = grid.first_cell + ci;
    PhiloxStream rng(key, state.step_index, static_cast<std::uint32_t>(absolute));

    const double whole = std::floor(cp.candidates);
    const auto n_cand = static_cast<std::uint64_t>(whole) + (rng.uniform() < cp.candidates - whole ? 1u : 0u);
    CellResult& out = results[ci];
    out.candidates = n_cand;
    std::vector<double> drops;
    for (std::uint64_t k = 0; k < n_cand; ++k) {
      const std::uint64_t a = rng.below(cp.n);
      std::uint64_t b = rng.below(cp.n - 1);
      if (b >= a) ++b;
      Particle& pi = ps[members[a]];
      Particle& pj = ps[members[b]];
      const double g = std::abs(pi.v - pj.v);
      if (!(rng.uniform() * cp.v_max < g)) continue;
      const double alpha = restitution(model, g);
      const PostCollision post = collide(pi.v, pj.v, alpha);
      if (log) out.log.push_back({pi.v, pj.v, post.v, post.v_star, pi.w});
      drops.push_back(0.25 * pi.w * (1.0 - alpha * alpha) * g * g);
      pi.v = post.v;
      pj.v = post.v_star;
    }
    out.events = drops.size();
    out.dissipated = pairwise_sum(drops);
  }

  std::vector<double> dissipated(n_cells);
  for (std::size_t c = 0; c < n_cells; ++c) {
    report.n_candidates += results[c].candidates;
    report.n_collision_events += results[c].events;
    dissipated[c] = results[c].dissipated;
    if (log) report.events.insert(report.events.end(), results[c].log.begin(), results[c].log.end());
  }
  report.dissipated_energy = pairwise_sum(dissipated);
  ++state.step_index;
  return report;
}

std::uint64_t step_count(const SimConfig& config) {
  const double ratio = config.t_end / config.dt;
  const auto n = static_cast<std::uint64_t>(std::llround(ratio));
  // tolerate t_end/dt being an integer up to rounding; otherwise add a short final step
  if (std::abs(ratio - static_cast<double>(n)) <= 1e-9 * std::max(1.0, ratio)) return n;
  return static_cast<std::uint64_t>(std::ceil(ratio));
}

std::vector<std::uint64_t> output_steps(const SimConfig& config) {
  const std::uint64_t n = step_count(config);
  const double every = config.output_every > 0.0 ? config.output_every : config.t_end / 20.0;
  const auto stride = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(every / config.dt)));
  std::vector<std::uint64_t> out;
  for (std::uint64_t s = 0; s < n; s += stride) out.push_back(s);
  out.push_back(n);
  return out;
}

DsmcRun run_dsmc(const SimConfig& config, const DsmcRunOptions& options) {
  config.validate();
  return run_dsmc(config, sample_initial(config.init, config.n_particles, config.seed), options);
}

DsmcRun run_dsmc(const SimConfig& config, ParticleEnsemble initial, const DsmcRunOptions& options) {
  DsmcRun run;
  run.final_state = DsmcState::make(config, std::move(initial));
  DsmcState& state = run.final_state;
  const double t0 = state.ensemble.time;
  const std::uint64_t n_steps = step_count(config);
  const std::vector<std::uint64_t> outputs = output_steps(config);

  auto record = [&](StepReport interval) {
    run.output_times.push_back(state.ensemble.time);
    run.fields.push_back(deposit_fields(state.ensemble, state.grid));
    if (options.keep_snapshots) run.snapshots.push_back(state.ensemble);
    interval.events.clear();
    run.reports.push_back(std::move(interval));
  };

  record(StepReport{});
  std::size_t next_output = 1;
  StepReport interval;
  for (std::uint64_t step = 0; step < n_steps; ++step) {
    const double t_prev = std::min(config.t_end, static_cast<double>(step) * config.dt);
    const double t_next = std::min(config.t_end, static_cast<double>(step + 1) * config.dt);
    const double dt = t_next - t_prev;
    transport_step(state, dt);
    state.ensemble.time = t0 + t_next;
    StepReport r = collision_step(state, dt);
    if (options.on_step) options.on_step(state, r);
    r.events.clear();
    interval.accumulate(r);
    if (next_output < outputs.size() && outputs[next_output] == step + 1) {
      record(std::move(interval));
      interval = StepReport{};
      ++next_output;
    }
  }
  return run;
}

double evaluate(TestFunction psi, double v) {
  switch (psi) {
    case TestFunction::one: return 1.0;
    case TestFunction::v: return v;
    case TestFunction::v2: return v * v;
    case TestFunction::abs_v3: return std::abs(v) * v * v;
    case TestFunction::v4: return v * v * v * v;
  }
  return 0.0;
}

double weak_form_audit(std::span<const CollisionRecord> events, TestFunction psi) {
  std::vector<double> terms(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    const CollisionRecord& e = events[i];
    terms[i] = 0.5 * e.w *
               ((evaluate(psi, e.v_prime) + evaluate(psi, e.v_star_prime)) - (evaluate(psi, e.v) + evaluate(psi, e.v_star)));
  }
  return pairwise_sum(terms);
}

namespace {

constexpr char kEventMagic[8] = {'G', 'R', 'A', 'N', 'E', 'V', 'T', '1'};

void put_le(std::ostream& out, double d) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(d);
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(buf, 8);
}

bool get_le(std::istream& in, double& d) {
  unsigned char buf[8];
  if (!in.read(reinterpret_cast<char*>(buf), 8)) return false;
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  d = std::bit_cast<double>(bits);
  return true;
}

}  // namespace

void write_event_log_header(std::ostream& out) { out.write(kEventMagic, sizeof kEventMagic); }

void append_event_log(std::ostream& out, std::span<const CollisionRecord> events) {
  for (const CollisionRecord& e : events) {
    put_le(out, e.v);
    put_le(out, e.v_star);
    put_le(out, e.v_prime);
    put_le(out, e.v_star_prime);
    put_le(out, e.w);
  }
}

std::vector<CollisionRecord> read_event_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open event log '" + path + "'");
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kEventMagic, 8) != 0) {
    throw ConfigError(path + ": not an event log");
  }
  std::vector<CollisionRecord> out;
  CollisionRecord r{};
  while (get_le(in, r.v)) {
    if (!get_le(in, r.v_star) || !get_le(in, r.v_prime) || !get_le(in, r.v_star_prime) || !get_le(in, r.w)) {
      throw ConfigError(path + ": truncated event record");
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace granular
