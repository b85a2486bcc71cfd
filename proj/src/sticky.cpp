#include "granular/sticky.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <queue>

#include "granular/field_io.hpp"

namespace granular {

namespace {

template <class F>
double reduce_clusters(const std::vector<Cluster>& cs, F&& f) {
  std::vector<double> terms(cs.size());
  std::transform(cs.begin(), cs.end(), terms.begin(), f);
  return pairwise_sum(terms);
}

double position_scale(const ClusterState& s) {
  if (s.clusters.size() < 2) return 1.0;
  return std::max(1.0, s.clusters.back().x - s.clusters.front().x);
}

Cluster merge_group(std::span<const Cluster> group, double tol_abs) {
  std::vector<double> mass(group.size());
  std::vector<double> mom(group.size());
  std::vector<double> first(group.size());
  for (std::size_t k = 0; k < group.size(); ++k) {
    mass[k] = group[k].m;
    mom[k] = group[k].m * group[k].v;
    first[k] = group[k].m * group[k].x;
  }
  Cluster out;
  out.m = pairwise_sum(mass);
  out.v = pairwise_sum(mom) / out.m;
  out.x = pairwise_sum(first) / out.m;
  out.id = group.front().id;
  for (const Cluster& c : group) {
    out.id = std::min(out.id, c.id);
    if (std::abs(c.x - out.x) > tol_abs) {
      throw ConsistencyError("sticky merge: cluster " + std::to_string(c.id) + " is " +
                             std::to_string(std::abs(c.x - out.x)) + " away from the collision point");
    }
  }
  return out;
}

}  // namespace

double ClusterState::total_mass() const {
  return reduce_clusters(clusters, [](const Cluster& c) { return c.m; });
}

double ClusterState::momentum() const {
  return reduce_clusters(clusters, [](const Cluster& c) { return c.m * c.v; });
}

double ClusterState::kinetic_energy() const {
  return reduce_clusters(clusters, [](const Cluster& c) { return 0.5 * c.m * c.v * c.v; });
}

ClusterState advect(const ClusterState& state, double t) {
  ClusterState out = state;
  const double dt = t - state.time;
  for (Cluster& c : out.clusters) c.x += c.v * dt;
  out.time = t;
  return out;
}

std::optional<CollisionEvent> next_event(const ClusterState& state) {
  std::optional<CollisionEvent> best;
  for (std::size_t i = 0; i + 1 < state.clusters.size(); ++i) {
    const Cluster& a = state.clusters[i];
    const Cluster& b = state.clusters[i + 1];
    if (!(a.v > b.v)) continue;
    const double t = state.time + std::max(0.0, b.x - a.x) / (a.v - b.v);
    if (!best || t < best->t_event) best = CollisionEvent{t, i, i + 1};
  }
  return best;
}

ClusterState merge(const ClusterState& state, const CollisionEvent& event, const StickyTolerances& tol) {
  if (event.right_index != event.left_index + 1 || event.right_index >= state.clusters.size()) {
    throw ConsistencyError("sticky merge: event must name two adjacent clusters");
  }
  ClusterState moved = advect(state, event.t_event);
  const double tol_abs = tol.position * position_scale(moved);
  const auto& cs = moved.clusters;
  const double xa = cs[event.left_index].x;
  const double xb = cs[event.right_index].x;
  if (std::abs(xa - xb) > tol_abs) {
    throw ConsistencyError("sticky merge: clusters do not meet at t=" + std::to_string(event.t_event));
  }
  const double point = 0.5 * (xa + xb);
  std::size_t lo = event.left_index;
  std::size_t hi = event.right_index;
  while (lo > 0 && std::abs(cs[lo - 1].x - point) <= tol_abs) --lo;
  while (hi + 1 < cs.size() && std::abs(cs[hi + 1].x - point) <= tol_abs) ++hi;

  const Cluster merged = merge_group(std::span(cs).subspan(lo, hi - lo + 1), tol_abs);
  ClusterState out;
  out.time = moved.time;
  out.clusters.reserve(cs.size() - (hi - lo));
  out.clusters.insert(out.clusters.end(), cs.begin(), cs.begin() + static_cast<std::ptrdiff_t>(lo));
  out.clusters.push_back(merged);
  out.clusters.insert(out.clusters.end(), cs.begin() + static_cast<std::ptrdiff_t>(hi + 1), cs.end());
  return out;
}

namespace {

/// Linked-list cluster store for the event loop. Each live slot keeps its
/// position at its own reference time, so a merge touches only the slots
/// involved.
class StickyEngine {
 public:
  explicit StickyEngine(const ClusterState& initial) : now_(initial.time) {
    const std::size_t n = initial.clusters.size();
    slots_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Cluster& c = initial.clusters[i];
      slots_[i] = Slot{c.x, initial.time, c.v, c.m, c.id, 0, i == 0 ? kNone : i - 1, i + 1 == n ? kNone : i + 1, true};
      if (i > 0 && !(c.x > initial.clusters[i - 1].x)) {
        throw ConsistencyError("sticky: initial clusters must have strictly increasing positions");
      }
    }
    head_ = n ? 0 : kNone;
    scale_ = position_scale(initial);
    for (std::size_t i = 0; i + 1 < n; ++i) push_pair(i, i + 1);
  }

  double now() const { return now_; }

  /// Time of the earliest still-valid event, or +inf.
  double peek() {
    while (!queue_.empty() && !valid(queue_.top())) queue_.pop();
    return queue_.empty() ? std::numeric_limits<double>::infinity() : queue_.top().t;
  }

  /// Processes every valid event within tol.time of the earliest one.
  /// Returns the number of clusters absorbed.
  std::size_t step(const StickyTolerances& tol) {
    const double t0 = peek();
    std::vector<std::size_t> linked;  // left slots whose right link is colliding
    while (!queue_.empty()) {
      const Event e = queue_.top();
      if (!valid(e)) {
        queue_.pop();
        continue;
      }
      if (e.t > t0 + tol.time) break;
      queue_.pop();
      linked.push_back(e.left);
    }
    std::vector<char> links(slots_.size(), 0);
    for (auto s : linked) links[s] = 1;

    now_ = t0;
    const double tol_abs = tol.position * scale_;
    std::size_t absorbed = 0;
    std::vector<Cluster> group;
    std::vector<std::size_t> group_slots;
    std::vector<std::size_t> created;
    for (auto start : linked) {
      // only chain heads: no colliding link into them from the left
      const std::size_t p = slots_[start].prev;
      if (!slots_[start].alive || (p != kNone && links[p])) continue;
      group.clear();
      group_slots.clear();
      std::size_t s = start;
      while (true) {
        group.push_back(cluster_at(s, t0));
        group_slots.push_back(s);
        if (!links[s]) break;
        s = slots_[s].next;
      }
      const Cluster merged = merge_group(group, tol_abs);
      Slot& head = slots_[start];
      const std::size_t tail_next = slots_[group_slots.back()].next;
      for (std::size_t k = 1; k < group_slots.size(); ++k) {
        slots_[group_slots[k]].alive = false;
        ++slots_[group_slots[k]].stamp;
      }
      head.x_ref = merged.x;
      head.t_ref = t0;
      head.v = merged.v;
      head.m = merged.m;
      head.id = merged.id;
      ++head.stamp;
      head.next = tail_next;
      if (tail_next != kNone) slots_[tail_next].prev = start;
      absorbed += group_slots.size() - 1;
      created.push_back(start);
    }
    for (auto s : created) {
      if (slots_[s].prev != kNone) push_pair(slots_[s].prev, s);
      if (slots_[s].next != kNone) push_pair(s, slots_[s].next);
    }
    return absorbed;
  }

  ClusterState snapshot(double t) const {
    ClusterState out;
    out.time = t;
    for (std::size_t s = head_; s != kNone; s = slots_[s].next) out.clusters.push_back(cluster_at(s, t));
    return out;
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  struct Slot {
    double x_ref;
    double t_ref;
    double v;
    double m;
    std::uint64_t id;
    std::uint64_t stamp;
    std::size_t prev;
    std::size_t next;
    bool alive;
  };

  struct Event {
    double t;
    std::size_t left;
    std::size_t right;
    std::uint64_t stamp_left;
    std::uint64_t stamp_right;
    bool operator>(const Event& o) const { return t > o.t || (t == o.t && left > o.left); }
  };

  double position(std::size_t s, double t) const { return slots_[s].x_ref + slots_[s].v * (t - slots_[s].t_ref); }

  Cluster cluster_at(std::size_t s, double t) const {
    return Cluster{position(s, t), slots_[s].v, slots_[s].m, slots_[s].id};
  }

  bool valid(const Event& e) const {
    const Slot& a = slots_[e.left];
    const Slot& b = slots_[e.right];
    return a.alive && b.alive && a.stamp == e.stamp_left && b.stamp == e.stamp_right && a.next == e.right;
  }

  void push_pair(std::size_t a, std::size_t b) {
    const double closing = slots_[a].v - slots_[b].v;
    if (!(closing > 0.0)) return;
    const double gap = std::max(0.0, position(b, now_) - position(a, now_));
    queue_.push(Event{now_ + gap / closing, a, b, slots_[a].stamp, slots_[b].stamp});
  }

  std::vector<Slot> slots_;
  std::size_t head_ = kNone;
  double now_ = 0.0;
  double scale_ = 1.0;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
};

}  // namespace

StickyTrajectory run_sticky(const ClusterState& initial, double t_end, const StickyOptions& options) {
  if (t_end < initial.time) throw ConfigError("run_sticky: t_end precedes the initial time");
  StickyTrajectory traj;
  traj.has_all_events = options.record_events;
  StickyEngine engine(initial);
  traj.snapshots.push_back({engine.snapshot(initial.time), SnapshotKind::initial});

  std::vector<double> outputs;
  for (double t : options.output_times) {
    if (t > initial.time && t < t_end) outputs.push_back(t);
  }
  std::sort(outputs.begin(), outputs.end());
  std::size_t next_out = 0;

  while (true) {
    const double t_next = engine.peek();
    if (!(t_next <= t_end)) break;
    while (next_out < outputs.size() && outputs[next_out] < t_next) {
      traj.snapshots.push_back({engine.snapshot(outputs[next_out++]), SnapshotKind::output});
    }
    const std::size_t absorbed = engine.step(options.tolerances);
    traj.n_merges += absorbed;
    traj.merge_times.push_back(engine.now());
    if (options.record_events) traj.snapshots.push_back({engine.snapshot(engine.now()), SnapshotKind::event});
  }
  while (next_out < outputs.size()) {
    traj.snapshots.push_back({engine.snapshot(outputs[next_out++]), SnapshotKind::output});
  }
  if (t_end > initial.time) traj.snapshots.push_back({engine.snapshot(t_end), SnapshotKind::final});
  return traj;
}

ClusterState StickyTrajectory::state_at(double t) const {
  if (!has_all_events) throw ResolutionError("sticky trajectory was recorded without merge snapshots");
  const ClusterState* base = &snapshots.front().state;
  for (const auto& s : snapshots) {
    if (s.state.time <= t) base = &s.state;
  }
  return advect(*base, t);
}

ClusterState StickyTrajectory::state_before(double t) const {
  if (!has_all_events) throw ResolutionError("sticky trajectory was recorded without merge snapshots");
  const ClusterState* base = &snapshots.front().state;
  for (const auto& s : snapshots) {
    if (s.state.time < t) base = &s.state;
  }
  return advect(*base, t);
}

ParticleEnsemble to_ensemble(const ClusterState& state) {
  ParticleEnsemble e;
  e.time = state.time;
  e.particles.reserve(state.clusters.size());
  for (const Cluster& c : state.clusters) e.particles.push_back({c.x, c.v, c.m});
  return e;
}

ClusterState from_ensemble(const ParticleEnsemble& ensemble) {
  std::vector<std::size_t> idx(ensemble.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return ensemble.particles[a].x < ensemble.particles[b].x; });
  ClusterState s;
  s.time = ensemble.time;
  std::vector<Cluster> group;
  auto flush = [&] {
    if (group.empty()) return;
    s.clusters.push_back(group.size() == 1 ? group.front() : merge_group(group, 0.0));
    group.clear();
  };
  for (auto i : idx) {
    const Particle& p = ensemble.particles[i];
    if (!group.empty() && p.x != group.front().x) flush();
    group.push_back(Cluster{p.x, p.v, p.w, static_cast<std::uint64_t>(i)});
  }
  flush();
  return s;
}

ClusterState monokinetic_projection(const ParticleEnsemble& ensemble, const Grid& grid) {
  const Grid g = grid.covering(ensemble.particles);
  const CellBins bins = bin_particles(ensemble.particles, g);
  ClusterState s;
  s.time = ensemble.time;
  std::vector<double> mass;
  std::vector<double> mom;
  std::vector<double> first;
  for (std::size_t c = 0; c < g.n_cells; ++c) {
    const auto members = bins.cell(c);
    if (members.empty()) continue;
    mass.clear();
    mom.clear();
    first.clear();
    for (auto i : members) {
      const Particle& p = ensemble.particles[i];
      mass.push_back(p.w);
      mom.push_back(p.w * p.v);
      first.push_back(p.w * p.x);
    }
    const double m = pairwise_sum(mass);
    s.clusters.push_back(Cluster{pairwise_sum(first) / m, pairwise_sum(mom) / m, m, static_cast<std::uint64_t>(c)});
  }
  return s;
}

void write_trajectory_csv(std::ostream& out, const StickyTrajectory& trajectory) {
  out << "t,cluster_id,x,v,m\n";
  for (const auto& snap : trajectory.snapshots) {
    const std::string t = csv_number(snap.state.time);
    for (const Cluster& c : snap.state.clusters) {
      out << t << ',' << c.id << ',' << csv_number(c.x) << ',' << csv_number(c.v) << ',' << csv_number(c.m) << '\n';
    }
  }
}

void write_trajectory_csv(const std::string& path, const StickyTrajectory& trajectory) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  write_trajectory_csv(out, trajectory);
}

}  // namespace granular
