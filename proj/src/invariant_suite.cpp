#include "granular/invariant_suite.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "granular/collision.hpp"
#include "granular/diagnostics.hpp"
#include "granular/dsmc.hpp"
#include "granular/sticky.hpp"

namespace granular {

namespace {

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

CheckResult collision_identities(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> vel(-10.0, 10.0), unit(0.0, 1.0);
  double worst_p = 0.0, worst_e = 0.0, worst_convex = -1.0;
  for (int i = 0; i < 100000; ++i) {
    const double v = vel(rng), vs = vel(rng), a = unit(rng);
    const PostCollision post = collide(v, vs, a);
    const double scale = v * v + vs * vs;
    worst_p = std::max(worst_p, std::abs((post.v + post.v_star) - (v + vs)) / std::max(std::abs(v) + std::abs(vs), 1e-300));
    const double de = (post.v * post.v + post.v_star * post.v_star) - scale;
    worst_e = std::max(worst_e, std::abs(de - quadratic_defect(v, vs, a)) / std::max(scale, 1e-300));
    for (int p : {2, 3, 4}) {
      auto psi = [p](double x) { return std::pow(std::abs(x), p); };
      const double defect = psi(post.v) + psi(post.v_star) - psi(v) - psi(vs);
      worst_convex = std::max(worst_convex, defect / std::max(psi(v) + psi(vs), 1e-300));
    }
  }
  const bool ok = worst_p <= 1e-12 && worst_e <= 1e-12 && worst_convex <= 1e-12;
  return {"collision identities and convex dissipation", ok,
          fmt("momentum %.2e, ", worst_p) + fmt("energy %.2e, ", worst_e) + fmt("convex defect %.2e", worst_convex)};
}

ParticleEnsemble random_ensemble(std::mt19937_64& rng, std::size_t n, bool unit_mass) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ParticleEnsemble e;
  for (std::size_t i = 0; i < n; ++i) e.particles.push_back({u(rng), 4.0 * u(rng) - 2.0, 0.1 + u(rng)});
  if (unit_mass) {
    const double m = e.total_mass();
    for (Particle& p : e.particles) p.w /= m;
  }
  return e;
}

CheckResult dissipation_bound(std::mt19937_64& rng) {
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const ParticleEnsemble e = random_ensemble(rng, 2 + trial % 40, true);
    const double d = dissipation_D(e.particles);
    worst = std::min(worst, d - dissipation_lower_bound(e.particles));
    worst = std::min(worst, d - dissipation_lower_bound_jensen(e.particles));
  }
  return {"dissipation lower bound", worst >= -1e-10, fmt("min margin %.3e", worst)};
}

ClusterState random_clusters(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ParticleEnsemble e;
  for (std::size_t i = 0; i < n; ++i) e.particles.push_back({u(rng), 2.0 * u(rng) - 1.0, 1.0 / static_cast<double>(n)});
  return from_ensemble(e);
}

CheckResult sticky_invariants(std::mt19937_64& rng) {
  bool ok = true;
  double worst_oleinik = 0.0;
  double worst_example = -1e300;
  for (int trial = 0; trial < 20; ++trial) {
    const ClusterState init = random_clusters(rng, 20);
    StickyOptions opts;
    for (int i = 1; i < 20; ++i) opts.output_times.push_back(0.05 * i);
    const StickyTrajectory tr = run_sticky(init, 1.0, opts);
    ok = ok && tr.n_merges <= init.size() - 1;
    double e_prev = init.kinetic_energy();
    for (const auto& s : tr.snapshots) {
      const ClusterState& st = s.state;
      ok = ok && std::abs(st.total_mass() - init.total_mass()) <= 1e-12;
      ok = ok && std::abs(st.momentum() - init.momentum()) <= 1e-12;
      ok = ok && st.kinetic_energy() <= e_prev + 1e-14;
      e_prev = st.kinetic_energy();
      if (st.time > 0.01) {
        const ParticleEnsemble pe = to_ensemble(st);
        const double s_sup = oleinik_sup(pe);
        worst_oleinik = std::max(worst_oleinik, s_sup * st.time);
        double vmax = 0.0;
        for (const Particle& p : pe.particles) vmax = std::max(vmax, std::abs(p.v));
        for (int k : {1, 2, 3}) {
          const double l = L_functional(pe, 0.1, 0.01, k);
          worst_example = std::max(worst_example, l - vmax * vmax * std::pow(s_sup, k));
        }
      }
    }
  }
  ok = ok && worst_oleinik <= 1.0 + 1e-9 && worst_example <= 1e-9;
  return {"sticky conservation, Oleinik and L bounds", ok,
          fmt("max oleinik*t %.6f, ", worst_oleinik) + fmt("max L - bound %.3e", worst_example)};
}

CheckResult dsmc_conservation_and_replay() {
  SimConfig c;
  c.n_particles = 4000;
  c.n_cells = 20;
  c.epsilon = 0.05;
  c.alpha = 0.5;
  c.dt = 2e-3;
  c.t_end = 0.2;
  c.seed = 7;
  c.init.kind = InitKind::two_state_riemann;
  c.init.sigma_v = 0.1;
  const ParticleEnsemble init = sample_initial(c.init, c.n_particles, c.seed);
  const int max_threads = std::max(4, omp_get_max_threads());
  auto run_with = [&](int threads) {
    const int saved = omp_get_max_threads();
    omp_set_num_threads(threads);
    DsmcRunOptions o;
    o.keep_snapshots = false;
    DsmcRun r = run_dsmc(c, init, o);
    omp_set_num_threads(saved);
    return r;
  };
  const DsmcRun a = run_with(1);
  const DsmcRun b = run_with(max_threads);
  const auto& pa = a.final_state.ensemble.particles;
  const auto& pb = b.final_state.ensemble.particles;
  bool same = pa.size() == pb.size();
  for (std::size_t i = 0; same && i < pa.size(); ++i) {
    same = pa[i].x == pb[i].x && pa[i].v == pb[i].v && pa[i].w == pb[i].w;
  }
  const double dp = std::abs(a.final_state.ensemble.momentum() - init.momentum()) / init.velocity_moment(1.0);
  double dissipated = 0.0;
  std::uint64_t events = 0;
  for (const auto& r : a.reports) {
    dissipated += r.dissipated_energy;
    events += r.n_collision_events;
  }
  const double de = std::abs(init.kinetic_energy() - a.final_state.ensemble.kinetic_energy() - dissipated);
  const bool ok = same && dp <= 1e-12 && de <= 1e-10 && events > 0;
  return {"DSMC conservation and thread-count replay", ok,
          std::string(same ? "bitwise identical" : "DIFFERENT") + " at 1 and " + std::to_string(max_threads) +
              " threads, " + fmt("momentum drift %.2e, ", dp) + fmt("energy ledger error %.2e", de)};
}

CheckResult lambda_fast_path(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ParticleEnsemble e;
  for (int i = 0; i < 3000; ++i) e.particles.push_back({0.5 + 0.002 * u(rng), 2.0 * u(rng) - 1.0, 1.0 / 3000});
  for (int i = 0; i < 1000; ++i) e.particles.push_back({u(rng), 2.0 * u(rng) - 1.0, 1.0 / 3000});
  double worst = 0.0;
  for (int k : {0, 2, 4}) {
    const double fast = lambda_trace(e, k, 0.01);
    const double direct = lambda_trace_direct(e, k, 0.01);
    worst = std::max(worst, std::abs(fast - direct) / std::max(direct, 1e-300));
  }
  return {"trace functional fast path", worst <= 1e-9, fmt("relative error %.2e", worst)};
}

CheckResult metric_examples() {
  auto atoms = [](std::vector<std::pair<double, double>> xm) {
    MassDistribution d;
    for (auto [x, m] : xm) d.atoms.push_back({x, m});
    return d;
  };
  const double a = wasserstein1(atoms({{0, 1}}), atoms({{1, 1}})).distance;
  const double b = wasserstein1(atoms({{0, 1}}), atoms({{-1, 0.5}, {1, 0.5}})).distance;
  const double c = wasserstein1(atoms({{0.3, 2}}), atoms({{0.3, 2}})).distance;
  const bool ok = std::abs(a - 1) <= 1e-15 && std::abs(b - 1) <= 1e-15 && c == 0.0;
  return {"Wasserstein-1 reference values", ok, fmt("%.3g, ", a) + fmt("%.3g, ", b) + fmt("%.3g", c)};
}

CheckResult haff_synthetic() {
  std::vector<double> t, th;
  for (int i = 0; i <= 50; ++i) {
    t.push_back(i * 2.0);
    th.push_back(3.0 / std::pow(1.0 + i * 2.0, 2.0));
  }
  const HaffFit f = haff_fit(t, th, 0.0, 100.0);
  return {"power-law fit on synthetic decay", std::abs(f.slope + 2.0) <= 1e-6, fmt("slope %.9f", f.slope)};
}

template <class F>
CheckResult guarded(const char* name, F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    return {name, false, std::string("exception: ") + e.what()};
  }
}

}  // namespace

std::vector<CheckResult> run_invariant_suite(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<CheckResult> out;
  out.push_back(guarded("collision identities", [&] { return collision_identities(rng); }));
  out.push_back(guarded("dissipation lower bound", [&] { return dissipation_bound(rng); }));
  out.push_back(guarded("sticky invariants", [&] { return sticky_invariants(rng); }));
  out.push_back(guarded("DSMC replay", [&] { return dsmc_conservation_and_replay(); }));
  out.push_back(guarded("trace fast path", [&] { return lambda_fast_path(rng); }));
  out.push_back(guarded("Wasserstein-1", [&] { return metric_examples(); }));
  out.push_back(guarded("power-law fit", [&] { return haff_synthetic(); }));
  return out;
}

}  // namespace granular
