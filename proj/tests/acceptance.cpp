// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only when
// every criterion passes. `acceptance 4 7` runs a subset.

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "granular/collision.hpp"
#include "granular/diagnostics.hpp"
#include "granular/dsmc.hpp"
#include "granular/harness.hpp"
#include "granular/sticky.hpp"
#include "oracles.hpp"

using namespace granular;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- criteria 1, 2: collision identities and convex dissipation ----

struct CollisionSamples {
  double momentum = 0.0;
  double energy = 0.0;
  double convex = -1.0;
};

CollisionSamples collision_samples() {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> vel(-10.0, 10.0), unit(0.0, 1.0);
  CollisionSamples s;
  for (int i = 0; i < 1000000; ++i) {
    const double v = vel(rng), vs = vel(rng), alpha = unit(rng);
    const PostCollision p = collide(v, vs, alpha);
    const double g = v - vs;
    const double expected = -0.5 * (1.0 - alpha * alpha) * g * g;
    const double before = v * v + vs * vs;
    const double change = (p.v * p.v + p.v_star * p.v_star) - before;
    s.momentum = std::max(s.momentum, std::abs((p.v + p.v_star) - (v + vs)) / (std::abs(v) + std::abs(vs)));
    s.energy = std::max(s.energy, std::abs(change - expected) / before);
    const double psi_v[3] = {v * v, std::pow(std::abs(v), 3), std::pow(v, 4)};
    const double psi_s[3] = {vs * vs, std::pow(std::abs(vs), 3), std::pow(vs, 4)};
    const double psi_p[3] = {p.v * p.v, std::pow(std::abs(p.v), 3), std::pow(p.v, 4)};
    const double psi_q[3] = {p.v_star * p.v_star, std::pow(std::abs(p.v_star), 3), std::pow(p.v_star, 4)};
    for (int k = 0; k < 3; ++k) {
      const double defect = (psi_p[k] + psi_q[k]) - (psi_v[k] + psi_s[k]);
      s.convex = std::max(s.convex, defect / (psi_v[k] + psi_s[k]));
    }
  }
  return s;
}

Outcome criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  const CollisionSamples s = collision_samples();
  const double secs = seconds_since(t0);
  return {s.momentum <= 1e-12 && s.energy <= 1e-12 && secs < 1.0,
          fmt("10^6 collisions: momentum rel err %.2e, energy-change rel err %.2e (limit 1e-12), %.2f s (limit 1 s)",
              s.momentum, s.energy, secs)};
}

Outcome criterion_2() {
  const CollisionSamples s = collision_samples();
  return {s.convex <= 1e-12, fmt("max relative defect over v^2, |v|^3, v^4: %.2e (limit 1e-12)", s.convex)};
}

// ---- criterion 3: D >= rho^{5/2} theta^{3/2} ----

Outcome criterion_3() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> size(2, 100);
  double worst = 1e300;
  for (int trial = 0; trial < 10000; ++trial) {
    const int n = size(rng);
    std::vector<Particle> ps(static_cast<std::size_t>(n));
    double mass = 0.0;
    for (Particle& p : ps) {
      p = {u(rng), 4.0 * u(rng) - 2.0, 0.05 + u(rng)};
      mass += p.w;
    }
    double rho = 0.0, mom = 0.0;
    for (Particle& p : ps) {
      p.w /= mass;
      rho += p.w;
      mom += p.w * p.v;
    }
    const double mean = mom / rho;
    double theta = 0.0;
    for (const Particle& p : ps) theta += p.w * (p.v - mean) * (p.v - mean);
    worst = std::min(worst, dissipation_D(ps) - std::pow(rho, 2.5) * std::pow(theta, 1.5));
  }
  const double secs = seconds_since(t0);
  return {worst >= -1e-10 && secs < 5.0,
          fmt("10^4 unit-mass ensembles, 2 <= N <= 100: min margin %.3e (limit -1e-10), %.2f s (limit 5 s)", worst, secs)};
}

// ---- criterion 4: event-driven vs small-step sticking ----

Outcome criterion_4() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(4);
  double worst = 0.0;
  int mismatched = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const ClusterState init = oracle::random_clusters(rng, 10);
    std::vector<oracle::Body> bodies;
    for (const Cluster& c : init.clusters) bodies.push_back({c.x, c.v, c.m});
    const auto ref = oracle::sticky_small_step(bodies, 1.0, 1e-5);
    const ClusterState fin = run_sticky(init, 1.0).final_state();
    if (fin.size() != ref.size()) {
      ++mismatched;
      continue;
    }
    for (std::size_t i = 0; i < ref.size(); ++i) {
      worst = std::max({worst, std::abs(fin.clusters[i].x - ref[i].x), std::abs(fin.clusters[i].v - ref[i].v)});
    }
  }
  const double secs = seconds_since(t0);
  return {mismatched == 0 && worst <= 1e-6 && secs < 60.0,
          fmt("100 instances: %d cluster-count mismatches, max |dx|,|dv| %.2e (limit 1e-6), %.1f s (limit 60 s)",
              mismatched, worst, secs)};
}

// ---- criteria 5-7: 50 random 20-particle sticky instances ----

std::vector<StickyTrajectory> sticky_instances() {
  std::mt19937_64 rng(5);
  std::vector<StickyTrajectory> out;
  StickyOptions o;
  for (int i = 1; i < 100; ++i) o.output_times.push_back(0.01 * i);
  for (int trial = 0; trial < 50; ++trial) out.push_back(run_sticky(oracle::random_clusters(rng, 20), 1.0, o));
  return out;
}

Outcome criterion_5(const std::vector<StickyTrajectory>& runs) {
  double worst = 0.0;
  std::size_t checked = 0;
  for (const auto& tr : runs) {
    for (const auto& snap : tr.snapshots) {
      if (!(snap.state.time > 0.01)) continue;
      worst = std::max(worst, oracle::oleinik(to_ensemble(snap.state).particles) * snap.state.time);
      ++checked;
    }
  }
  return {worst <= 1.0 + 1e-9, fmt("%zu snapshots: max oleinik_sup * t = %.12f (limit 1 + 1e-9)", checked, worst)};
}

Outcome criterion_6(const std::vector<StickyTrajectory>& runs) {
  double worst = -1e300;
  std::size_t checked = 0;
  for (const auto& tr : runs) {
    for (const auto& snap : tr.snapshots) {
      const ParticleEnsemble e = to_ensemble(snap.state);
      double vmax = 0.0;
      for (const Particle& p : e.particles) vmax = std::max(vmax, std::abs(p.v));
      const double s = oracle::oleinik(e.particles);
      for (int k : {1, 2, 3}) {
        for (double eta : {1.0, 0.1}) {
          for (double mu : {0.1, 0.01}) {
            worst = std::max(worst, L_functional(e, eta, mu, k) - vmax * vmax * std::pow(s, k));
            ++checked;
          }
        }
      }
    }
  }
  return {worst <= 1e-9, fmt("%zu evaluations: max L - bound = %.3e (limit 1e-9)", checked, worst)};
}

Outcome criterion_7(const std::vector<StickyTrajectory>& runs) {
  const auto t0 = std::chrono::steady_clock::now();
  FunctionalParams p;
  p.eta = 0.1;
  p.mu = 0.01;
  p.delta = 0.01;
  const std::pair<double, double> windows[] = {{0.0, 1.0}, {0.0, 0.5}, {0.5, 1.0}, {0.25, 0.75}, {0.9, 1.0}};
  int failures[4] = {0, 0, 0, 0};
  int corrected_failures = 0;
  double worst_excess = -1e300, worst_corrected = -1e300, max_lambda = 0.0;
  std::size_t checked = 0;
  for (const auto& tr : runs) {
    for (int k : {1, 2, 3}) {
      p.k = k;
      for (auto [s, t] : windows) {
        const DissipationInequality d = dissipation_inequality(tr, p, s, t);
        const double allowed = 1e-6 + d.quadrature_tolerance;
        const double excess = d.residual_stated() - allowed;
        const double corrected = d.residual_corrected() - allowed;
        worst_excess = std::max(worst_excess, excess);
        worst_corrected = std::max(worst_corrected, corrected);
        max_lambda = std::max(max_lambda, d.lambda_integral);
        if (excess > 0.0) ++failures[k];
        if (corrected > 0.0) ++corrected_failures;
        ++checked;
      }
    }
  }
  const double secs = seconds_since(t0);
  const int total = failures[1] + failures[2] + failures[3];
  return {total == 0 && secs < 120.0,
          fmt("%zu window checks (k=1,2,3 x 5 windows x 50 runs): coefficient-k form violated in %d/%d/%d, worst "
              "excess %.3e; coefficient max(k-1,1) form violated in %d, worst %.3e; max int Lambda %.1e; %.1f s "
              "(limit 120 s)",
              checked, failures[1], failures[2], failures[3], worst_excess, corrected_failures, worst_corrected,
              max_lambda, secs)};
}

// ---- criterion 8: Haff slope ----

Outcome criterion_8() {
  const auto t0 = std::chrono::steady_clock::now();
  SimConfig c;
  c.n_particles = 50000;
  c.n_cells = 10;
  c.boundary = Boundary::periodic;
  c.alpha = 0.9;
  c.epsilon = 1.0;
  c.dt = 0.05;
  c.t_end = 2000.0;
  c.output_every = 10.0;
  c.init.kind = InitKind::double_peak;
  c.init.sigma_v = 0.0;
  std::vector<double> slopes;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    c.seed = seed;
    DsmcRunOptions o;
    o.keep_snapshots = false;
    const DsmcRun run = run_dsmc(c, o);
    std::vector<double> theta;
    for (const HydroField& f : run.fields) theta.push_back(f.total_temperature());
    const double start = decay_window_start(run.output_times, theta, 10.0);
    const HaffFit fit = haff_fit(run.output_times, theta, start, c.t_end);
    slopes.push_back(fit.slope);
    per_seed += fmt(" %.3f", fit.slope);
  }
  const double m = median(slopes);
  const double secs = seconds_since(t0);
  return {std::abs(m + 2.0) <= 0.3 && secs < 300.0,
          fmt("N=5e4, alpha=0.9: median slope %.3f (target -2 +- 0.3), per seed%s; %.0f s (limit 300 s)", m,
              per_seed.c_str(), secs)};
}

// ---- criteria 9, 10: epsilon sweep ----

SweepSpec sweep_spec() {
  SweepSpec s;
  SimConfig& c = s.base;
  c.n_particles = 50000;
  c.n_cells = 100;
  c.boundary = Boundary::free;
  c.alpha = 0.5;
  c.t_end = 1.0;
  c.dt = 4e-5;
  c.output_every = 0.05;
  c.init.kind = InitKind::two_state_riemann;
  c.init.u_left = 1.0;
  c.init.u_right = -1.0;
  c.init.sigma_v = 0.05;
  c.functional.k_list = {2};
  s.epsilons = {1.0, 0.1, 0.01};
  s.seeds = {1, 2, 3, 4, 5};
  s.lambda_k = 2;
  s.lambda_delta = 0.0;
  return s;
}

struct SweepResult {
  SweepReport report;
  double seconds = 0.0;
};

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] < v[i - 1])) return false;
  }
  return true;
}

Outcome criterion_9(const SweepResult& r) {
  std::vector<double> mono, w1;
  std::string text;
  for (const SweepSummary& s : r.report.summaries) {
    mono.push_back(s.median_monokineticity);
    w1.push_back(s.median_w1);
    text += fmt(" eps=%g: %.3e / %.3e;", s.epsilon, s.median_monokineticity, s.median_w1);
  }
  const bool ok = strictly_decreasing(mono) && strictly_decreasing(w1) && r.seconds < 900.0;
  return {ok, fmt("median monokineticity / W1 to sticky:%s %.0f s (limit 900 s)", text.c_str(), r.seconds)};
}

Outcome criterion_10(const SweepResult& r) {
  std::vector<double> lam;
  std::string text;
  for (const SweepSummary& s : r.report.summaries) {
    lam.push_back(s.median_lambda_integral);
    text += fmt(" eps=%g: %.4e;", s.epsilon, s.median_lambda_integral);
  }
  return {strictly_decreasing(lam), fmt("median time-integrated Lambda (k=2, delta=dx):%s", text.c_str())};
}

// ---- criterion 11: determinism across thread counts ----

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome criterion_11() {
  const fs::path root = fs::temp_directory_path() / "granular_acceptance_determinism";
  fs::remove_all(root);
  const int many = std::max(4, omp_get_num_procs());
  SimConfig c;
  c.n_particles = 20000;
  c.n_cells = 50;
  c.epsilon = 0.05;
  c.dt = 2e-4;
  c.t_end = 0.2;
  c.event_log = true;
  c.init.sigma_v = 0.1;
  c.functional.k_list = {1, 2};
  SweepSpec sweep = sweep_spec();
  sweep.base.n_particles = 5000;
  sweep.base.t_end = 0.2;
  sweep.base.dt = 2e-4;
  sweep.epsilons = {1.0, 0.1};
  sweep.seeds = {7, 8};

  std::vector<std::string> compared;
  bool same = true;
  auto run_all = [&](int threads, const fs::path& dir) {
    const int saved = omp_get_max_threads();
    omp_set_num_threads(threads);
    RunOptions o;
    o.quiet = true;
    o.out_dir = (dir / "dsmc").string();
    std::vector<std::string> files;
    for (const auto& f : run_dsmc_to_disk(c, o).files) files.push_back("dsmc/" + f);
    o.out_dir = (dir / "sticky").string();
    for (const auto& f : run_sticky_to_disk(c, o).files) files.push_back("sticky/" + f);
    o.out_dir = (dir / "sweep").string();
    for (const auto& f : run_sweep(sweep, o).files) files.push_back("sweep/" + f);
    files.push_back("sweep/manifest.json");
    omp_set_num_threads(saved);
    return files;
  };
  const auto files = run_all(1, root / "one");
  run_all(many, root / "many");
  std::size_t bytes = 0;
  for (const auto& f : files) {
    const std::string a = slurp(root / "one" / f), b = slurp(root / "many" / f);
    bytes += a.size();
    if (a != b || a.empty()) {
      same = false;
      compared.push_back(f);
    }
  }
  fs::remove_all(root);
  return {same, fmt("%zu files (%zu bytes) from DSMC, sticky and sweep runs at 1 and %d threads: %s", files.size(),
                    bytes, many, same ? "bitwise identical" : ("differ: " + compared.front()).c_str())};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  auto wanted = [&](int n) { return only.empty() || only.count(n) > 0; };

  int passed = 0, run = 0;
  auto report = [&](int n, const char* name, const std::function<Outcome()>& f) {
    if (!wanted(n)) return;
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    ++run;
    passed += o.passed ? 1 : 0;
    std::printf("criterion %2d  %s  %s: %s\n", n, o.passed ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "collision identities", criterion_1);
  report(2, "convex dissipation", criterion_2);
  report(3, "dissipation lower bound", criterion_3);
  report(4, "sticky oracle equivalence", criterion_4);
  std::vector<StickyTrajectory> runs;
  if (wanted(5) || wanted(6) || wanted(7)) runs = sticky_instances();
  report(5, "discrete Oleinik bound", [&] { return criterion_5(runs); });
  report(6, "sticky L bound", [&] { return criterion_6(runs); });
  report(7, "time-integrated dissipation inequality", [&] { return criterion_7(runs); });
  report(8, "Haff cooling slope", criterion_8);
  SweepResult sweep;
  if (wanted(9) || wanted(10)) {
    const auto t0 = std::chrono::steady_clock::now();
    RunOptions o;
    o.quiet = true;
    try {
      sweep.report = run_sweep(sweep_spec(), o);
    } catch (const std::exception& e) {
      std::printf("sweep failed: %s\n", e.what());
    }
    sweep.seconds = seconds_since(t0);
  }
  report(9, "hydrodynamic limit trend", [&] { return criterion_9(sweep); });
  report(10, "trace vanishing trend", [&] { return criterion_10(sweep); });
  report(11, "determinism", criterion_11);

  std::printf("%d/%d criteria passed\n", passed, run);
  return passed == run ? 0 : 1;
}
