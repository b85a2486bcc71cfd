#include "granular/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>

#include "granular/field_io.hpp"

namespace granular {

double Mollifier::value(double x) const {
  if (!(x > 0.0)) return 0.0;
  if (x >= mu) return 1.0;
  const double s = x / mu;
  return s * s * (3.0 - 2.0 * s);
}

double Mollifier::derivative(double x) const {
  if (!(x > 0.0) || x >= mu) return 0.0;
  const double s = x / mu;
  return 6.0 * s * (1.0 - s) / mu;
}

namespace {

struct Sorted {
  std::vector<double> x, v, w;
};

Sorted sort_by_x(const ParticleEnsemble& e) {
  std::vector<std::size_t> idx(e.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return e.particles[a].x < e.particles[b].x; });
  Sorted s;
  s.x.reserve(idx.size());
  s.v.reserve(idx.size());
  s.w.reserve(idx.size());
  for (std::size_t i : idx) {
    s.x.push_back(e.particles[i].x);
    s.v.push_back(e.particles[i].v);
    s.w.push_back(e.particles[i].w);
  }
  return s;
}

double ipow(double b, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= b;
  return r;
}

// Kernel of L for one pair with gap > 0 and dv > 0 (without weights).
double l_kernel(double gap, double dv, double eta, const Mollifier& chi_mu, int k, bool log_region_only) {
  const double c = chi_mu.value(gap);
  if (c == 0.0) return 0.0;
  const double d = gap + eta;
  if (log_region_only && d >= 1.0) return 0.0;
  if (k == 0) return d < 1.0 ? dv * dv * (-std::log(d)) * c : 0.0;
  return ipow(dv, k + 2) / ipow(d, k) * c;
}

}  // namespace

double L_functional(const ParticleEnsemble& e, double eta, double mu, int k, bool log_region_only) {
  if (e.size() < 2) return 0.0;
  const Sorted s = sort_by_x(e);
  const Mollifier chi_mu{mu};
  const std::int64_t n = static_cast<std::int64_t>(s.x.size());
  std::vector<double> rows(static_cast<std::size_t>(n), 0.0);
  // for k = 0 (or the log region) nothing beyond gap 1 - eta contributes
  const bool bounded = k == 0 || log_region_only;
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t i = 1; i < n; ++i) {
    double acc = 0.0;
    for (std::int64_t j = i - 1; j >= 0; --j) {
      const double gap = s.x[i] - s.x[j];
      if (bounded && gap + eta >= 1.0) break;
      const double dv = s.v[i] - s.v[j];
      if (!(dv > 0.0) || !(gap > 0.0)) continue;
      acc += s.w[j] * l_kernel(gap, dv, eta, chi_mu, k, log_region_only);
    }
    rows[static_cast<std::size_t>(i)] = s.w[static_cast<std::size_t>(i)] * acc;
  }
  return pairwise_sum(rows);
}

double L_functional(const ParticleEnsemble& e, const FunctionalParams& p) { return L_functional(e, p.eta, p.mu, p.k); }

namespace {

// Every stride-th particle, weights rescaled to the full mass.
ParticleEnsemble strided_subsample(const ParticleEnsemble& e, std::size_t max_particles) {
  const std::size_t stride = (e.size() + max_particles - 1) / max_particles;
  ParticleEnsemble sub;
  sub.time = e.time;
  for (std::size_t i = 0; i < e.size(); i += stride) sub.particles.push_back(e.particles[i]);
  const double scale = e.total_mass() / sub.total_mass();
  for (Particle& q : sub.particles) q.w *= scale;
  return sub;
}

bool needs_subsample(const ParticleEnsemble& e, const FunctionalParams& p) {
  return p.l_max_particles != 0 && e.size() > p.l_max_particles;
}

}  // namespace

double L_functional_estimate(const ParticleEnsemble& e, const FunctionalParams& p) {
  if (!needs_subsample(e, p)) return L_functional(e, p);
  return L_functional(strided_subsample(e, p.l_max_particles), p);
}

double lambda_trace_direct(const ParticleEnsemble& e, int k, double delta) {
  if (!(delta > 0.0)) throw DomainError("lambda_trace: delta must be positive");
  if (e.size() < 2) return 0.0;
  const Sorted s = sort_by_x(e);
  const std::size_t n = s.x.size();
  std::vector<double> rows(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double gap = s.x[j] - s.x[i];
      if (gap >= delta) break;
      const double dv = s.v[i] - s.v[j];
      if (gap > 0.0 && dv > 0.0) acc += s.w[j] * ipow(dv, k);
    }
    rows[i] = s.w[i] * acc;
  }
  return pairwise_sum(rows) / delta;
}

namespace {

// Fenwick tree over velocity ranks holding sum w (v - v_ref)^m for m = 0..k.
class MomentTree {
 public:
  MomentTree(std::size_t n, int k) : n_(n), k_(k), data_((n + 1) * static_cast<std::size_t>(k + 1), 0.0L) {}

  void add(std::size_t rank, long double w, long double v, long double sign) {
    for (std::size_t i = rank + 1; i <= n_; i += i & (~i + 1)) {
      long double p = sign * w;
      for (int m = 0; m <= k_; ++m) {
        data_[i * (k_ + 1) + m] += p;
        p *= v;
      }
    }
  }

  // Moments over ranks [0, rank).
  void prefix(std::size_t rank, std::vector<long double>& out) const {
    std::fill(out.begin(), out.end(), 0.0L);
    for (std::size_t i = rank; i > 0; i -= i & (~i + 1)) {
      for (int m = 0; m <= k_; ++m) out[m] += data_[i * (k_ + 1) + m];
    }
  }

 private:
  std::size_t n_;
  int k_;
  std::vector<long double> data_;
};

constexpr std::size_t kDirectWindow = 256;

}  // namespace

double lambda_trace(const ParticleEnsemble& e, int k, double delta) {
  if (!(delta > 0.0)) throw DomainError("lambda_trace: delta must be positive");
  if (k < 0) throw DomainError("lambda_trace: k must be non-negative");
  const std::size_t n = e.size();
  if (n < 2) return 0.0;
  const Sorted s = sort_by_x(e);

  // velocity ranks, centred at the mean to limit cancellation
  std::vector<double> vel(s.v);
  std::sort(vel.begin(), vel.end());
  vel.erase(std::unique(vel.begin(), vel.end()), vel.end());
  std::vector<std::size_t> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    rank[i] = static_cast<std::size_t>(std::lower_bound(vel.begin(), vel.end(), s.v[i]) - vel.begin());
  }
  const long double v_ref = static_cast<long double>(pairwise_sum(s.v)) / static_cast<long double>(n);

  std::vector<long double> binom(static_cast<std::size_t>(k + 1), 1.0L);
  for (int m = 1; m <= k; ++m) binom[m] = binom[m - 1] * static_cast<long double>(k - m + 1) / m;

  MomentTree tree(vel.size(), k);
  std::vector<long double> mom(static_cast<std::size_t>(k + 1));
  std::vector<double> rows(n, 0.0);
  std::size_t lo = 0;  // window [lo, hi) holds j with x_i < x_j < x_i + delta
  std::size_t hi = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t new_lo = std::max(lo, i + 1);
    while (new_lo < n && s.x[new_lo] <= s.x[i]) ++new_lo;
    std::size_t new_hi = std::max(hi, new_lo);
    while (new_hi < n && s.x[new_hi] - s.x[i] < delta) ++new_hi;
    for (std::size_t j = lo; j < std::min(new_lo, hi); ++j) tree.add(rank[j], s.w[j], s.v[j] - v_ref, -1.0L);
    for (std::size_t j = std::max(hi, new_lo); j < new_hi; ++j) tree.add(rank[j], s.w[j], s.v[j] - v_ref, 1.0L);
    lo = new_lo;
    hi = new_hi;
    if (hi <= lo) continue;

    double acc = 0.0;
    if (hi - lo <= kDirectWindow) {
      for (std::size_t j = lo; j < hi; ++j) {
        const double dv = s.v[i] - s.v[j];
        if (dv > 0.0) acc += s.w[j] * ipow(dv, k);
      }
    } else {
      tree.prefix(rank[i], mom);
      const long double a = static_cast<long double>(s.v[i]) - v_ref;
      // sum_j w_j (a - b_j)^k = sum_m C(k,m) a^{k-m} (-1)^m M_m
      long double total = 0.0L;
      long double apow = 1.0L;
      std::vector<long double> apows(static_cast<std::size_t>(k + 1));
      for (int m = 0; m <= k; ++m) {
        apows[m] = apow;
        apow *= a;
      }
      for (int m = 0; m <= k; ++m) {
        const long double term = binom[m] * apows[k - m] * mom[m];
        total += (m % 2 == 0) ? term : -term;
      }
      acc = std::max(0.0, static_cast<double>(total));
    }
    rows[i] = s.w[i] * acc;
  }
  return pairwise_sum(rows) / delta;
}

LambdaReport lambda_report(const ParticleEnsemble& e, int k, double delta) {
  LambdaReport r;
  for (int i = 0; i < 3; ++i) {
    r.deltas[i] = std::ldexp(delta, -i);
    r.values[i] = lambda_trace(e, k, r.deltas[i]);
  }
  const double a = r.values[1];
  const double b = r.values[2];
  r.stable = (a == 0.0 && b == 0.0) || std::abs(a - b) <= 0.1 * std::max(std::abs(a), std::abs(b));
  return r;
}

double oleinik_sup(const ParticleEnsemble& e) {
  if (e.size() < 2) return 0.0;
  const Sorted s = sort_by_x(e);
  const std::size_t n = s.x.size();
  // group coincident positions; the sup over all pairs is attained between
  // consecutive groups (max v of the right group, min v of the left one)
  double best = 0.0;
  double prev_x = 0.0;
  double prev_min = 0.0;
  bool have_prev = false;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    double vmin = s.v[i];
    double vmax = s.v[i];
    while (j < n && s.x[j] == s.x[i]) {
      vmin = std::min(vmin, s.v[j]);
      vmax = std::max(vmax, s.v[j]);
      ++j;
    }
    if (have_prev) best = std::max(best, (vmax - prev_min) / (s.x[i] - prev_x));
    prev_x = s.x[i];
    prev_min = vmin;
    have_prev = true;
    i = j;
  }
  return best;
}

double oleinik_sup(const HydroField& f) {
  double best = 0.0;
  bool have_prev = false;
  double prev_x = 0.0;
  double prev_u = 0.0;
  for (std::size_t c = 0; c < f.rho.size(); ++c) {
    if (!(f.rho[c] > 0.0)) continue;
    const double x = f.grid.cell_center(c);
    if (have_prev) best = std::max(best, (f.u[c] - prev_u) / (x - prev_x));
    prev_x = x;
    prev_u = f.u[c];
    have_prev = true;
  }
  return best;
}

double monokineticity(const ParticleEnsemble& e, const Grid& grid) {
  return deposit_fields(e, grid).total_temperature();
}

double monokineticity(const HydroField& f) { return f.total_temperature(); }

double MassDistribution::total_mass() const {
  std::vector<double> m;
  m.reserve(atoms.size() + segments.size());
  for (const Atom& a : atoms) m.push_back(a.m);
  for (const Segment& s : segments) m.push_back(s.m);
  return pairwise_sum(m);
}

MassDistribution MassDistribution::from_field(const HydroField& f) {
  MassDistribution d;
  for (std::size_t c = 0; c < f.rho.size(); ++c) {
    if (!(f.rho[c] > 0.0)) continue;
    const double m = f.rho[c] * f.grid.dx;
    const double xc = f.grid.cell_center(c);
    if (f.grid.dx > 0.0) {
      d.segments.push_back({xc - 0.5 * f.grid.dx, xc + 0.5 * f.grid.dx, m});
    } else {
      d.atoms.push_back({xc, f.rho[c]});
    }
  }
  return d;
}

MassDistribution MassDistribution::from_clusters(const ClusterState& s) {
  MassDistribution d;
  for (const Cluster& c : s.clusters) d.atoms.push_back({c.x, c.m});
  return d;
}

MassDistribution MassDistribution::from_ensemble(const ParticleEnsemble& e) {
  MassDistribution d;
  for (const Particle& p : e.particles) d.atoms.push_back({p.x, p.w});
  return d;
}

namespace {

struct Cdf {
  std::vector<double> minus;  // F just left of each breakpoint
  std::vector<double> plus;   // F at the breakpoint, atoms included
};

Cdf cdf_on(const MassDistribution& d, const std::vector<double>& bp, double scale) {
  const std::size_t n = bp.size();
  auto index = [&](double x) {
    return static_cast<std::size_t>(std::lower_bound(bp.begin(), bp.end(), x) - bp.begin());
  };
  std::vector<double> atom(n, 0.0);
  std::vector<double> density_step(n + 1, 0.0);
  for (const auto& a : d.atoms) atom[index(a.x)] += a.m * scale;
  for (const auto& s : d.segments) {
    if (s.b > s.a) {
      const double rho = s.m * scale / (s.b - s.a);
      density_step[index(s.a)] += rho;
      density_step[index(s.b)] -= rho;
    } else {
      atom[index(s.a)] += s.m * scale;
    }
  }
  Cdf f;
  f.minus.assign(n, 0.0);
  f.plus.assign(n, 0.0);
  double density = 0.0;
  double F = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) F += density * (bp[i] - bp[i - 1]);
    f.minus[i] = F;
    F += atom[i];
    f.plus[i] = F;
    density += density_step[i];
  }
  return f;
}

}  // namespace

W1Result wasserstein1(const MassDistribution& a, const MassDistribution& b) {
  W1Result r;
  r.mass_a = a.total_mass();
  r.mass_b = b.total_mass();
  if (!(r.mass_a > 0.0) || !(r.mass_b > 0.0)) throw DomainError("wasserstein1: empty distribution");
  std::vector<double> bp;
  for (const MassDistribution* d : {&a, &b}) {
    for (const auto& x : d->atoms) bp.push_back(x.x);
    for (const auto& s : d->segments) {
      bp.push_back(s.a);
      bp.push_back(s.b);
    }
  }
  std::sort(bp.begin(), bp.end());
  bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
  const Cdf fa = cdf_on(a, bp, 1.0 / r.mass_a);
  const Cdf fb = cdf_on(b, bp, 1.0 / r.mass_b);
  std::vector<double> pieces;
  pieces.reserve(bp.size());
  for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
    const double h = bp[i + 1] - bp[i];
    const double d0 = fa.plus[i] - fb.plus[i];
    const double d1 = fa.minus[i + 1] - fb.minus[i + 1];
    const double a0 = std::abs(d0);
    const double a1 = std::abs(d1);
    if (d0 * d1 >= 0.0) {
      pieces.push_back(0.5 * h * (a0 + a1));
    } else {
      pieces.push_back(0.5 * h * (d0 * d0 + d1 * d1) / (a0 + a1));
    }
  }
  r.distance = pairwise_sum(pieces);
  return r;
}

HaffFit haff_fit(std::span<const double> t, std::span<const double> theta, double t_lo, double t_hi) {
  if (t.size() != theta.size()) throw DomainError("haff_fit: series lengths differ");
  std::vector<double> xs, ys;
  HaffFit fit;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_lo || t[i] > t_hi) continue;
    if (!(theta[i] > 0.0)) {
      throw DomainError("haff_fit: non-positive temperature " + std::to_string(theta[i]) + " at t=" +
                        std::to_string(t[i]));
    }
    if (xs.empty()) fit.t_first = t[i];
    fit.t_last = t[i];
    xs.push_back(std::log1p(t[i]));
    ys.push_back(std::log(theta[i]));
  }
  fit.n_samples = xs.size();
  if (xs.size() < 10) {
    throw ResolutionError("haff_fit: " + std::to_string(xs.size()) + " samples in the window, need at least 10");
  }
  const double n = static_cast<double>(xs.size());
  const double mx = pairwise_sum(xs) / n;
  const double my = pairwise_sum(ys) / n;
  std::vector<double> sxx(xs.size()), sxy(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx[i] = (xs[i] - mx) * (xs[i] - mx);
    sxy[i] = (xs[i] - mx) * (ys[i] - my);
  }
  const double Sxx = pairwise_sum(sxx);
  if (!(Sxx > 0.0)) throw ResolutionError("haff_fit: degenerate time window");
  fit.slope = pairwise_sum(sxy) / Sxx;
  fit.intercept = my - fit.slope * mx;
  std::vector<double> res(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - fit.intercept - fit.slope * xs[i];
    res[i] = r * r;
  }
  fit.slope_stderr = std::sqrt(pairwise_sum(res) / (n - 2.0) / Sxx);
  return fit;
}

double decay_window_start(std::span<const double> t, std::span<const double> theta, double factor) {
  if (t.empty() || t.size() != theta.size()) return std::numeric_limits<double>::infinity();
  const double target = theta[0] / factor;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (theta[i] <= target) return t[i];
  }
  return std::numeric_limits<double>::infinity();
}

double DissipationInequality::residual_stated() const {
  return static_cast<double>(k) * l_integral + l_prev_end - l_prev_start - lambda_coefficient * lambda_integral;
}

double DissipationInequality::residual_corrected() const {
  const double c = static_cast<double>(std::max(k - 1, 1));
  return c * l_integral_log_region + l_prev_end - l_prev_start - lambda_coefficient * lambda_integral;
}

namespace {

double lambda_coefficient(int k, double eta) {
  return k == 1 ? 2.0 * std::abs(std::log(eta)) : 2.0 / ipow(eta, k - 1);
}

struct Integrands {
  double l = 0.0;
  double l_log = 0.0;
  double lambda = 0.0;
};

Integrands integrands(const ParticleEnsemble& e, const FunctionalParams& p) {
  Integrands r;
  r.l = L_functional(e, p.eta, p.mu, p.k);
  r.l_log = p.k == 1 ? L_functional(e, p.eta, p.mu, 1, true) : r.l;
  r.lambda = lambda_trace(e, p.k + 2, p.delta);
  return r;
}

void check_params(const FunctionalParams& p, double s, double t) {
  p.validate();
  if (p.k < 1) throw DomainError("dissipation inequality needs k >= 1");
  if (!(s < t)) throw DomainError("dissipation inequality needs s < t");
}

}  // namespace

DissipationInequality dissipation_inequality(const StickyTrajectory& trajectory, const FunctionalParams& p, double s,
                                             double t, int panels) {
  check_params(p, s, t);
  if (panels < 1) throw DomainError("dissipation inequality: panels must be positive");
  if (!trajectory.has_all_events) throw ResolutionError("dissipation inequality needs every merge recorded");
  const double t0 = trajectory.snapshots.front().state.time;
  const double t1 = trajectory.final_state().time;
  if (s < t0 || t > t1) throw ResolutionError("dissipation inequality: [s, t] outside the trajectory");

  DissipationInequality r;
  r.k = p.k;
  r.s = s;
  r.t = t;
  r.lambda_coefficient = lambda_coefficient(p.k, p.eta);
  r.l_prev_start = L_functional(to_ensemble(trajectory.state_at(s)), p.eta, p.mu, p.k - 1);
  r.l_prev_end = L_functional(to_ensemble(trajectory.state_before(t)), p.eta, p.mu, p.k - 1);

  std::vector<double> cuts{s, t};
  for (const auto& snap : trajectory.snapshots) {
    if (snap.state.time > s && snap.state.time < t) cuts.push_back(snap.state.time);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const std::array<double, 3> levels{p.mu, p.delta, 1.0 - p.eta};
  std::vector<double> l_parts, l_log_parts, lam_parts, tol_parts;
  for (std::size_t seg = 0; seg + 1 < cuts.size(); ++seg) {
    const double a = cuts[seg];
    const double b = cuts[seg + 1];
    const ClusterState base = trajectory.state_at(a);
    // kinks and jumps of the integrands inside this free-flight segment
    std::vector<double> knots{a, b};
    const auto& cl = base.clusters;
    for (std::size_t i = 0; i < cl.size(); ++i) {
      for (std::size_t j = i + 1; j < cl.size(); ++j) {
        const double g0 = cl[j].x - cl[i].x;
        const double dv = cl[j].v - cl[i].v;
        if (dv == 0.0) continue;
        for (double level : levels) {
          const double tau = a + (level - g0) / dv;
          if (tau > a && tau < b) knots.push_back(tau);
        }
      }
    }
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

    for (std::size_t q = 0; q + 1 < knots.size(); ++q) {
      const double lo = knots[q];
      const double hi = knots[q + 1];
      if (!(hi > lo)) continue;
      const int n2 = 2 * panels;
      const double h = (hi - lo) / n2;
      std::vector<Integrands> f(static_cast<std::size_t>(n2 + 1));
      // end nodes are nudged inside the panel so they carry the one-sided
      // limits (a pair sitting exactly on a shell edge or at a merge point
      // would otherwise be counted with the neighbouring panel's value)
      const double nudge = 1e-9 * (hi - lo);
      for (int m = 0; m <= n2; ++m) {
        const double tau = m == 0 ? lo + nudge : (m == n2 ? hi - nudge : lo + h * m);
        f[m] = integrands(to_ensemble(advect(base, tau)), p);
      }
      auto trap = [&](auto get, int stride) {
        std::vector<double> v;
        for (int m = 0; m <= n2; m += stride) v.push_back(get(f[m]) * ((m == 0 || m == n2) ? 0.5 : 1.0));
        return pairwise_sum(v) * h * stride;
      };
      const auto gl = [](const Integrands& x) { return x.l; };
      const auto gll = [](const Integrands& x) { return x.l_log; };
      const auto glam = [](const Integrands& x) { return x.lambda; };
      const double l_fine = trap(gl, 1), l_coarse = trap(gl, 2);
      const double ll_fine = trap(gll, 1), ll_coarse = trap(gll, 2);
      const double lam_fine = trap(glam, 1), lam_coarse = trap(glam, 2);
      l_parts.push_back(l_fine);
      l_log_parts.push_back(ll_fine);
      lam_parts.push_back(lam_fine);
      tol_parts.push_back(static_cast<double>(p.k) * std::abs(l_fine - l_coarse) +
                          std::abs(ll_fine - ll_coarse) +
                          r.lambda_coefficient * std::abs(lam_fine - lam_coarse));
    }
  }
  r.l_integral = pairwise_sum(l_parts);
  r.l_integral_log_region = pairwise_sum(l_log_parts);
  r.lambda_integral = pairwise_sum(lam_parts);
  r.quadrature_tolerance = pairwise_sum(tol_parts);
  return r;
}

DissipationInequality dissipation_inequality(std::span<const ParticleEnsemble> snapshots, const FunctionalParams& p,
                                             double s, double t) {
  check_params(p, s, t);
  std::vector<const ParticleEnsemble*> in;
  for (const ParticleEnsemble& e : snapshots) {
    if (e.time >= s && e.time <= t) in.push_back(&e);
  }
  if (in.size() < 3) {
    throw ResolutionError("dissipation inequality: " + std::to_string(in.size()) +
                          " snapshots in [s, t], need at least 3");
  }
  DissipationInequality r;
  r.k = p.k;
  r.s = in.front()->time;
  r.t = in.back()->time;
  r.lambda_coefficient = lambda_coefficient(p.k, p.eta);
  FunctionalParams prev = p;
  prev.k = p.k - 1;
  r.l_prev_start = L_functional_estimate(*in.front(), prev);
  r.l_prev_end = L_functional_estimate(*in.back(), prev);

  std::vector<double> ts;
  std::vector<Integrands> f;
  for (const ParticleEnsemble* e : in) {
    ts.push_back(e->time);
    Integrands v;
    v.l = L_functional_estimate(*e, p);
    v.l_log = v.l;
    if (p.k == 1) {
      v.l_log = needs_subsample(*e, p) ? L_functional(strided_subsample(*e, p.l_max_particles), p.eta, p.mu, 1, true)
                                       : L_functional(*e, p.eta, p.mu, 1, true);
    }
    v.lambda = lambda_trace(*e, p.k + 2, p.delta);
    f.push_back(v);
  }
  auto trap = [&](auto get, std::size_t stride) {
    std::vector<double> parts;
    std::size_t i = 0;
    for (; i + stride < ts.size(); i += stride) {
      parts.push_back(0.5 * (ts[i + stride] - ts[i]) * (get(f[i]) + get(f[i + stride])));
    }
    if (i + 1 < ts.size()) {
      // odd tail for the coarse rule
      parts.push_back(0.5 * (ts.back() - ts[i]) * (get(f[i]) + get(f.back())));
    }
    return pairwise_sum(parts);
  };
  const auto gl = [](const Integrands& x) { return x.l; };
  const auto gll = [](const Integrands& x) { return x.l_log; };
  const auto glam = [](const Integrands& x) { return x.lambda; };
  r.l_integral = trap(gl, 1);
  r.l_integral_log_region = trap(gll, 1);
  r.lambda_integral = trap(glam, 1);
  r.quadrature_tolerance = static_cast<double>(p.k) * std::abs(r.l_integral - trap(gl, 2)) +
                           std::abs(r.l_integral_log_region - trap(gll, 2)) +
                           r.lambda_coefficient * std::abs(r.lambda_integral - trap(glam, 2));
  return r;
}

std::vector<double> mu_convergence(const ParticleEnsemble& e, const FunctionalParams& p, std::span<const double> mus) {
  std::vector<double> out;
  out.reserve(mus.size());
  for (double mu : mus) {
    FunctionalParams q = p;
    q.mu = mu;
    out.push_back(L_functional_estimate(e, q));
  }
  return out;
}

std::vector<DiagnosticsRow> diagnostics_rows(const ParticleEnsemble& e, const Grid& grid, const FunctionalParams& p) {
  std::vector<int> ks = p.k_list;
  if (ks.empty()) ks.push_back(p.k);
  const HydroField field = deposit_fields(e, grid);
  DiagnosticsRow base;
  base.t = e.time;
  base.eta = p.eta;
  base.mu = p.mu;
  base.oleinik_sup = oleinik_sup(e);
  base.monokineticity = field.total_temperature();
  base.energy = e.kinetic_energy();
  base.momentum = e.momentum();
  base.mass = e.total_mass();
  std::vector<DiagnosticsRow> rows;
  for (int k : ks) {
    DiagnosticsRow r = base;
    r.k = k;
    FunctionalParams q = p;
    q.k = k;
    r.L = L_functional_estimate(e, q);
    r.lambda = lambda_trace(e, k, p.delta);
    rows.push_back(r);
  }
  return rows;
}

void write_diagnostics_csv(std::ostream& out, std::span<const DiagnosticsRow> rows) {
  out << "t,k,eta,mu,L,lambda,oleinik_sup,monokineticity,energy,momentum,mass\n";
  for (const DiagnosticsRow& r : rows) {
    out << csv_number(r.t) << ',' << r.k << ',' << csv_number(r.eta) << ',' << csv_number(r.mu) << ','
        << csv_number(r.L) << ',' << csv_number(r.lambda) << ',' << csv_number(r.oleinik_sup) << ','
        << csv_number(r.monokineticity) << ',' << csv_number(r.energy) << ',' << csv_number(r.momentum) << ','
        << csv_number(r.mass) << '\n';
  }
}

void write_diagnostics_csv(const std::string& path, std::span<const DiagnosticsRow> rows) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  write_diagnostics_csv(out, rows);
  if (!out) throw ConfigError("write failed for '" + path + "'");
}

}  // namespace granular
