// Pair functionals and comparison metrics evaluated on particle ensembles,
// sticky trajectories and hydrodynamic fields.

#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "granular/core_types.hpp"
#include "granular/sticky.hpp"

namespace granular {

/// Smooth one-sided ramp: 0 for x <= 0, 1 for x >= mu, 3s^2 - 2s^3 (s = x/mu)
/// in between.
struct Mollifier {
  double mu = 0.01;

  double value(double x) const;
  double derivative(double x) const;
};

inline double chi(const Mollifier& m, double x) { return m.value(x); }

/// sum over pairs x_i > x_j of w_i w_j (v_i - v_j)_+^{k+2} chi_mu(x_i - x_j) / (x_i - x_j + eta)^k;
/// for k = 0 the weight is (v_i - v_j)_+^2 (log(x_i - x_j + eta))_-.
/// Exact O(N^2) evaluation.
double L_functional(const ParticleEnsemble& e, const FunctionalParams& p);

/// Same, with an explicit k. When log_region_only is set, pairs with
/// x_i - x_j + eta >= 1 are dropped (the region where the k = 0 weight is
/// nonzero).
double L_functional(const ParticleEnsemble& e, double eta, double mu, int k, bool log_region_only = false);

/// L_functional on a deterministic strided subsample when the ensemble has
/// more than p.l_max_particles particles (weights rescaled to the full mass).
double L_functional_estimate(const ParticleEnsemble& e, const FunctionalParams& p);

/// (1/delta) sum over pairs x_i < x_j < x_i + delta of w_i w_j (v_i - v_j)_+^k.
/// Coincident positions are excluded. O(N log N).
double lambda_trace(const ParticleEnsemble& e, int k, double delta);

/// Reference O(N^2) evaluation of lambda_trace.
double lambda_trace_direct(const ParticleEnsemble& e, int k, double delta);

/// lambda_trace at delta, delta/2 and delta/4. stable when the last two agree
/// to 10% (relative) or are both zero.
struct LambdaReport {
  std::array<double, 3> deltas{};
  std::array<double, 3> values{};
  bool stable = false;
};
LambdaReport lambda_report(const ParticleEnsemble& e, int k, double delta);

/// max over pairs x_i > x_j of (v_i - v_j)_+ / (x_i - x_j); 0 without pairs.
double oleinik_sup(const ParticleEnsemble& e);
/// Same over occupied cells, using the cell velocity u and cell-centre distance.
double oleinik_sup(const HydroField& f);

/// sum_c sum_{i in c} w_i (v_i - u_c)^2, i.e. the integral of theta.
double monokineticity(const ParticleEnsemble& e, const Grid& grid);
double monokineticity(const HydroField& f);

/// Atoms plus uniformly spread segments on the line.
struct MassDistribution {
  struct Atom {
    double x;
    double m;
  };
  struct Segment {
    double a;
    double b;
    double m;
  };
  std::vector<Atom> atoms;
  std::vector<Segment> segments;

  double total_mass() const;

  static MassDistribution from_field(const HydroField& f);
  static MassDistribution from_clusters(const ClusterState& s);
  static MassDistribution from_ensemble(const ParticleEnsemble& e);
};

struct W1Result {
  double distance = 0.0;  // between the unit-mass normalizations
  double mass_a = 0.0;
  double mass_b = 0.0;
};

/// integral of |F_a - F_b| over the merged breakpoints, exact for atoms and
/// uniform segments. Each input is normalized to unit mass first.
W1Result wasserstein1(const MassDistribution& a, const MassDistribution& b);

struct HaffFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  std::size_t n_samples = 0;
  double t_first = 0.0;
  double t_last = 0.0;
};

/// Least-squares fit of log theta = intercept + slope * log(1 + t) over the
/// samples with t in [t_lo, t_hi]. Needs at least 10 samples (ResolutionError);
/// theta <= 0 in the window is a DomainError.
HaffFit haff_fit(std::span<const double> t, std::span<const double> theta, double t_lo, double t_hi);

/// Start of the late-time window: the first time at which theta has dropped
/// to theta[0] / factor or below. Returns +inf if it never does.
double decay_window_start(std::span<const double> t, std::span<const double> theta, double factor = 10.0);

/// Time-integrated dissipation inequality for L_k, evaluated with finite mu
/// and finite delta:
///
///   c * int_s^t L_k + L_{k-1}(t-) <= L_{k-1}(s+) + C_eta * int_s^t Lambda_{k+2}(delta)
///
/// with C_eta = 2|log eta| for k = 1 and 2 / eta^{k-1} for k >= 2.
/// The stated form uses c = k. Free transport gives d/dt L_{k-1} =
/// -(k-1) L_k (k >= 2) and d/dt L_0 = -L_1 restricted to gaps below 1 - eta,
/// so the corrected form uses c = max(k-1, 1) and that restriction for k = 1.
struct DissipationInequality {
  int k = 1;
  double s = 0.0;
  double t = 0.0;
  double l_integral = 0.0;             // int L_k
  double l_integral_log_region = 0.0;  // k = 1: int L_1 over gaps < 1 - eta; else = l_integral
  double l_prev_start = 0.0;           // L_{k-1}(s+)
  double l_prev_end = 0.0;             // L_{k-1}(t-)
  double lambda_integral = 0.0;        // int Lambda_{k+2}(delta)
  double lambda_coefficient = 0.0;     // C_eta
  double quadrature_tolerance = 0.0;

  /// LHS - RHS with c = k over the whole domain.
  double residual_stated() const;
  /// LHS - RHS with c = max(k-1, 1) and the k = 1 log-region restriction.
  double residual_corrected() const;
};

/// Exact-trajectory version: needs a trajectory with every merge recorded.
/// Each free-flight segment is split at the times where a pair gap crosses
/// mu, delta or 1 - eta, and integrated with the composite trapezoid rule on
/// n and 2n panels; the difference bounds the quadrature error.
DissipationInequality dissipation_inequality(const StickyTrajectory& trajectory, const FunctionalParams& p, double s,
                                             double t, int panels = 32);

/// Sampled version (e.g. DSMC snapshots): trapezoid over the snapshots with
/// times in [s, t]; needs at least 3 of them (ResolutionError). The tolerance
/// is the difference to the trapezoid on every other snapshot.
DissipationInequality dissipation_inequality(std::span<const ParticleEnsemble> snapshots, const FunctionalParams& p,
                                             double s, double t);

/// L at each mu in mus (sorted as given), for the L_{eta,0+,k} surrogate.
std::vector<double> mu_convergence(const ParticleEnsemble& e, const FunctionalParams& p, std::span<const double> mus);

struct DiagnosticsRow {
  double t = 0.0;
  int k = 0;
  double eta = 0.0;
  double mu = 0.0;
  double L = 0.0;
  double lambda = 0.0;
  double oleinik_sup = 0.0;
  double monokineticity = 0.0;
  double energy = 0.0;
  double momentum = 0.0;
  double mass = 0.0;
};

/// One row per k in p.k_list (or p.k alone when the list is empty).
std::vector<DiagnosticsRow> diagnostics_rows(const ParticleEnsemble& e, const Grid& grid, const FunctionalParams& p);

/// CSV `t,k,eta,mu,L,lambda,oleinik_sup,monokineticity,energy,momentum,mass`.
void write_diagnostics_csv(std::ostream& out, std::span<const DiagnosticsRow> rows);
void write_diagnostics_csv(const std::string& path, std::span<const DiagnosticsRow> rows);

}  // namespace granular
