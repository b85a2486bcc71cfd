#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "granular/sticky.hpp"
#include "oracles.hpp"

using namespace granular;

namespace {

ClusterState clusters(std::initializer_list<Cluster> cs) {
  ClusterState s;
  s.clusters = cs;
  for (std::size_t i = 0; i < s.clusters.size(); ++i) s.clusters[i].id = i;
  return s;
}

}  // namespace

TEST_CASE("next_event examples") {
  auto e = next_event(clusters({{0, 1, 1}, {1, -1, 1}}));
  REQUIRE(e.has_value());
  CHECK(e->t_event == doctest::Approx(0.5));
  CHECK(e->left_index == 0);
  CHECK(e->right_index == 1);

  CHECK_FALSE(next_event(clusters({{0, 1, 1}, {1, 2, 1}})).has_value());

  e = next_event(clusters({{0, 2, 1}, {1, 0, 1}, {3, -1, 1}}));
  REQUIRE(e.has_value());
  CHECK(e->t_event == doctest::Approx(0.5));
  CHECK(e->left_index == 0);
}

TEST_CASE("merge examples") {
  ClusterState s = clusters({{0, 1, 2}, {1, -1, 1}});
  ClusterState m = merge(s, *next_event(s));
  REQUIRE(m.size() == 1);
  CHECK(m.clusters[0].v == doctest::Approx(1.0 / 3.0));
  CHECK(m.clusters[0].m == 3.0);

  s = clusters({{0, 1, 1}, {1, -1, 1}});
  m = merge(s, *next_event(s));
  CHECK(m.clusters[0].v == 0.0);
  CHECK(m.clusters[0].x == doctest::Approx(0.5));
  CHECK(m.time == doctest::Approx(0.5));

  CHECK_THROWS_AS(merge(s, CollisionEvent{0.2, 0, 1}), ConsistencyError);
}

TEST_CASE("three-body chain") {
  const ClusterState s = clusters({{0, 2, 1}, {1, 0, 1}, {3, -1, 1}});
  const StickyTrajectory tr = run_sticky(s, 3.0);
  REQUIRE(tr.merge_times.size() == 2);
  CHECK(tr.merge_times[0] == doctest::Approx(0.5));
  CHECK(tr.merge_times[1] == doctest::Approx(1.25));
  const ClusterState mid = tr.state_at(0.5);
  REQUIRE(mid.size() == 2);
  CHECK(mid.clusters[0].x == doctest::Approx(1.0));
  CHECK(mid.clusters[0].v == doctest::Approx(1.0));
  CHECK(mid.clusters[0].m == 2.0);
  const ClusterState late = tr.state_at(1.25);
  REQUIRE(late.size() == 1);
  CHECK(late.clusters[0].x == doctest::Approx(1.75));
  CHECK(tr.final_state().clusters[0].v == doctest::Approx(1.0 / 3.0));
  CHECK(tr.state_before(1.25).size() == 2);

  const auto brute = oracle::sticky_small_step({{0, 2, 1}, {1, 0, 1}, {3, -1, 1}}, 3.0, 1e-5);
  REQUIRE(brute.size() == 1);
  CHECK(brute[0].x == doctest::Approx(tr.final_state().clusters[0].x).epsilon(1e-6));
}

TEST_CASE("single cluster flies freely") {
  const StickyTrajectory tr = run_sticky(clusters({{1, 2, 3}}), 2.0);
  CHECK(tr.n_merges == 0);
  CHECK(tr.final_state().clusters[0].x == doctest::Approx(5.0));
}

TEST_CASE("random instances agree with the small-step oracle") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 20; ++trial) {
    const ClusterState init = oracle::random_clusters(rng, 10);
    std::vector<oracle::Body> bodies;
    for (const Cluster& c : init.clusters) bodies.push_back({c.x, c.v, c.m});
    const auto brute = oracle::sticky_small_step(bodies, 1.0, 1e-5);
    const StickyTrajectory tr = run_sticky(init, 1.0);
    const ClusterState& fin = tr.final_state();
    CHECK(tr.n_merges <= init.size() - 1);
    REQUIRE(fin.size() == brute.size());
    for (std::size_t i = 0; i < brute.size(); ++i) {
      CHECK(std::abs(fin.clusters[i].x - brute[i].x) <= 1e-6);
      CHECK(std::abs(fin.clusters[i].v - brute[i].v) <= 1e-6);
    }
  }
}

TEST_CASE("conservation, energy decay and state queries") {
  std::mt19937_64 rng(7);
  const ClusterState init = oracle::random_clusters(rng, 30);
  StickyOptions o;
  o.output_times = {0.25, 0.5, 0.75};
  const StickyTrajectory tr = run_sticky(init, 1.0, o);
  CHECK(tr.has_all_events);
  double e_prev = init.kinetic_energy();
  for (const auto& s : tr.snapshots) {
    CHECK(std::abs(s.state.total_mass() - init.total_mass()) <= 1e-12);
    CHECK(std::abs(s.state.momentum() - init.momentum()) <= 1e-12);
    CHECK(s.state.kinetic_energy() <= e_prev + 1e-15);
    e_prev = s.state.kinetic_energy();
    for (std::size_t i = 1; i < s.state.size(); ++i) CHECK(s.state.clusters[i - 1].x < s.state.clusters[i].x);
  }
  const ClusterState q = tr.state_at(0.6);
  CHECK(q.time == 0.6);
  CHECK(std::abs(q.momentum() - init.momentum()) <= 1e-12);

  StickyOptions sparse;
  sparse.record_events = false;
  const StickyTrajectory tr2 = run_sticky(init, 1.0, sparse);
  CHECK_FALSE(tr2.has_all_events);
  CHECK_THROWS_AS(tr2.state_at(0.5), ResolutionError);
}

TEST_CASE("ensemble conversions") {
  const ClusterState one = clusters({{1, 2, 3}});
  const ParticleEnsemble e = to_ensemble(one);
  REQUIRE(e.size() == 1);
  CHECK(e.particles[0].x == 1);
  CHECK(e.particles[0].v == 2);
  CHECK(e.particles[0].w == 3);

  const ClusterState two = clusters({{0, 1, 1}, {2, -1, 0.5}});
  const ParticleEnsemble e2 = to_ensemble(two);
  CHECK(e2.particles[0].x < e2.particles[1].x);
  CHECK(e2.momentum() == two.momentum());

  ParticleEnsemble coincident;
  coincident.particles = {{0.5, 1, 1}, {0.2, 0, 1}, {0.5, -1, 1}};
  const ClusterState c = from_ensemble(coincident);
  REQUIRE(c.size() == 2);
  CHECK(c.clusters[0].x == 0.2);
  CHECK(c.clusters[1].m == 2);
  CHECK(c.clusters[1].v == 0.0);
}

TEST_CASE("monokinetic projection") {
  ParticleEnsemble e;
  e.particles = {{0.1, 1, 0.25}, {0.3, 3, 0.25}, {0.7, -1, 0.5}};
  const ClusterState p = monokinetic_projection(e, Grid::uniform(0, 1, 2, Boundary::free));
  REQUIRE(p.size() == 2);
  CHECK(p.clusters[0].x == doctest::Approx(0.2));
  CHECK(p.clusters[0].v == doctest::Approx(2.0));
  CHECK(p.clusters[0].m == doctest::Approx(0.5));
  CHECK(p.clusters[1].x == doctest::Approx(0.7));
}

TEST_CASE("trajectory CSV") {
  const StickyTrajectory tr = run_sticky(clusters({{0, 1, 1}, {1, -1, 1}}), 1.0);
  std::ostringstream out;
  write_trajectory_csv(out, tr);
  const std::string text = out.str();
  CHECK(text.rfind("t,cluster_id,x,v,m\n", 0) == 0);
  CHECK(text.find("5.000000000000e-01") != std::string::npos);
}
