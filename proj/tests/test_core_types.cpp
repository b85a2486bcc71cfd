#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "granular/core_types.hpp"

using namespace granular;

TEST_CASE("pairwise_sum matches a long-double accumulation and is order-stable") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> xs(10007);
  for (double& x : xs) x = u(rng);
  long double ref = 0.0L;
  for (double x : xs) ref += x;
  CHECK(std::abs(pairwise_sum(xs) - static_cast<double>(ref)) < 1e-12);
  CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
  CHECK(pairwise_sum(std::vector<double>{2.5}) == 2.5);
  CHECK(pairwise_sum(xs) == pairwise_sum(xs));
}

TEST_CASE("ensemble moments") {
  ParticleEnsemble e;
  e.particles = {{0.0, 1.0, 0.5}, {1.0, -3.0, 0.25}};
  CHECK(e.total_mass() == doctest::Approx(0.75));
  CHECK(e.momentum() == doctest::Approx(0.5 - 0.75));
  CHECK(e.kinetic_energy() == doctest::Approx(0.5 * (0.5 + 0.25 * 9)));
  CHECK(e.velocity_moment(3.0) == doctest::Approx(0.5 + 0.25 * 27));
  CHECK(e.all_finite());
  e.particles[1].v = NAN;
  CHECK_FALSE(e.all_finite());
}

TEST_CASE("grid cells and covering") {
  const Grid g = Grid::uniform(0.0, 1.0, 10, Boundary::free);
  CHECK(g.dx == doctest::Approx(0.1));
  CHECK(g.absolute_cell(0.05) == 0);
  CHECK(g.absolute_cell(0.95) == 9);
  CHECK(g.absolute_cell(-0.05) == -1);
  CHECK(g.cell_center(3) == doctest::Approx(0.35));

  std::vector<Particle> ps = {{-0.25, 0, 1}, {1.31, 0, 1}};
  const Grid c = g.covering(ps);
  CHECK(c.first_cell == -3);
  CHECK(c.x_min() <= -0.25);
  CHECK(c.x_max() > 1.31);
  CHECK(c.dx == g.dx);
  CHECK(c.origin == g.origin);

  const Grid p = Grid::uniform(0.0, 1.0, 10, Boundary::periodic);
  CHECK(p.covering(ps).n_cells == 10);
}

TEST_CASE("binning keeps particle order within cells") {
  const Grid g = Grid::uniform(0.0, 1.0, 2, Boundary::free);
  std::vector<Particle> ps = {{0.7, 0, 1}, {0.1, 0, 1}, {0.6, 0, 1}, {0.2, 0, 1}};
  const CellBins b = bin_particles(ps, g);
  REQUIRE(b.n_cells() == 2);
  CHECK(std::vector<std::uint32_t>(b.cell(0).begin(), b.cell(0).end()) == std::vector<std::uint32_t>{1, 3});
  CHECK(std::vector<std::uint32_t>(b.cell(1).begin(), b.cell(1).end()) == std::vector<std::uint32_t>{0, 2});
}

TEST_CASE("deposit_fields examples") {
  SUBCASE("one cell, v = +-1, w = 1/2") {
    ParticleEnsemble e;
    e.particles = {{0.3, 1.0, 0.5}, {0.6, -1.0, 0.5}};
    const HydroField f = deposit_fields(e, Grid::uniform(0.0, 1.0, 1, Boundary::free));
    CHECK(f.rho[0] == doctest::Approx(1.0));
    CHECK(f.u[0] == doctest::Approx(0.0));
    CHECK(f.theta[0] == doctest::Approx(1.0));
  }
  SUBCASE("empty cell") {
    ParticleEnsemble e;
    e.particles = {{0.1, 2.0, 1.0}};
    const HydroField f = deposit_fields(e, Grid::uniform(0.0, 1.0, 2, Boundary::free));
    CHECK(f.rho[1] == 0.0);
    CHECK(f.u[1] == 0.0);
    CHECK(f.theta[1] == 0.0);
  }
  SUBCASE("single particle, dx = 0.5") {
    ParticleEnsemble e;
    e.particles = {{0.2, 3.0, 1.0}};
    const HydroField f = deposit_fields(e, Grid::uniform(0.0, 0.5, 1, Boundary::free));
    CHECK(f.rho[0] == doctest::Approx(2.0));
    CHECK(f.u[0] == doctest::Approx(3.0));
    CHECK(f.theta[0] == doctest::Approx(0.0));
    CHECK(f.total_mass() == doctest::Approx(1.0));
  }
}

TEST_CASE("sample_initial presets") {
  SUBCASE("zero-velocity monokinetic") {
    InitSpec s;
    s.kind = InitKind::well_prepared_monokinetic;
    const ParticleEnsemble e = sample_initial(s, 4, 1);
    REQUIRE(e.size() == 4);
    for (const Particle& p : e.particles) {
      CHECK(p.v == 0.0);
      CHECK(p.w == 0.25);
      CHECK(p.x >= 0.0);
      CHECK(p.x <= 1.0);
    }
  }
  SUBCASE("Riemann states without jitter") {
    InitSpec s;
    const ParticleEnsemble e = sample_initial(s, 1000, 2);
    for (const Particle& p : e.particles) CHECK(p.v == (p.x < 0.5 ? 1.0 : -1.0));
  }
  SUBCASE("double peak mean within 3/sqrt(n)") {
    InitSpec s;
    s.kind = InitKind::double_peak;
    const std::size_t n = 100000;
    const ParticleEnsemble e = sample_initial(s, n, 11);
    double sum = 0.0;
    for (const Particle& p : e.particles) {
      CHECK(std::abs(std::abs(p.v) - 1.0) == 0.0);
      sum += p.v;
    }
    CHECK(std::abs(sum / n) <= 3.0 / std::sqrt(static_cast<double>(n)));
  }
  SUBCASE("deterministic per seed") {
    InitSpec s;
    s.kind = InitKind::homogeneous_maxwellianlike;
    s.sigma_v = 1.0;
    const ParticleEnsemble a = sample_initial(s, 100, 5);
    const ParticleEnsemble b = sample_initial(s, 100, 5);
    const ParticleEnsemble c = sample_initial(s, 100, 6);
    bool same = true, differ = false;
    for (std::size_t i = 0; i < 100; ++i) {
      same = same && a.particles[i].x == b.particles[i].x && a.particles[i].v == b.particles[i].v;
      differ = differ || a.particles[i].v != c.particles[i].v;
    }
    CHECK(same);
    CHECK(differ);
  }
  SUBCASE("bad input") {
    InitSpec s;
    CHECK_THROWS_AS(sample_initial(s, 0, 1), ConfigError);
    s.sigma_v = -1.0;
    CHECK_THROWS_AS(sample_initial(s, 10, 1), ConfigError);
  }
}

TEST_CASE("SimConfig validation") {
  SimConfig c;
  CHECK_NOTHROW(c.validate());
  c.epsilon = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SimConfig{};
  c.alpha = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SimConfig{};
  c.functional.eta = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
