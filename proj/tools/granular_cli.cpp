// granular: command-line front end.
//
//   granular dsmc run <config>      stochastic particle run
//   granular sticky run <config>    sticky-particle run
//   granular sweep <config>         epsilon sweep against the sticky reference
//   granular check                  invariant suite
//   granular compare <a.csv> <b.csv>
//
// Exit status: 0 success, 1 configuration or usage error, 2 numerical
// invariant failure.

#include <omp.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "granular/config.hpp"
#include "granular/harness.hpp"
#include "granular/invariant_suite.hpp"

namespace {

using namespace granular;

struct GlobalOptions {
  std::string config;
  std::string out;
  std::string seeds;
  int threads = 0;
  bool quiet = false;
  bool progress = false;
};

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  KeyValues kv({{"seeds", text}}, "--seeds");
  return kv.get_uint_list("seeds").value_or(std::vector<std::uint64_t>{});
}

// --out, then output_dir from the config file, then $GRANULAR_OUT, then "out".
std::string output_root(const GlobalOptions& g, const KeyValues& kv) {
  if (!g.out.empty()) return g.out;
  if (kv.has("output_dir")) return *kv.get_string("output_dir");
  if (const char* env = std::getenv("GRANULAR_OUT"); env != nullptr && *env != '\0') return env;
  return "out";
}

std::string require_config(const std::string& positional, const GlobalOptions& g) {
  if (!positional.empty()) return positional;
  if (!g.config.empty()) return g.config;
  throw ConfigError("no config file given (positional argument or --config)");
}

int cmd_dsmc(const std::string& path, const GlobalOptions& g) {
  const KeyValues kv = load_key_values(path);
  SimConfig config = sim_config_from(kv, true);
  const std::string root = output_root(g, kv);
  std::vector<std::uint64_t> seeds = g.seeds.empty() ? std::vector<std::uint64_t>{config.seed} : parse_seeds(g.seeds);
  for (std::uint64_t seed : seeds) {
    config.seed = seed;
    RunOptions o;
    o.out_dir = seeds.size() > 1 ? (std::filesystem::path(root) / ("seed_" + std::to_string(seed))).string() : root;
    o.progress = g.progress;
    o.quiet = g.quiet;
    const DsmcRunSummary s = run_dsmc_to_disk(config, o);
    if (!g.quiet) {
      std::printf("dsmc seed=%llu: %llu steps, %llu collisions, dissipated energy %.6e, final energy %.6e, "
                  "momentum drift %.2e -> %s\n",
                  static_cast<unsigned long long>(seed), static_cast<unsigned long long>(s.n_steps),
                  static_cast<unsigned long long>(s.n_collisions), s.dissipated_energy, s.energy_final,
                  s.momentum_drift, o.out_dir.c_str());
    }
  }
  return 0;
}

int cmd_sticky(const std::string& path, const GlobalOptions& g) {
  const KeyValues kv = load_key_values(path);
  SimConfig config = sim_config_from(kv, true);
  const std::string root = output_root(g, kv);
  std::vector<std::uint64_t> seeds = g.seeds.empty() ? std::vector<std::uint64_t>{config.seed} : parse_seeds(g.seeds);
  for (std::uint64_t seed : seeds) {
    config.seed = seed;
    RunOptions o;
    o.out_dir = seeds.size() > 1 ? (std::filesystem::path(root) / ("seed_" + std::to_string(seed))).string() : root;
    o.quiet = g.quiet;
    const StickyRunSummary s = run_sticky_to_disk(config, o);
    if (!g.quiet) {
      std::printf("sticky seed=%llu: %zu clusters -> %zu after %zu merges, max oleinik*t %.6f -> %s\n",
                  static_cast<unsigned long long>(seed), s.n_initial, s.n_final, s.n_merges, s.max_oleinik_t,
                  o.out_dir.c_str());
    }
  }
  return 0;
}

int cmd_sweep(const std::string& path, const GlobalOptions& g) {
  const KeyValues kv = load_key_values(path);
  SweepSpec spec = SweepSpec::from_key_values(kv);
  if (!g.seeds.empty()) spec.seeds = parse_seeds(g.seeds);
  spec.validate();
  RunOptions o;
  o.out_dir = output_root(g, kv);
  o.progress = g.progress;
  o.quiet = g.quiet;
  const SweepReport r = run_sweep(spec, o);
  if (!g.quiet) {
    std::printf("%-10s %6s %16s %16s %16s %16s\n", "epsilon", "seeds", "monokineticity", "W1_to_sticky",
                "int_lambda", "oleinik*t");
    for (const SweepSummary& s : r.summaries) {
      std::printf("%-10.4g %6zu %16.6e %16.6e %16.6e %16.6e\n", s.epsilon, s.n_seeds, s.median_monokineticity,
                  s.median_w1, s.median_lambda_integral, s.median_oleinik_t);
    }
    std::printf("manifest: %s\n", (std::filesystem::path(o.out_dir) / "manifest.json").string().c_str());
  }
  return 0;
}

int cmd_check(const GlobalOptions& g) {
  const auto results = run_invariant_suite();
  bool ok = true;
  for (const CheckResult& r : results) {
    ok = ok && r.passed;
    if (!g.quiet || !r.passed) std::printf("%s  %s: %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
  }
  return ok ? 0 : 2;
}

int cmd_compare(const std::string& a, const std::string& b, const GlobalOptions& g) {
  const W1Result r = compare_field_files(a, b);
  if (!g.quiet) std::printf("W1 = %.12e (mass %.12e vs %.12e)\n", r.distance, r.mass_a, r.mass_b);
  else std::printf("%.12e\n", r.distance);
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"granular-gas particle simulator, sticky-particle solver and diagnostics", "granular"};
  app.failure_message(CLI::FailureMessage::help);
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config, "Configuration file (key = value)");
  app.add_option("--out", g.out, "Output directory (default: config output_dir, then $GRANULAR_OUT, then ./out)");
  app.add_option("--seeds", g.seeds, "Comma-separated seeds overriding the config");
  app.add_option("--threads", g.threads, "Worker threads (scheduling only; results do not change)")
      ->check(CLI::NonNegativeNumber);
  app.add_flag("--quiet", g.quiet, "Suppress summaries on stdout");
  app.add_flag("--progress", g.progress, "Progress ticker on stderr");

  std::string dsmc_config, sticky_config, sweep_config, cmp_a, cmp_b;
  CLI::App* dsmc = app.add_subcommand("dsmc", "Stochastic particle solver");
  dsmc->require_subcommand(1);
  dsmc->fallthrough();
  CLI::App* dsmc_run = dsmc->add_subcommand("run", "Run DSMC from a config file");
  dsmc_run->add_option("config", dsmc_config, "Configuration file");
  dsmc_run->fallthrough();

  CLI::App* sticky = app.add_subcommand("sticky", "Sticky-particle solver");
  sticky->require_subcommand(1);
  sticky->fallthrough();
  CLI::App* sticky_run = sticky->add_subcommand("run", "Run sticky dynamics from a config file");
  sticky_run->add_option("config", sticky_config, "Configuration file");
  sticky_run->fallthrough();

  CLI::App* sweep = app.add_subcommand("sweep", "Epsilon sweep with sticky reference");
  sweep->add_option("config", sweep_config, "Configuration file");
  sweep->fallthrough();

  CLI::App* check = app.add_subcommand("check", "Run the invariant suite");
  check->fallthrough();

  CLI::App* compare = app.add_subcommand("compare", "Wasserstein-1 distance between two field CSV files");
  compare->add_option("a", cmp_a, "First fields CSV")->required();
  compare->add_option("b", cmp_b, "Second fields CSV")->required();
  compare->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (g.threads > 0) omp_set_num_threads(g.threads);

  try {
    if (*dsmc_run) return cmd_dsmc(require_config(dsmc_config, g), g);
    if (*sticky_run) return cmd_sticky(require_config(sticky_config, g), g);
    if (*sweep) return cmd_sweep(require_config(sweep_config, g), g);
    if (*check) return cmd_check(g);
    if (*compare) return cmd_compare(cmp_a, cmp_b, g);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "\nerror: %s\n", e.what());
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "\nerror: %s\n", e.what());
    return 1;
  } catch (const TimestepError& e) {
    std::fprintf(stderr, "\nnumerical error: %s\n", e.what());
    return 2;
  } catch (const ConsistencyError& e) {
    std::fprintf(stderr, "\ninvariant violated: %s\n", e.what());
    return 2;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "\nnumerical error: %s\n", e.what());
    return 2;
  } catch (const ResolutionError& e) {
    std::fprintf(stderr, "\nnumerical error: %s\n", e.what());
    return 2;
  }
  std::fprintf(stderr, "%s", app.help().c_str());
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
