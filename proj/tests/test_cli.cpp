#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct Result {
  int status;
  std::string output;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(GRANULAR_CLI) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe) != nullptr) out += buf;
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

}  // namespace

TEST_CASE("cli: usage errors exit 1") {
  CHECK(run("").status == 1);
  CHECK(run("frobnicate").status == 1);
  CHECK(run("dsmc").status == 1);
  CHECK(run("--help").status == 0);
}

TEST_CASE("cli: missing config names the path") {
  const Result r = run("dsmc run /nonexistent/cli.cfg");
  CHECK(r.status == 1);
  CHECK(r.output.find("/nonexistent/cli.cfg") != std::string::npos);
}

TEST_CASE("cli: run, compare, seeds and exit 2 on a refused step") {
  const fs::path dir = fs::temp_directory_path() / "granular_test_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "run.cfg");
    cfg << "n_particles = 500\nn_cells = 10\nt_end = 0.05\ndt = 1e-3\ninit.sigma_v = 0.1\n";
  }
  Result r = run("--quiet --out " + (dir / "a").string() + " dsmc run " + (dir / "run.cfg").string());
  CHECK(r.status == 0);
  REQUIRE(fs::exists(dir / "a" / "fields.csv"));
  r = run("--quiet compare " + (dir / "a" / "fields.csv").string() + " " + (dir / "a" / "fields.csv").string());
  CHECK(r.status == 0);
  CHECK(std::stod(r.output) == 0.0);

  r = run("--quiet --seeds 4,5 --out " + (dir / "b").string() + " sticky run " + (dir / "run.cfg").string());
  CHECK(r.status == 0);
  CHECK(fs::exists(dir / "b" / "seed_4" / "trajectory.csv"));
  CHECK(fs::exists(dir / "b" / "seed_5" / "trajectory.csv"));

  {
    std::ofstream cfg(dir / "stiff.cfg");
    cfg << "n_particles = 5000\nn_cells = 2\nepsilon = 1e-4\nt_end = 0.05\ndt = 1e-2\ninit.sigma_v = 0.1\n";
  }
  r = run("--quiet --out " + (dir / "c").string() + " dsmc run " + (dir / "stiff.cfg").string());
  CHECK(r.status == 2);

  {
    std::ofstream cfg(dir / "typo.cfg");
    cfg << "n_particle = 5\n";
  }
  r = run("--quiet dsmc run " + (dir / "typo.cfg").string());
  CHECK(r.status == 1);
  CHECK(r.output.find("n_particle") != std::string::npos);

  const char* prev = std::getenv("GRANULAR_OUT");
  setenv("GRANULAR_OUT", (dir / "env").string().c_str(), 1);
  r = run("--quiet sticky run " + (dir / "run.cfg").string());
  if (prev) setenv("GRANULAR_OUT", prev, 1);
  else unsetenv("GRANULAR_OUT");
  CHECK(r.status == 0);
  CHECK(fs::exists(dir / "env" / "trajectory.csv"));
  fs::remove_all(dir);
}
