// Fast self-check behind `granular check`: conservation laws, pointwise
// bounds and solver cross-checks on randomized inputs.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace granular {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

std::vector<CheckResult> run_invariant_suite(std::uint64_t seed = 20240601);

}  // namespace granular
