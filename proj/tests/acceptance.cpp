// Prints one PASS/FAIL line per acceptance criterion. The exit status reports whether the
// run completed; failed criteria are reported, not raised.
#include "bcwave/checks.hpp"

#include <functional>
#include <iostream>
#include <vector>

int main() {
  using namespace bcwave;
  const std::vector<std::function<CheckResult()>> checks = {
      check_connecting_operator, check_b_functional,        check_time_integration,
      check_constant_pipeline,   check_cap_volume,          check_lens_reconstruction,
      check_h_scaling,           check_metric,              check_solver_convergence,
  };
  int passed = 0;
  for (const auto& check : checks) {
    const CheckResult r = check();
    std::cout << r.line() << std::endl;
    passed += r.passed ? 1 : 0;
  }
  std::cout << passed << "/" << checks.size() << " criteria passed" << std::endl;
  return 0;
}
