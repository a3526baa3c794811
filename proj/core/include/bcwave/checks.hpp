#pragma once

#include <string>
#include <vector>

namespace bcwave {

/// Outcome of one oracle check. `value` is the headline metric compared against
/// `tolerance`; `detail` carries the secondary numbers.
struct CheckResult {
  int id = 0;
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  double seconds = 0.0;
  double budget_seconds = 0.0;
  std::string detail;

  /// "PASS  3 name  value=... tol=...  (t s / budget s)  detail"
  std::string line() const;
};

/// ||K from traces - K from interior wavefields||_F / ||K||_F on c = 1 with a 5 x 9 basis.
CheckResult check_connecting_operator();
/// B(f, phi) against <u^f(T), phi> for random f and phi in {1, x1, x2}.
CheckResult check_b_functional();
/// Lambda I f = I Lambda f on traces, and phi = I^2 d_t^2 phi for the time profiles from row 4.
CheckResult check_time_integration();
/// c = 1 run through every pipeline stage: Phi within the cap-diameter bound, c within 5% RMS.
CheckResult check_constant_pipeline();
/// Cap volume against the circular-segment area as alpha decreases.
CheckResult check_cap_volume();
/// Lens run: RMS relative error of c for s <= 0.5, growing with depth.
CheckResult check_lens_reconstruction();
/// Log-log slope of the Phi error against h on c = 1.
CheckResult check_h_scaling();
/// Laplacian identity order on three metrics and metric recovery from interior data on the lens.
CheckResult check_metric();
/// Self-convergence order of the forward solver on the lens.
CheckResult check_solver_convergence();

enum class CheckLevel { quick, full };

/// quick: checks 1, 2, 3, 8, 9. full: all nine.
std::vector<CheckResult> run_checks(CheckLevel level);

}  // namespace bcwave
