#include "bcwave/checks.hpp"

#include "bcwave/aniso.hpp"
#include "bcwave/boundary_ops.hpp"
#include "bcwave/control.hpp"
#include "bcwave/forward.hpp"
#include "bcwave/medium.hpp"
#include "bcwave/parallel.hpp"
#include "bcwave/pipeline.hpp"
#include "bcwave/reconstruct.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>

namespace fs = std::filesystem;

namespace bcwave {

namespace {

using Clock = std::chrono::steady_clock;

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Runs body, which fills value/passed/detail, and stamps the timing.
CheckResult timed(int id, std::string name, double tolerance, double budget_seconds,
                  const std::function<void(CheckResult&)>& body) {
  CheckResult r;
  r.id = id;
  r.name = std::move(name);
  r.tolerance = tolerance;
  r.budget_seconds = budget_seconds;
  const auto start = Clock::now();
  try {
    body(r);
  } catch (const std::exception& e) {
    r.passed = false;
    r.value = std::numeric_limits<double>::quiet_NaN();
    r.detail = std::string("error: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  if (r.seconds > budget_seconds) {
    r.passed = false;
    r.detail += " over time budget";
  }
  return r;
}

// Basis of 5 time rows (t = 0.1 .. 0.2) by 9 locations (|x| <= 0.1) on [0, 0.3] for c = 1,
// with receivers out to `receiver_half_width`.
struct SmallExperiment {
  BasisSpec basis;
  GramMatrix gram;
  SimGrid grid;
  SpeedField field;
  TraceSet traces;
};

BasisParams small_basis_params() {
  BasisParams p;
  p.T = 0.3;
  p.t_first = 0.1;
  p.t_last = 0.2;
  p.dt_s = 0.025;
  p.half_width = 0.1;
  p.dx_s = 0.025;
  // Quadrature nodes on the solver nodes, so the cut of Gamma sees the same rule on both sides.
  p.quad_dt = 0.00125;
  p.quad_dx = 0.00625;
  return p;
}

SmallExperiment small_experiment(double receiver_half_width) {
  const BasisSpec basis(small_basis_params());
  ReceiverLattice lat;
  lat.dt_r = basis.params().quad_dt;
  lat.dx_r = basis.params().quad_dx;
  lat.T = basis.params().T;
  lat.half_width = receiver_half_width;
  const SimGrid grid = covering_grid(lat.half_width + 0.1, -0.1, 2.0 * lat.T, 1.0, 0.00625, lat.dt_r);
  SpeedField field = SpeedField::sample(SpeedModel::constant(1.0), grid.space);
  TraceSet traces = record_ndmap(field, basis, grid, lat);
  return {basis, GramMatrix(basis), grid, std::move(field), std::move(traces)};
}

std::vector<InteriorSnapshot> final_states(const SmallExperiment& e) {
  std::vector<InteriorSnapshot> snaps(e.basis.size());
  parallel_for(e.basis.size(), [&](std::size_t m) {
    snaps[m] = final_state(e.field, basis_source(e.basis, m), e.grid, e.basis.params().T);
  });
  return snaps;
}

std::vector<double> range(double lo, double hi, double step) {
  std::vector<double> v;
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / step));
  for (std::size_t k = 0; k <= n; ++k) v.push_back(lo + step * static_cast<double>(k));
  return v;
}

// Desk configuration with a square Gaussian basis of step D (the width scales with D).
PipelineConfig desk_config(const std::string& medium, double T, double ls, double D, double dx) {
  PipelineConfig c;
  c.medium.kind = medium;
  c.T = T;
  c.ls = ls;
  c.lr = ls + T;
  c.dts = c.dxs = D;
  c.a = 1381.6 * (0.025 / D) * (0.025 / D);
  c.dtr = D / 10.0;
  c.dxr = D / 2.0;
  c.dx = dx;
  c.h = 0.05;
  c.alpha = 1e-3;
  c.y_min = -0.2;
  c.y_max = 0.2;
  c.y_step = 0.05;
  c.s_min = D;
  c.s_step = D;
  return c;
}

// Runs the pipeline in a scratch directory and returns the speed stage table.
TransformSamples run_in_scratch(const PipelineConfig& config, const std::string& tag) {
  const auto stamp = Clock::now().time_since_epoch().count();
  const fs::path dir = fs::temp_directory_path() / ("bcwave-check-" + tag + "-" + std::to_string(stamp));
  struct Cleanup {
    fs::path dir;
    ~Cleanup() {
      std::error_code ec;
      fs::remove_all(dir, ec);
    }
  } cleanup{dir};
  run_pipeline(config, dir, {true});
  return TransformSamples::read_csv(dir / "speed" / "recon.csv");
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sx += x[k];
    sy += y[k];
    sxx += x[k] * x[k];
    sxy += x[k] * y[k];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

std::string CheckResult::line() const {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s %d %-28s value=%.3e tol=%.3e (%.1f s / %.0f s)", passed ? "PASS" : "FAIL", id,
                name.c_str(), value, tolerance, seconds, budget_seconds);
  std::string out = buf;
  if (!detail.empty()) out += "  " + detail;
  return out;
}

CheckResult check_connecting_operator() {
  return timed(1, "connecting-operator", 2e-2, 300.0, [](CheckResult& r) {
    const SmallExperiment e = small_experiment(0.1);
    const ConnectingMatrix K = assemble_K(e.traces, e.basis, e.gram);
    const std::vector<InteriorSnapshot> snaps = final_states(e);
    const std::size_t N = e.basis.size();
    Matrix oracle(N, N);
    for (std::size_t a = 0; a < N; ++a) {
      for (std::size_t b = 0; b < N; ++b) oracle(a, b) = interior_inner(snaps[a], snaps[b], e.field);
    }
    r.value = (K.K - oracle).norm() / oracle.norm();
    r.passed = r.value <= r.tolerance;
    r.detail = "N=" + std::to_string(N) + " symmetry=" + fmt("%.2e", K.symmetry_defect());
  });
}

CheckResult check_b_functional() {
  return timed(2, "b-functional", 1e-2, 300.0, [](CheckResult& r) {
    const SmallExperiment e = small_experiment(0.5);
    const TraceMoments moments = TraceMoments::from(e.traces);
    const std::vector<InteriorSnapshot> snaps = final_states(e);
    const std::size_t N = e.basis.size();
    std::mt19937_64 rng(20240611);
    std::normal_distribution<double> normal;
    std::vector<Vector> combos(10, Vector(N));
    for (Vector& c : combos) {
      for (std::size_t m = 0; m < N; ++m) c[static_cast<Eigen::Index>(m)] = normal(rng);
    }
    double worst = 0.0;
    std::string per_phi;
    for (const HarmonicFunction& phi : {HarmonicFunction::one(), HarmonicFunction::x1(), HarmonicFunction::x2()}) {
      InteriorSnapshot phi_snap = snaps.front();
      for (std::size_t k = 0; k < phi_snap.geometry.n2; ++k) {
        for (std::size_t i = 0; i < phi_snap.geometry.n1; ++i) {
          phi_snap.values[phi_snap.geometry.index(i, k)] = phi.value(phi_snap.geometry.node(i, k));
        }
      }
      Vector oracle_row(N);
      for (std::size_t m = 0; m < N; ++m) oracle_row[static_cast<Eigen::Index>(m)] = interior_inner(snaps[m], phi_snap, e.field);
      double phi_worst = 0.0;
      for (const Vector& c : combos) {
        const double b = b_functional(c, phi, moments, e.basis);
        const double o = c.dot(oracle_row);
        phi_worst = std::max(phi_worst, std::abs(b - o) / std::abs(o));
      }
      worst = std::max(worst, phi_worst);
      per_phi += " " + phi.name + "=" + fmt("%.2e", phi_worst);
    }
    r.value = worst;
    r.passed = worst <= r.tolerance;
    r.detail = "max over 10 combinations:" + per_phi;
  });
}

CheckResult check_time_integration() {
  return timed(3, "time-integration", 1e-4, 600.0, [](CheckResult& r) {
    // Part 1: Ricker source f = p'' against If = p' on the lens, traces sampled finely.
    const double a = 1381.6, dtr = 0.000625, T = 0.5;
    const SpeedModel lens = SpeedModel::lens();
    const SimGrid grid = covering_grid(0.3, -0.1, 2.0 * T, 1.0, 0.00625, dtr);
    const SpeedField field = SpeedField::sample(lens, grid.space);
    ReceiverSpec rec;
    rec.times = range(0.0, 2.0 * T, dtr);
    rec.positions = range(-0.3, 0.3, 0.0125);
    double identity = 0.0;
    for (double tc : {0.1, 0.2}) {
      auto p = [=](double t) { return std::exp(-a * (t - tc) * (t - tc)); };
      auto source = [&](std::function<double(double)> time) {
        BoundarySource b;
        b.terms.push_back({[=](double x) { return std::exp(-a * x * x); }, -0.3, 0.3, std::move(time)});
        return b;
      };
      const double dp0 = -2.0 * a * (0.0 - tc) * p(0.0);
      auto f = [=](double t) { return t < 0 ? 0.0 : (4.0 * a * a * (t - tc) * (t - tc) - 2.0 * a) * p(t); };
      auto If = [=](double t) { return t < 0 ? 0.0 : -2.0 * a * (t - tc) * p(t) - dp0; };
      const Matrix Lf = simulate(field, source(f), grid, rec).traces;
      const Matrix LIf = simulate(field, source(If), grid, rec).traces;
      const Matrix ILf = apply_I_rows(Lf, dtr);
      identity = std::max(identity, (LIf - ILf).norm() / ILf.norm());
    }
    // Part 2: phi = I^2 d_t^2 phi on the full time basis.
    BasisParams bp;
    const RickerReport report = ricker_decomposition_check(BasisSpec(bp), 0.1, 1e-4);
    double from_row5 = 0.0;
    for (std::size_t i = 4; i < report.errors.size(); ++i) from_row5 = std::max(from_row5, report.errors[i]);
    r.value = std::max(identity, report.max_error_from_row4);
    r.passed = r.value <= r.tolerance;
    r.detail = "trace identity=" + fmt("%.2e", identity) + " decomposition i>=4=" +
               fmt("%.2e", report.max_error_from_row4) + " (i=4: " + fmt("%.2e", report.errors[3]) +
               ", i>=5: " + fmt("%.2e", from_row5) + ")";
  });
}

CheckResult check_constant_pipeline() {
  return timed(4, "constant-speed-pipeline", 1.0, 1800.0, [](CheckResult& r) {
    PipelineConfig c = desk_config("constant", 0.8, 0.75, 0.025, 0.00625);
    c.s_max = 0.4;
    const TransformSamples t = run_in_scratch(c, "constant");
    double worst_ratio = 0.0, worst = 0.0, sum = 0.0;
    std::size_t n = 0, unusable = 0;
    for (std::size_t i = 0; i < t.ys.size(); ++i) {
      for (std::size_t j = 0; j < t.ss.size(); ++j) {
        const TransformPoint& p = t.at(i, j);
        if (!p.usable()) {
          ++unusable;
          continue;
        }
        const double err = std::hypot(p.phi1 - p.y, p.phi2 + p.s + 0.5 * t.h);
        worst = std::max(worst, err);
        worst_ratio = std::max(worst_ratio, err / (1.5 * std::sqrt(2.0 * (p.s + t.h) * t.h)));
        const bool interior = i > 0 && i + 1 < t.ys.size() && j > 0 && j + 1 < t.ss.size();
        if (interior && std::isfinite(p.c_est)) {
          sum += (p.c_est - 1.0) * (p.c_est - 1.0);
          ++n;
        }
      }
    }
    const double c_rms = n ? std::sqrt(sum / static_cast<double>(n)) : std::numeric_limits<double>::infinity();
    r.value = worst_ratio;
    r.passed = unusable == 0 && worst_ratio <= 1.0 && c_rms <= 0.05;
    r.detail = "max error / bound; max error=" + fmt("%.3e", worst) + " c RMS=" + fmt("%.2f%%", 100 * c_rms) +
               " (tol 5%) unusable=" + std::to_string(unusable);
  });
}

CheckResult check_cap_volume() {
  return timed(5, "cap-volume", 0.1, 600.0, [](CheckResult& r) {
    const double T = 0.4, D = 0.0125;
    BasisParams bp;
    bp.T = T;
    bp.t_first = D;
    bp.t_last = T - D;
    bp.dt_s = D;
    bp.dx_s = D;
    bp.a = 1381.6 * (0.025 / D) * (0.025 / D);
    bp.quad_dt = D / 10.0;
    bp.quad_dx = D / 2.0;
    bp.half_width = 0.6;
    const BasisSpec basis(bp);
    const GramMatrix G(basis);
    ReceiverLattice lat;
    lat.dt_r = bp.quad_dt;
    lat.dx_r = bp.quad_dx;
    lat.T = T;
    lat.half_width = bp.half_width;
    const SimGrid grid = covering_grid(2.0 * bp.half_width, -0.1, 2.0 * T, 1.0, 0.003125, lat.dt_r);
    const SpeedField field = SpeedField::sample(SpeedModel::constant(1.0), grid.space);
    const ConnectingMatrix K = assemble_K(record_ndmap(field, basis, grid, lat), basis, G);
    const Matrix sym = symmetric_part(K);
    const Matrix b = b_vector(basis);
    const std::vector<double> locs(basis.locations().begin(), basis.locations().end());
    const BoundaryDistanceTable table = BoundaryDistanceTable::euclidean(locs, locs);
    const double s = 0.3, h = 0.05, radius = s + h;
    const double exact = radius * radius * std::acos(s / radius) - s * std::sqrt(radius * radius - s * s);
    const double scale = K.K.trace() / static_cast<double>(K.size());
    std::string ladder;
    double tail = 0.0;
    for (double alpha_rel : {1.0, 1e-1, 1e-2, 1e-3}) {
      const CapSolver solver(sym, b, basis, s, alpha_rel * scale);
      const double rel = solver.solve(0.0, h, table).volume / exact - 1.0;
      ladder += " " + fmt("%.0e", alpha_rel) + ":" + fmt("%+.1f%%", 100 * rel);
      if (alpha_rel <= 1e-2) tail = std::max(tail, std::abs(rel));
    }
    r.value = tail;
    r.passed = tail <= r.tolerance;
    r.detail = "max |relative error| for alpha <= 1e-2 trace/N; area=" + fmt("%.5f", exact) + " ladder" + ladder;
  });
}

CheckResult check_lens_reconstruction() {
  return timed(6, "lens-reconstruction", 0.1, 7200.0, [](CheckResult& r) {
    PipelineConfig c = desk_config("lens", 0.8, 0.75, 0.025, 0.00625);
    c.s_max = 0.55;
    const TransformSamples t = run_in_scratch(c, "lens");
    const SpeedFunction speed = medium_speed(c.medium);
    const double edges[] = {0.0, 0.2, 0.35, 0.5};
    double band_sum[3] = {0, 0, 0}, band_n[3] = {0, 0, 0}, sum = 0.0, n = 0.0;
    for (const TransformPoint& p : t.points) {
      if (p.s > 0.5 + 1e-9 || !p.usable() || !std::isfinite(p.c_est)) continue;
      const double e = p.c_est / speed({p.phi1, p.phi2}) - 1.0;
      int b = 0;
      while (p.s > edges[b + 1] + 1e-9) ++b;
      band_sum[b] += e * e;
      band_n[b] += 1;
      sum += e * e;
      n += 1;
    }
    double band[3];
    for (int b = 0; b < 3; ++b) band[b] = band_n[b] > 0 ? std::sqrt(band_sum[b] / band_n[b]) : 0.0;
    const bool growing = band[0] <= band[1] && band[1] <= band[2];
    r.value = n > 0 ? std::sqrt(sum / n) : std::numeric_limits<double>::infinity();
    r.passed = r.value <= r.tolerance && growing;
    r.detail = "RMS by depth band (0,0.2] (0.2,0.35] (0.35,0.5]: " + fmt("%.3f", band[0]) + " " +
               fmt("%.3f", band[1]) + " " + fmt("%.3f", band[2]) + (growing ? " non-decreasing" : " not monotone");
  });
}

CheckResult check_h_scaling() {
  return timed(7, "h-scaling", 0.4, 1800.0, [](CheckResult& r) {
    const double T = 0.5, D = 0.0125, ls = 0.45;
    BasisParams bp;
    bp.T = T;
    bp.t_first = D;
    bp.t_last = T - D;
    bp.dt_s = D;
    bp.dx_s = D;
    bp.a = 1381.6 * (0.025 / D) * (0.025 / D);
    bp.quad_dt = D / 10.0;
    bp.quad_dx = D / 2.0;
    bp.half_width = ls;
    const BasisSpec basis(bp);
    const GramMatrix G(basis);
    ReceiverLattice lat;
    lat.dt_r = bp.quad_dt;
    lat.dx_r = bp.quad_dx;
    lat.T = T;
    lat.half_width = ls + T;
    const SimGrid grid = covering_grid(lat.half_width + ls, -0.1, 2.0 * T, 1.0, 0.003125, lat.dt_r);
    const SpeedField field = SpeedField::sample(SpeedModel::constant(1.0), grid.space);
    const TraceSet traces = record_ndmap(field, basis, grid, lat);
    const ConnectingMatrix K = assemble_K(traces, basis, G);
    const TraceMoments moments = TraceMoments::from(traces);
    const std::vector<double> locs(basis.locations().begin(), basis.locations().end());
    const BoundaryDistanceTable table = BoundaryDistanceTable::euclidean(locs, locs);
    const TransformInputs in{&K, &moments, &basis, &table};
    const double alpha = 1e-2 * K.K.trace() / static_cast<double>(K.size());
    const std::vector<double> ys = range(-0.2, 0.2, 0.05), ss = range(D, 0.3, D);
    std::vector<double> log_h, log_err;
    std::string per_h;
    for (double h : {0.0125, 0.025, 0.05, 0.1}) {
      const TransformSamples t = build_transform(in, ys, ss, h, alpha);
      double sum = 0.0, n = 0.0;
      for (const TransformPoint& p : t.points) {
        if (!p.usable()) continue;
        const double dy = p.phi1 - p.y, ds = p.phi2 + p.s + 0.5 * h;
        sum += dy * dy + ds * ds;
        n += 1;
      }
      const double rms = std::sqrt(sum / n);
      log_h.push_back(std::log(h));
      log_err.push_back(std::log(rms));
      per_h += " " + fmt("%g", h) + ":" + fmt("%.2e", rms);
    }
    r.value = least_squares_slope(log_h, log_err);
    r.passed = r.value >= r.tolerance;
    r.detail = "slope (need >=); RMS Phi error by h" + per_h;
  });
}

CheckResult check_metric() {
  return timed(8, "metric-identity-recovery", 5e-2, 900.0, [](CheckResult& r) {
    // Laplacian identity on three metrics. A conformal one would be exact in 2D.
    const SpeedModel lens = SpeedModel::lens();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> coef(-0.2, 0.2);
    double q[6];
    for (double& v : q) v = coef(rng);
    const std::vector<std::pair<std::string, InverseMetric>> metrics = {
        {"diagonal",
         [&](Vec2 p) {
           const double c = lens(p);
           return std::array<double, 3>{c * c, 0.0, 1.0};
         }},
        {"sheared",
         [](Vec2 p) {
           return std::array<double, 3>{1.0 + 0.3 * std::sin(2 * p.x1) * std::cos(p.x2), 0.2 * std::sin(p.x1 + p.x2),
                                        1.0 + 0.3 * std::cos(2 * p.x1 - p.x2)};
         }},
        {"random",
         [q](Vec2 p) {
           const double a = q[0] * std::sin(3 * p.x1) + q[1] * std::cos(2 * p.x2);
           const double b = q[2] * std::sin(p.x1 + 2 * p.x2) + q[3] * std::cos(3 * p.x1);
           const double c = q[4] * std::cos(p.x1 - p.x2) + q[5] * std::sin(4 * p.x2);
           // A A^T + I with A = [[a, b], [c, a]] keeps the form positive definite.
           return std::array<double, 3>{1.0 + a * a + b * b, a * c + b * a, 1.0 + c * c + a * a};
         }},
    };
    std::vector<Vec2> points;
    for (double x1 : {-0.3, 0.0, 0.25}) {
      for (double x2 : {-0.4, -0.2}) points.push_back({x1, x2});
    }
    double min_order = std::numeric_limits<double>::infinity();
    std::string orders;
    for (const auto& [name, metric] : metrics) {
      const IdentityReport rep = laplacian_identity_check(metric, points, 0.1, 3);
      const double order = rep.orders.back();
      min_order = std::min(min_order, order);
      orders += " " + name + "=" + fmt("%.2f", order);
    }

    // Oracle interior data on the lens and recovery against the geodesic Jacobian.
    const double T = 0.5, D = 0.025;
    BasisParams bp;
    bp.T = T;
    bp.t_first = D;
    bp.t_last = T - D;
    bp.dt_s = D;
    bp.dx_s = D;
    bp.a = 1381.6;
    bp.quad_dt = D / 10.0;
    bp.quad_dx = D / 2.0;
    bp.half_width = 0.5;
    const BasisSpec basis(bp);
    const GramMatrix G(basis);
    const SimGrid grid = covering_grid(bp.half_width, -0.1, 2.0 * T, 1.0, 0.00625, bp.quad_dt);
    const SpeedField field = SpeedField::sample(lens, grid.space);
    ChartGrid chart;
    chart.ys = range(-0.2, 0.2, 0.00625);
    chart.ss = range(0.075, 0.3, 0.00625);
    const InternalDataTable table = sample_Lg_oracle(field, lens.speed, basis, chart, grid);
    RecoverOptions opts;
    opts.alpha = 1e-10;
    const MetricSamples m = recover_metric(table, G, opts);
    double e_ss = 0.0, e_ys = 0.0, sq = 0.0, n = 0.0;
    for (std::size_t p = 0; p < chart.size(); ++p) {
      if (!m.evaluated[p]) continue;
      const double gyy = semigeodesic_gyy(lens.speed, chart.y(p), chart.s(p), 1e-3);
      e_ss = std::max(e_ss, std::abs(m.g_ss[p] - 1.0));
      e_ys = std::max(e_ys, std::abs(m.g_ys[p]));
      sq += std::pow(m.g_yy[p] / gyy - 1.0, 2);
      n += 1;
    }
    const double yy_rms = n > 0 ? std::sqrt(sq / n) : std::numeric_limits<double>::infinity();
    r.value = std::max(e_ss, e_ys);
    r.passed = min_order >= 1.9 && e_ss <= 5e-2 && e_ys <= 5e-2 && yy_rms <= 0.1;
    r.detail = "max(|g^ss-1|, |g^ys|); identity orders" + orders + " (need >= 1.9); |g^ss-1|=" + fmt("%.2e", e_ss) +
               " |g^ys|=" + fmt("%.2e", e_ys) + " g^yy RMS=" + fmt("%.2f%%", 100 * yy_rms) + " (tol 10%) points=" +
               std::to_string(static_cast<std::size_t>(n));
  });
}

CheckResult check_solver_convergence() {
  return timed(9, "solver-convergence", 1.9, 600.0, [](CheckResult& r) {
    const double a = 1381.6, tc = 0.1, T = 0.5, dtr = 0.0025;
    const SpeedModel lens = SpeedModel::lens();
    BoundarySource source;
    source.terms.push_back({[=](double x) { return std::exp(-a * x * x); }, -0.3, 0.3,
                            [=](double t) { return std::exp(-a * (t - tc) * (t - tc)); }});
    ReceiverSpec rec;
    rec.times = range(0.0, T, dtr);
    rec.positions = range(-0.5, 0.5, 0.025);
    std::vector<Matrix> traces;
    for (double dx : {0.0125, 0.00625, 0.003125, 0.0015625}) {
      const SimGrid grid = covering_grid(0.5, -0.1, T, 1.0, dx, dtr);
      traces.push_back(simulate(SpeedField::sample(lens, grid.space), source, grid, rec).traces);
    }
    double min_order = std::numeric_limits<double>::infinity();
    std::string orders;
    for (std::size_t l = 0; l + 2 < traces.size(); ++l) {
      const double order = std::log2((traces[l] - traces[l + 1]).norm() / (traces[l + 1] - traces[l + 2]).norm());
      min_order = std::min(min_order, order);
      orders += " " + fmt("%.2f", order);
    }
    r.value = min_order;
    r.passed = min_order >= r.tolerance;
    r.detail = "min order (need >=); successive orders" + orders;
  });
}

std::vector<CheckResult> run_checks(CheckLevel level) {
  std::vector<CheckResult> out;
  out.push_back(check_connecting_operator());
  out.push_back(check_b_functional());
  out.push_back(check_time_integration());
  if (level == CheckLevel::full) {
    out.push_back(check_constant_pipeline());
    out.push_back(check_cap_volume());
    out.push_back(check_lens_reconstruction());
    out.push_back(check_h_scaling());
  }
  out.push_back(check_metric());
  out.push_back(check_solver_convergence());
  return out;
}

}  // namespace bcwave
