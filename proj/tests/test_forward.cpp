#include "bcwave/forward.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace bcwave;

namespace {

BoundarySource gaussian_source(double x0, double t0, double a = 1381.6) {
  BoundarySource b;
  b.terms.push_back({[=](double x) { return std::exp(-a * (x - x0) * (x - x0)); }, x0 - 0.2, x0 + 0.2,
                     [=](double t) { return std::exp(-a * (t - t0) * (t - t0)); }});
  return b;
}

ReceiverSpec line_receivers(double T, double dt, double half_width, double dx) {
  ReceiverSpec r;
  for (double t = 0.0; t <= T + 1e-12; t += dt) r.times.push_back(t);
  for (double x = -half_width; x <= half_width + 1e-12; x += dx) r.positions.push_back(x);
  return r;
}

}  // namespace

TEST_CASE("a grid violating the CFL bound is rejected") {
  SimGrid grid = covering_grid(0.3, -0.1, 0.5, 1.0, 0.01, 0.0025);
  CHECK_NOTHROW(grid.validate(1.0));
  grid.dt = 0.6 * grid.space.d1;
  CHECK_THROWS_AS(grid.validate(1.0), ConfigError);
}

TEST_CASE("zero source gives zero traces and snapshots") {
  const SimGrid grid = covering_grid(0.3, -0.1, 0.4, 1.0, 0.01, 0.0025);
  const SpeedField field = SpeedField::sample(SpeedModel::lens(), grid.space);
  SimulateOptions opts;
  opts.snapshot_times = {0.3};
  const SimulationResult r = simulate(field, BoundarySource{}, grid, line_receivers(0.4, 0.0025, 0.3, 0.05), opts);
  CHECK(r.traces.cwiseAbs().maxCoeff() == 0.0);
  for (double v : r.snapshots[0].values) CHECK(v == 0.0);
}

TEST_CASE("final state is linear in the source") {
  const SimGrid grid = covering_grid(0.3, -0.1, 0.4, 1.0, 0.01, 0.0025);
  const SpeedField field = SpeedField::sample(SpeedModel::lens(), grid.space);
  const BoundarySource f = gaussian_source(-0.05, 0.1), g = gaussian_source(0.1, 0.15);
  BoundarySource fg = f;
  fg.terms.push_back(g.terms.front());
  const InteriorSnapshot uf = final_state(field, f, grid, 0.3), ug = final_state(field, g, grid, 0.3);
  const InteriorSnapshot ufg = final_state(field, fg, grid, 0.3);
  double scale = 0.0, worst = 0.0;
  for (std::size_t p = 0; p < ufg.values.size(); ++p) {
    scale = std::max(scale, std::abs(ufg.values[p]));
    worst = std::max(worst, std::abs(ufg.values[p] - uf.values[p] - ug.values[p]));
  }
  CHECK(worst <= 1e-13 * scale);
}

TEST_CASE("discrete energy is conserved once the source is off") {
  const SimGrid grid = covering_grid(0.3, -0.1, 0.6, 1.0, 0.01, 0.0025);
  const SpeedField field = SpeedField::sample(SpeedModel::lens(), grid.space);
  SimulateOptions opts;
  opts.energy = true;
  const SimulationResult r = simulate(field, gaussian_source(0.0, 0.0), grid, {}, opts);
  // The source is below 1e-30 after t = 0.25.
  const auto first = static_cast<std::size_t>((0.3 - grid.t_start) / grid.dt);
  const double e0 = r.energy[first];
  CHECK(e0 > 0.0);
  for (std::size_t n = first; n < r.energy.size(); ++n) CHECK(std::abs(r.energy[n] - e0) <= 1e-10 * e0);
}

TEST_CASE("traces vanish before the first arrival") {
  const SimGrid grid = covering_grid(0.6, -0.1, 0.8, 1.0, 0.01, 0.0025);
  const SpeedField field = SpeedField::sample(SpeedModel::constant(1.0), grid.space);
  const ReceiverSpec rec = line_receivers(0.8, 0.0025, 0.6, 0.6);  // x = -0.6, 0, 0.6
  const Matrix tr = simulate(field, gaussian_source(0.0, 0.1), grid, rec).traces;
  const double peak = tr.cwiseAbs().maxCoeff();
  // The pulse is below 1e-6 of its peak beyond 0.1 from its centre in both x and t, so at
  // |x| = 0.6 nothing arrives before t = 0.1 + 0.5 - 0.2.
  for (std::size_t k = 0; k < rec.times.size(); ++k) {
    if (rec.times[k] > 0.35) break;
    CHECK(std::abs(tr(static_cast<Eigen::Index>(k), 0)) <= 1e-5 * peak);
    CHECK(std::abs(tr(static_cast<Eigen::Index>(k), 2)) <= 1e-5 * peak);
  }
  CHECK(tr.col(2).cwiseAbs().maxCoeff() > 1e-2 * peak);
}

TEST_CASE("second-order self-convergence") {
  const double T = 0.4;
  const BoundarySource src = gaussian_source(0.0, 0.1);
  const ReceiverSpec rec = line_receivers(T, 0.0025, 0.4, 0.05);
  std::vector<Matrix> tr;
  for (double dx : {0.02, 0.01, 0.005}) {
    const SimGrid grid = covering_grid(0.4, -0.1, T, 1.0, dx, 0.0025);
    tr.push_back(simulate(SpeedField::sample(SpeedModel::lens(), grid.space), src, grid, rec).traces);
  }
  const double order = std::log2((tr[0] - tr[1]).norm() / (tr[1] - tr[2]).norm());
  CHECK(order >= 1.9);
}

TEST_CASE("N-to-D recording") {
  BasisParams p;
  p.T = 0.2;
  p.t_first = 0.025;
  p.t_last = 0.175;
  p.half_width = 0.25;
  const BasisSpec basis(p);
  ReceiverLattice lat;
  lat.T = p.T;
  lat.half_width = 0.3;
  const SimGrid grid = covering_grid(lat.half_width, -0.1, 2 * p.T, 1.0, 0.0125, lat.dt_r);
  const SpeedField field = SpeedField::sample(SpeedModel::constant(1.0), grid.space);
  const TraceSet shifted = record_ndmap(field, basis, grid, lat);
  RecordOptions no_shift;
  no_shift.allow_lateral_shift = false;
  const TraceSet direct = record_ndmap(field, basis, grid, lat, no_shift);

  SUBCASE("one trace per basis function on the full lattice") {
    CHECK(shifted.size() == basis.size());
    CHECK(static_cast<std::size_t>(shifted.trace(0).rows()) == lat.nt());
    CHECK(static_cast<std::size_t>(shifted.trace(0).cols()) == lat.nx());
  }
  SUBCASE("lateral shifts reproduce separate simulations") {
    CHECK(shifted.generators().size() < direct.generators().size());
    double worst = 0.0, scale = 0.0;
    for (std::size_t m = 0; m < basis.size(); ++m) {
      worst = std::max(worst, (shifted.trace(m) - direct.trace(m)).cwiseAbs().maxCoeff());
      scale = std::max(scale, direct.trace(m).cwiseAbs().maxCoeff());
    }
    CHECK(worst <= 1e-12 * scale);
  }
  SUBCASE("combine is the coefficient-weighted sum") {
    Matrix coeffs = Matrix::Zero(static_cast<Eigen::Index>(basis.n_times()), static_cast<Eigen::Index>(basis.n_locations()));
    coeffs(1, 2) = 2.0;
    coeffs(3, 0) = -0.5;
    const Matrix expect = 2.0 * shifted.trace(basis.index(1, 2)) - 0.5 * shifted.trace(basis.index(3, 0));
    CHECK((shifted.combine(coeffs) - expect).norm() <= 1e-12 * expect.norm());
  }
  SUBCASE("trace sets round-trip through files") {
    const auto dir = std::filesystem::temp_directory_path() / "bcwave_test_traces";
    std::filesystem::remove_all(dir);
    shifted.save(dir);
    const TraceSet back = TraceSet::load(dir);
    CHECK(back.fingerprint() == shifted.fingerprint());
    CHECK(back.trace(5) == shifted.trace(5));
    std::filesystem::remove_all(dir);
  }
}
