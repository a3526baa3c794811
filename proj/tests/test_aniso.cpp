#include "bcwave/aniso.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace bcwave;

namespace {

std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> v;
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / step));
  for (std::size_t k = 0; k <= n; ++k) v.push_back(lo + step * static_cast<double>(k));
  return v;
}

const std::vector<Vec2> kPoints = {{-0.3, -0.4}, {0.0, -0.2}, {0.25, -0.6}};

BasisParams chart_basis() {
  BasisParams p;
  p.T = 0.5;
  p.t_first = 0.025;
  p.t_last = 0.475;
  p.half_width = 0.5;
  return p;
}

}  // namespace

TEST_CASE("Laplacian identity") {
  SUBCASE("Euclidean metric is exact") {
    const IdentityReport r = laplacian_identity_check([](Vec2) { return std::array<double, 3>{1, 0, 1}; }, kPoints, 0.1);
    for (double e : r.residuals) CHECK(e <= 1e-10);
  }
  SUBCASE("a conformal metric is exact in two dimensions") {
    const SpeedModel lens = SpeedModel::lens();
    const IdentityReport r = laplacian_identity_check(
        [&](Vec2 p) {
          const double c = lens(p);
          return std::array<double, 3>{c * c, 0.0, c * c};
        },
        kPoints, 0.1);
    for (double e : r.residuals) CHECK(e <= 1e-10);
  }
  SUBCASE("a smooth anisotropic metric converges at second order") {
    const IdentityReport r = laplacian_identity_check(
        [](Vec2 p) {
          const double a = 0.3 * std::sin(2 * p.x1 + p.x2), b = 0.2 * std::cos(p.x1 - 3 * p.x2);
          return std::array<double, 3>{1 + a * a, a * b, 1 + b * b};
        },
        kPoints, 0.1, 4);
    REQUIRE(r.orders.size() == 3);
    for (double o : r.orders) CHECK(o == doctest::Approx(2.0).epsilon(0.05));
  }
}

TEST_CASE("semi-geodesic g^yy") {
  CHECK(semigeodesic_gyy(SpeedModel::constant(1.0).speed, 0.1, 0.3, 1e-3) == doctest::Approx(1.0).epsilon(1e-9));
  // Depth-only speed: rays stay vertical, so d_y x = (1, 0) and g^yy = c^2.
  const SpeedModel layered = SpeedModel::layered(1.0, -0.5);
  const double s = 0.4;
  const GeodesicPath path = trace_geodesic(layered.speed, 0.0, s, 1e-3);
  const double c = layered(path.point_at(s));
  CHECK(semigeodesic_gyy(layered.speed, 0.0, s, 1e-3) == doctest::Approx(c * c).epsilon(1e-6));
}

TEST_CASE("metric from interior data") {
  const BasisSpec basis(chart_basis());
  const GramMatrix G(basis);
  const SimGrid sim = covering_grid(basis.params().half_width, -0.1, 2 * basis.params().T, 1.0, 0.00625,
                                    basis.params().quad_dt);
  ChartGrid chart;
  chart.ys = grid(-0.15, 0.15, 0.00625);
  chart.ss = grid(0.075, 0.25, 0.00625);

  SUBCASE("Euclidean half-space gives the identity metric") {
    const SpeedModel one = SpeedModel::constant(1.0);
    const InternalDataTable table =
        sample_Lg_oracle(SpeedField::sample(one, sim.space), one.speed, basis, chart, sim);
    CHECK(table.valid_count() == chart.size());
    RecoverOptions opts;
    opts.alpha = 1e-10;
    const MetricSamples m = recover_metric(table, G, opts);
    std::size_t n = 0;
    for (std::size_t p = 0; p < chart.size(); ++p) {
      if (!m.evaluated[p]) continue;
      ++n;
      CHECK(std::abs(m.g_yy[p] - 1.0) <= 2e-2);
      CHECK(std::abs(m.g_ys[p]) <= 2e-2);
      CHECK(std::abs(m.g_ss[p] - 1.0) <= 2e-2);
    }
    CHECK(n > chart.size() / 2);

    SUBCASE("heavy regularization drives the metric to zero") {
      RecoverOptions heavy;
      heavy.alpha = 1e8;
      const MetricSamples z = recover_metric(table, G, heavy);
      for (std::size_t p = 0; p < chart.size(); ++p) {
        if (z.evaluated[p]) CHECK(std::abs(z.g_yy[p]) < 1e-3);
      }
    }
  }
}

TEST_CASE("data-mode tables are linear in K") {
  BasisParams p = chart_basis();
  p.T = 0.3;
  p.t_last = 0.275;
  p.half_width = 0.2;
  const BasisSpec basis(p);
  const GramMatrix G(basis);
  const auto N = static_cast<Eigen::Index>(basis.size());
  ConnectingMatrix K0;
  K0.K = G.dense() + 0.1 * Matrix::Identity(N, N);
  const Matrix b = b_vector(basis);
  const std::vector<double> locs(basis.locations().begin(), basis.locations().end());
  const BoundaryDistanceTable dist = BoundaryDistanceTable::euclidean(locs, locs);
  ChartGrid chart;
  chart.ys = {-0.05, 0.0, 0.05};
  chart.ss = {0.1, 0.15};
  std::vector<CapSource> caps;
  for (std::size_t q = 0; q < chart.size(); ++q) caps.push_back(cap_source(K0, b, {chart.y(q), chart.s(q), 0.05, 1e-2}, basis, dist));

  ConnectingMatrix K1, K2, K12, Kz;
  K1.K = Matrix::Random(N, N);
  K2.K = Matrix::Random(N, N);
  K12.K = K1.K + K2.K;
  Kz.K = Matrix::Zero(N, N);
  const InternalDataTable t1 = sample_Lg_data(caps, K1, basis, G, chart);
  const InternalDataTable t2 = sample_Lg_data(caps, K2, basis, G, chart);
  const InternalDataTable t12 = sample_Lg_data(caps, K12, basis, G, chart);
  CHECK((t12.values - t1.values - t2.values).norm() <= 1e-12 * t12.values.norm());
  CHECK((t12.values_dd - t1.values_dd - t2.values_dd).norm() <= 1e-12 * t12.values_dd.norm());
  CHECK(sample_Lg_data(caps, Kz, basis, G, chart).values.norm() == 0.0);
}
