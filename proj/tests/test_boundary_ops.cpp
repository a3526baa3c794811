#include "bcwave/boundary_ops.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace bcwave;

namespace {

std::vector<double> sample(double T, std::size_t n, double (*f)(double)) {
  std::vector<double> v(n + 1);
  for (std::size_t k = 0; k <= n; ++k) v[k] = f(T * static_cast<double>(k) / static_cast<double>(n));
  return v;
}

}  // namespace

TEST_CASE("time reversal") {
  const std::size_t n = 100;
  const std::vector<double> f = sample(1.0, n, [](double t) { return t; });
  const std::vector<double> rf = apply_R(f);
  for (std::size_t k = 0; k <= n; ++k) CHECK(rf[k] == doctest::Approx(1.0 - f[k]).epsilon(1e-14));
  CHECK(apply_R(rf) == f);
}

TEST_CASE("J integrates over [t, 2T - t]") {
  const std::size_t n = 200;
  const double dt = 1.0 / n;
  SUBCASE("constant") {
    const std::vector<double> jf = apply_J(sample(2.0, 2 * n, [](double) { return 1.0; }), dt);
    REQUIRE(jf.size() == n + 1);
    for (std::size_t k = 0; k <= n; ++k) CHECK(jf[k] == doctest::Approx(2.0 - 2.0 * k * dt).epsilon(1e-12));
  }
  SUBCASE("linear") {
    const std::vector<double> jf = apply_J(sample(2.0, 2 * n, [](double s) { return s; }), dt);
    for (std::size_t k = 0; k <= n; ++k) CHECK(jf[k] == doctest::Approx(2.0 - 2.0 * k * dt).epsilon(1e-12));
  }
  SUBCASE("exponential, second order") {
    double err[2];
    for (int level = 0; level < 2; ++level) {
      const std::size_t m = n << level;
      const std::vector<double> jf = apply_J(sample(2.0, 2 * m, [](double s) { return std::exp(s); }), 1.0 / m);
      err[level] = 0.0;
      for (std::size_t k = 0; k <= m; ++k) {
        const double t = static_cast<double>(k) / m;
        err[level] = std::max(err[level], std::abs(jf[k] - (std::exp(2.0 - t) - std::exp(t))));
      }
    }
    CHECK(err[0] < 1e-4);
    CHECK(std::log2(err[0] / err[1]) == doctest::Approx(2.0).epsilon(0.05));
  }
}

TEST_CASE("I is the cumulative integral") {
  const std::size_t n = 400;
  const double dt = 1.0 / n;
  const std::vector<double> one = apply_I(sample(1.0, n, [](double) { return 1.0; }), dt);
  for (std::size_t k = 0; k <= n; ++k) CHECK(one[k] == doctest::Approx(k * dt).epsilon(1e-12));
  const std::vector<double> c = apply_I(sample(1.0, n, [](double t) { return std::cos(t); }), dt);
  for (std::size_t k = 0; k <= n; ++k) CHECK(std::abs(c[k] - std::sin(k * dt)) <= dt * dt);
}

TEST_CASE("connecting operator") {
  BasisParams p;
  p.T = 0.3;
  p.t_first = 0.1;
  p.t_last = 0.2;
  p.half_width = 0.1;
  p.quad_dt = 0.00125;
  p.quad_dx = 0.00625;
  const BasisSpec basis(p);
  const GramMatrix G(basis);
  ReceiverLattice lat;
  lat.dt_r = p.quad_dt;
  lat.dx_r = p.quad_dx;
  lat.T = p.T;
  lat.half_width = p.half_width;

  SUBCASE("zero traces give zero K") {
    const TraceSet empty(lat, {}, {});
    CHECK_THROWS(assemble_K(empty, basis, G));
    std::vector<TraceEntry> entries(basis.size());
    TraceGenerator zero{0, -lat.r_max(), Matrix::Zero(static_cast<Eigen::Index>(lat.nt()), static_cast<Eigen::Index>(lat.nx()))};
    const ConnectingMatrix K = assemble_K(TraceSet(lat, {zero}, entries), basis, G);
    CHECK(K.K.norm() == 0.0);
  }

  SUBCASE("matches interior inner products of final states on c = 1") {
    const SimGrid grid = covering_grid(lat.half_width + 0.1, -0.1, 2 * p.T, 1.0, 0.00625, lat.dt_r);
    const SpeedField field = SpeedField::sample(SpeedModel::constant(1.0), grid.space);
    const ConnectingMatrix K = assemble_K(record_ndmap(field, basis, grid, lat), basis, G);
    std::vector<InteriorSnapshot> u;
    for (std::size_t m = 0; m < basis.size(); ++m) u.push_back(final_state(field, basis_source(basis, m), grid, p.T));
    Matrix oracle(basis.size(), basis.size());
    for (std::size_t a = 0; a < basis.size(); ++a) {
      for (std::size_t b = 0; b < basis.size(); ++b) oracle(a, b) = interior_inner(u[a], u[b], field);
    }
    CHECK((K.K - oracle).norm() / oracle.norm() <= 2e-2);
    CHECK(K.symmetry_defect() <= 1e-2);

    SUBCASE("masking zeroes rows and columns") {
      const ConnectingMatrix Km = K.masked({0, 3, 7});
      CHECK(Km.K(0, 3) == K.K(0, 3));
      CHECK(Km.K.row(1).norm() == 0.0);
      CHECK(Km.K.col(2).norm() == 0.0);
    }
    SUBCASE("binary round-trip checks the trace fingerprint") {
      const auto path = std::filesystem::temp_directory_path() / "bcwave_test_K.bin";
      K.save(path);
      CHECK(ConnectingMatrix::load(path, K.trace_fingerprint).K == K.K);
      CHECK_THROWS_AS(ConnectingMatrix::load(path, K.trace_fingerprint + 1), ProvenanceError);
      std::filesystem::remove(path);
      std::filesystem::remove(path.string() + ".manifest");
    }
  }
}
