#include "bcwave/control.hpp"

#include <doctest.h>

#include <cmath>

using namespace bcwave;

namespace {

std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> v;
  for (double x = lo; x <= hi + 1e-12; x += step) v.push_back(x);
  return v;
}

}  // namespace

TEST_CASE("tau for a cap on c = 1") {
  const std::vector<double> xs = grid(-1.0, 1.0, 0.05);
  const BoundaryDistanceTable table = BoundaryDistanceTable::euclidean({0.0}, xs);
  const auto [tau1, tau2] = tau_for_cap(0.0, 0.3, 0.2, 1.0, table);
  for (double x : xs) {
    CHECK(tau1(x) == doctest::Approx(0.3));
    CHECK(tau2(x) == doctest::Approx(std::max(0.5 - std::abs(x), 0.3)));
  }
  SUBCASE("h = 0 gives tau2 = tau1") {
    const auto [a, b] = tau_for_cap(0.0, 0.3, 0.0, 1.0, table);
    for (double x : xs) CHECK(b(x) == a(x));
  }
  CHECK_THROWS_AS(tau_for_cap(0.0, 0.9, 0.2, 1.0, table), ConfigError);
}

TEST_CASE("masks on the default time grid") {
  const BasisSpec basis{BasisParams{}};
  const double lo = basis.locations().front(), hi = basis.locations().back();
  CHECK(mask_for_tau(TauFunction::constant(1.0, lo, hi), basis).size() == basis.size());
  CHECK(mask_for_tau(TauFunction::constant(0.0, lo, hi), basis).empty());
  const auto half = mask_for_tau(TauFunction::constant(0.5, lo, hi), basis);
  CHECK(half.size() == 20 * basis.n_locations());
  CHECK(basis.unindex(half.front()).i == 19);  // t = 0.5
}

TEST_CASE("masked Tikhonov solves") {
  SUBCASE("identity operator") {
    ConnectingMatrix K;
    K.K = Matrix::Identity(3, 3);
    Matrix b = Matrix::Zero(1, 3);
    b(0, 0) = 1.0;
    const Vector f = solve_control(K, b, {0, 1, 2}, 1.0);
    CHECK(f[0] == doctest::Approx(0.5));
    CHECK(f[1] == 0.0);
    CHECK(f[2] == 0.0);
  }
  SUBCASE("solution norm decreases with alpha") {
    ConnectingMatrix K;
    const Matrix A = Matrix::Random(12, 12);
    K.K = A * A.transpose();
    const Matrix b = Matrix::Random(1, 12);
    const std::vector<std::size_t> mask = {0, 2, 3, 5, 8, 9, 11};
    double last = std::numeric_limits<double>::infinity();
    for (double alpha : {1e-6, 1e-4, 1e-2, 1.0, 100.0}) {
      const Vector f = solve_control(K, b, mask, alpha);
      CHECK(f.norm() <= last);
      last = f.norm();
      CHECK(f[1] == 0.0);
    }
  }
  CHECK_THROWS(solve_control(ConnectingMatrix{Matrix::Identity(2, 2)}, Matrix::Ones(1, 2), {0, 1}, -1.0));
}

TEST_CASE("cap sources") {
  BasisParams p;
  p.T = 0.4;
  p.t_first = 0.025;
  p.t_last = 0.375;
  p.half_width = 0.3;
  const BasisSpec basis(p);
  // A positive definite stand-in for K with the right size.
  ConnectingMatrix K;
  K.K = GramMatrix(basis).dense() + 0.1 * Matrix::Identity(basis.size(), basis.size());
  const Matrix b = b_vector(basis);
  const std::vector<double> locs(basis.locations().begin(), basis.locations().end());
  const BoundaryDistanceTable table = BoundaryDistanceTable::euclidean(locs, locs);

  SUBCASE("h = 0 gives a zero source") {
    const CapSource c = cap_source(K, b, {0.0, 0.2, 0.0, 1e-3}, basis, table);
    CHECK(c.psi.norm() == 0.0);
    CHECK(c.volume == 0.0);
  }
  SUBCASE("the shared-factor solver agrees with direct solves") {
    const Matrix sym = symmetric_part(K);
    const CapSolver solver(sym, b, basis, 0.2, 1e-3);
    for (double y : {-0.1, 0.0, 0.15}) {
      const CapSource fast = solver.solve(y, 0.05, table);
      const CapSource direct = cap_source(K, b, {y, 0.2, 0.05, 1e-3}, basis, table);
      CHECK(fast.mask2 == direct.mask2);
      CHECK((fast.psi - direct.psi).norm() <= 1e-9 * direct.psi.norm());
      CHECK(fast.volume == doctest::Approx(direct.volume).epsilon(1e-9));
    }
  }
}
