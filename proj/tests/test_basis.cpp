#include "bcwave/basis.hpp"

#include <doctest.h>

#include <cmath>

using namespace bcwave;

namespace {

BasisParams small_params() {
  BasisParams p;
  p.T = 0.5;
  p.t_first = 0.025;
  p.t_last = 0.475;
  p.half_width = 0.3;
  return p;
}

}  // namespace

TEST_CASE("default parameters give the 39 x 241 basis") {
  const BasisSpec basis{BasisParams{}};
  CHECK(basis.n_times() == 39);
  CHECK(basis.n_locations() == 241);
  CHECK(basis.size() == 9399);
}

TEST_CASE("index mapping is time-major") {
  const BasisSpec basis(small_params());
  for (std::size_t m = 0; m < basis.size(); ++m) {
    const BasisIndex ij = basis.unindex(m);
    CHECK(basis.index(ij.i, ij.j) == m);
  }
  CHECK(basis.unindex(basis.n_locations()).i == 1);
}

TEST_CASE("width parameter gives an e-folding half-width near the source spacing") {
  CHECK(std::sqrt(1.0 / 1381.6) == doctest::Approx(0.0269).epsilon(1e-3));
}

TEST_CASE("Gram matrix") {
  const BasisSpec basis(small_params());
  const GramMatrix G(basis);
  SUBCASE("unit diagonal") {
    for (std::size_t m = 0; m < basis.size(); m += 7) CHECK(G.entry(m, m) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("neighbours match the closed-form product of Gaussians") {
    const std::size_t i = 10, j = 12;
    const double expected = std::exp(-1381.6 * 0.025 * 0.025 / 2.0);
    CHECK(expected == doctest::Approx(0.6494).epsilon(1e-4));
    CHECK(G.entry(basis.index(i, j), basis.index(i, j + 1)) == doctest::Approx(expected).epsilon(1e-6));
    CHECK(G.entry(basis.index(i, j), basis.index(i + 1, j)) == doctest::Approx(expected).epsilon(1e-6));
  }
  SUBCASE("symmetric positive definite") {
    const Matrix d = G.dense();
    CHECK((d - d.transpose()).norm() == 0.0);
    CHECK(G.min_pivot() > 0.0);
  }
  SUBCASE("doubling the quadrature resolution barely moves the entries") {
    BasisParams fine = small_params();
    fine.quad_dt /= 2;
    fine.quad_dx /= 2;
    const GramMatrix Gf{BasisSpec(fine)};
    // Functions cut by the domain edge carry a first-order trapezoid error; compare the rest.
    const double margin = 0.15;
    auto inside = [&](std::size_t m) {
      const BasisIndex ij = basis.unindex(m);
      const double t = basis.times()[ij.i], x = basis.locations()[ij.j];
      return t > margin && t < basis.params().T - margin && std::abs(x) < basis.params().half_width - margin;
    };
    double worst = 0.0;
    for (std::size_t m = 0; m < basis.size(); ++m) {
      if (!inside(m)) continue;
      for (std::size_t n = 0; n < basis.size(); ++n) {
        if (inside(n)) worst = std::max(worst, std::abs(Gf.entry(m, n) - G.entry(m, n)));
      }
    }
    CHECK(worst <= 1e-8);
  }
}

TEST_CASE("projection") {
  const BasisSpec basis(small_params());
  const GramMatrix G(basis);
  SUBCASE("a basis function projects to its unit vector") {
    const std::size_t k = basis.index(7, 9);
    const CoeffVector c = project([&](double t, double x) { return basis.value(k, t, x); }, basis, G);
    Matrix e = Matrix::Zero(c.coeffs.rows(), c.coeffs.cols());
    e(7, 9) = 1.0;
    CHECK((c.coeffs - e).cwiseAbs().maxCoeff() <= 1e-8);
  }
  SUBCASE("zero projects to zero") {
    const CoeffVector c = project([](double, double) { return 0.0; }, basis, G);
    CHECK(c.coeffs.norm() == 0.0);
  }
  SUBCASE("synthesis reproduces functions in the span") {
    Matrix coeffs = Matrix::Random(static_cast<Eigen::Index>(basis.n_times()), static_cast<Eigen::Index>(basis.n_locations()));
    const Matrix field = basis.synthesize(coeffs);
    const Matrix again = basis.synthesize(G.solve(basis.inner_products(field)));
    CHECK((again - field).norm() <= 1e-10 * field.norm());
  }
  SUBCASE("[b] for b = T - t follows the Gaussian moment") {
    const BasisParams& p = basis.params();
    const auto& lat = basis.lattice();
    std::vector<double> b(lat.nt()), one(lat.nx(), 1.0);
    for (std::size_t k = 0; k < lat.nt(); ++k) b[k] = p.T - lat.t[k];
    const Matrix ip = basis.inner_products(b, one);
    const std::size_t i = 8, j = 12;
    // Integral of exp(-a r^2) over the plane is pi / a; the L2 normalization is (pi / 2a)^(-1/2).
    const double mass = (M_PI / p.a) / std::sqrt(M_PI / (2 * p.a));
    CHECK(ip(i, j) == doctest::Approx((p.T - basis.times()[i]) * mass).epsilon(1e-6));
  }
}

TEST_CASE("Ricker decomposition") {
  const BasisSpec basis{BasisParams{}};
  const RickerReport rep = ricker_decomposition_check(basis, 0.1, 1e-4);
  CHECK(rep.errors.size() == 39);
  CHECK(rep.errors[19] <= 1e-5);
  SUBCASE("row 4 error is the Taylor remainder at t = 0") {
    // phi - I^2 phi'' = p(0) + t p'(0) for a profile p = C exp(-a (t - 0.1)^2).
    const double a = 1381.6, tc = 0.1, T = 1.0;
    const double p0 = std::exp(-a * tc * tc), dp0 = 2 * a * tc * p0;
    // ||p0 + t dp0||^2 on [0, 1] over ||p||^2 = sqrt(pi / (2a)).
    const double num = p0 * p0 * T + p0 * dp0 * T * T + dp0 * dp0 * T * T * T / 3.0;
    CHECK(rep.errors[3] == doctest::Approx(std::sqrt(num / std::sqrt(M_PI / (2 * a)))).epsilon(1e-3));
  }
  SUBCASE("a profile with vanishing second derivative reports 1") {
    CHECK(ricker_decomposition_error([](double) { return 1.0; }, [](double) { return 0.0; }, 0.0, 1.0, 1e-3) == 1.0);
  }
}
