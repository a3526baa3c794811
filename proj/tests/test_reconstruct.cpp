#include "bcwave/reconstruct.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

using namespace bcwave;

namespace fs = std::filesystem;

namespace {

std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> v;
  for (double x = lo; x <= hi + 1e-12; x += step) v.push_back(x);
  return v;
}

TransformSamples samples_from(const std::function<Vec2(double, double)>& phi, std::vector<double> ys,
                              std::vector<double> ss) {
  TransformSamples t;
  t.ys = std::move(ys);
  t.ss = std::move(ss);
  t.h = 0.05;
  t.points.resize(t.ys.size() * t.ss.size());
  for (std::size_t i = 0; i < t.ys.size(); ++i) {
    for (std::size_t j = 0; j < t.ss.size(); ++j) {
      TransformPoint& p = t.at(i, j);
      p.y = t.ys[i];
      p.s = t.ss[j];
      const Vec2 x = phi(p.y, p.s);
      p.phi1 = x.x1;
      p.phi2 = x.x2;
      p.volume = 1.0;
    }
  }
  return t;
}

}  // namespace

TEST_CASE("smoothing spline") {
  const std::vector<double> x = grid(0.0, 1.0, 0.05);
  SUBCASE("reproduces a line and its slope") {
    std::vector<double> y;
    for (double v : x) y.push_back(2.0 - 3.0 * v);
    const SmoothingSpline s(x, y);
    CHECK(s(0.33) == doctest::Approx(2.0 - 0.99).epsilon(1e-8));
    CHECK(s.derivative(0.5) == doctest::Approx(-3.0).epsilon(1e-8));
  }
  SUBCASE("interpolates at lambda = 0") {
    std::vector<double> y;
    for (double v : x) y.push_back(std::sin(3 * v));
    SplineOptions o;
    o.lambda = 0.0;
    const SmoothingSpline s(x, y, o);
    for (std::size_t k = 0; k < x.size(); ++k) CHECK(s(x[k]) == doctest::Approx(y[k]).epsilon(1e-10));
  }
}

TEST_CASE("speed from exact coordinates") {
  SUBCASE("straight rays give c = 1") {
    TransformSamples t = samples_from([](double y, double s) { return Vec2{y, -s}; }, grid(-0.2, 0.2, 0.1),
                                      grid(0.025, 0.5, 0.025));
    speed_from_transform(t);
    for (const TransformPoint& p : t.points) CHECK(p.c_est == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("lens geodesics give c at the point within 2%") {
    const SpeedModel lens = SpeedModel::lens();
    TransformSamples t = samples_from(
        [&](double y, double s) { return trace_geodesic(lens.speed, y, s, 1e-3).points.back(); },
        grid(-0.2, 0.2, 0.1), grid(0.025, 0.5, 0.025));
    speed_from_transform(t);
    for (std::size_t i = 0; i < t.ys.size(); ++i) {
      for (std::size_t j = 1; j + 1 < t.ss.size(); ++j) {
        const TransformPoint& p = t.at(i, j);
        CHECK(p.c_est == doctest::Approx(lens({p.phi1, p.phi2})).epsilon(0.02));
      }
    }
  }
  SUBCASE("noise is smoothed to the level of the fit residual") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> noise(0.0, 1e-3);
    TransformSamples t = samples_from([&](double y, double s) { return Vec2{y + noise(rng), -s + noise(rng)}; },
                                      grid(0.0, 0.0, 0.1), grid(0.025, 0.5, 0.025));
    speed_from_transform(t);
    double worst = 0.0;
    for (std::size_t j = 2; j + 2 < t.ss.size(); ++j) worst = std::max(worst, std::abs(t.at(0, j).c_est - 1.0));
    CHECK(worst < 0.1);
  }
  SUBCASE("short columns are flagged") {
    TransformSamples t = samples_from([](double y, double s) { return Vec2{y, -s}; }, {0.0}, {0.1, 0.2, 0.3});
    speed_from_transform(t);
    for (const TransformPoint& p : t.points) {
      CHECK((p.flags & kNoSpeed) != 0u);
      CHECK(std::isnan(p.c_est));
    }
  }
}

TEST_CASE("harmonic functions") {
  for (const HarmonicFunction& h : {HarmonicFunction::one(), HarmonicFunction::x1(), HarmonicFunction::x2(),
                                    HarmonicFunction::polynomial(3, false), HarmonicFunction::polynomial(2, true)}) {
    const double e = 1e-4;
    for (Vec2 p : {Vec2{0.3, -0.2}, Vec2{-0.1, -0.7}}) {
      const double lap = h.value({p.x1 + e, p.x2}) + h.value({p.x1 - e, p.x2}) + h.value({p.x1, p.x2 + e}) +
                         h.value({p.x1, p.x2 - e}) - 4 * h.value(p);
      CHECK(std::abs(lap / (e * e)) < 1e-4);
    }
    for (double x : {-0.4, 0.0, 0.25}) {
      CHECK(h.boundary_value(x) == doctest::Approx(h.value({x, 0.0})));
      const double dx2 = (h.value({x, e}) - h.value({x, -e})) / (2 * e);
      CHECK(h.boundary_dx2(x) == doctest::Approx(dx2).epsilon(1e-6));
    }
  }
}

TEST_CASE("B functional") {
  BasisParams p;
  p.T = 0.3;
  p.t_first = 0.1;
  p.t_last = 0.2;
  p.half_width = 0.1;
  const BasisSpec basis(p);
  ReceiverLattice lat;
  lat.T = p.T;
  lat.half_width = 0.3;
  TraceMoments moments;
  moments.lattice = lat;
  moments.moments = Matrix::Random(static_cast<Eigen::Index>(basis.size()), static_cast<Eigen::Index>(lat.nx()));
  Vector f = Vector::Random(static_cast<Eigen::Index>(basis.size()));

  SUBCASE("phi = 1 reduces to <f, b>") {
    const Matrix b = b_vector(basis);
    const Vector bflat = Eigen::Map<const Vector>(b.data(), b.size());
    CHECK(b_functional(f, HarmonicFunction::one(), moments, basis) == doctest::Approx(f.dot(bflat)).epsilon(1e-12));
  }
  SUBCASE("f = 0 gives 0") {
    CHECK(b_functional(Vector::Zero(f.size()), HarmonicFunction::x2(), moments, basis) == 0.0);
  }
  SUBCASE("the row form agrees") {
    const Vector row = b_functional_row(HarmonicFunction::x2(), moments, basis);
    CHECK(b_functional(f, HarmonicFunction::x2(), moments, basis) == doctest::Approx(f.dot(row)).epsilon(1e-12));
  }
  SUBCASE("point value of 1 is 1") {
    CapSource cap;
    cap.psi = Vector::Random(static_cast<Eigen::Index>(basis.size()));
    CHECK(point_value_harmonic(cap, HarmonicFunction::one(), moments, basis) == doctest::Approx(1.0));
  }
}

TEST_CASE("files round-trip") {
  const fs::path dir = fs::temp_directory_path() / "bcwave_test_reconstruct";
  fs::remove_all(dir);
  fs::create_directories(dir);
  SUBCASE("transform samples") {
    TransformSamples t = samples_from([](double y, double s) { return Vec2{y + 0.01, -s - 0.02}; },
                                      grid(-0.1, 0.1, 0.05), grid(0.05, 0.3, 0.05));
    t.alpha = 1e-3;
    speed_from_transform(t);
    t.at(1, 2).flags = kNonMonotone;
    t.write_csv(dir / "t.csv");
    const TransformSamples back = TransformSamples::read_csv(dir / "t.csv");
    REQUIRE(back.points.size() == t.points.size());
    CHECK(back.ys == t.ys);
    CHECK(back.ss == t.ss);
    CHECK(back.at(1, 2).flags == kNonMonotone);
    for (std::size_t k = 0; k < t.points.size(); ++k) {
      CHECK(back.points[k].phi2 == t.points[k].phi2);
      CHECK(back.points[k].c_est == t.points[k].c_est);
    }
  }
  SUBCASE("cap tables") {
    CapTable c;
    c.ys = {-0.1, 0.1};
    c.ss = {0.1, 0.2, 0.3};
    c.h = 0.05;
    c.alpha = 2.5e-7;
    c.psi = Matrix::Random(6, 10);
    c.volumes = {1, 2, 3, 4, 5, 6};
    c.flags = {0, 1, 0, 0, 0, 0};
    c.trace_fingerprint = 0x0123456789abcdefULL;
    c.save(dir / "caps");
    const CapTable back = CapTable::load(dir / "caps");
    CHECK(back.ys == c.ys);
    CHECK(back.ss == c.ss);
    CHECK(back.psi == c.psi);
    CHECK(back.flags == c.flags);
    CHECK(back.trace_fingerprint == c.trace_fingerprint);
    CHECK(back.alpha == c.alpha);
  }
  fs::remove_all(dir);
}

TEST_CASE("caps from zero traces are all flagged") {
  BasisParams p;
  p.T = 0.3;
  p.t_first = 0.025;
  p.t_last = 0.275;
  p.half_width = 0.2;
  const BasisSpec basis(p);
  ConnectingMatrix K;
  K.K = Matrix::Zero(static_cast<Eigen::Index>(basis.size()), static_cast<Eigen::Index>(basis.size()));
  const std::vector<double> locs(basis.locations().begin(), basis.locations().end());
  const BoundaryDistanceTable table = BoundaryDistanceTable::euclidean({-0.1, 0.0, 0.1}, locs);
  TraceMoments moments;
  moments.moments = Matrix::Zero(static_cast<Eigen::Index>(basis.size()), 1);
  const TransformInputs in{&K, &moments, &basis, &table};
  const TransformSamples t = build_transform(in, {-0.1, 0.0, 0.1}, {0.05, 0.1}, 0.05, 1e-3);
  CHECK(t.usable_count() == 0);

  SUBCASE("mismatched trace fingerprints are refused") {
    const CapTable caps = compute_caps(in, {0.0}, {0.1}, 0.05, 1e-3);
    TraceMoments other = moments;
    other.trace_fingerprint = 42;
    CHECK_THROWS_AS(transform_from_caps(caps, other, basis), ProvenanceError);
  }
}
