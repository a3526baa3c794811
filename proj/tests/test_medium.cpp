#include "bcwave/medium.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace bcwave;

TEST_CASE("speed models evaluate their formulas") {
  CHECK(SpeedModel::constant(1.0)({0.3, -0.7}) == 1.0);
  const double expected = 1.0 - 0.5 * std::exp(-0.5625);
  CHECK(SpeedModel::lens()({0.0, 0.0}) == doctest::Approx(expected).epsilon(1e-15));
  CHECK(SpeedModel::layered(1.0, -0.5)({0.2, -1.0}) == doctest::Approx(1.5));
}

TEST_CASE("sampled field interpolates exactly at nodes and rejects outside points") {
  const GridGeometry g = GridGeometry::half_space(1.0, 1.0, 0.1);
  const SpeedField f = SpeedField::sample(SpeedModel::lens(), g);
  for (std::size_t k = 0; k < g.n2; k += 3) {
    for (std::size_t i = 0; i < g.n1; i += 4) CHECK(f.eval(g.node(i, k)) == doctest::Approx(f.at(i, k)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(f.eval({2.0, -0.5}), DomainError);
  CHECK(f.eval_clamped({2.0, -0.5}) == f.eval({1.0, -0.5}));
}

TEST_CASE("non-positive speeds are rejected") {
  const GridGeometry g = GridGeometry::half_space(0.5, 0.5, 0.25);
  CHECK_THROWS_AS(SpeedField(g, std::vector<double>(g.size(), 0.0)), ConfigError);
}

TEST_CASE("speed field files round-trip") {
  const GridGeometry g = GridGeometry::half_space(0.5, 0.5, 0.05);
  const SpeedField f = SpeedField::sample(SpeedModel::lens(), g);
  const auto path = std::filesystem::temp_directory_path() / "bcwave_test_speed.txt";
  f.save(path);
  const SpeedField back = SpeedField::load(path);
  CHECK(back.geometry().n1 == g.n1);
  CHECK(back.geometry().n2 == g.n2);
  CHECK(std::equal(f.values().begin(), f.values().end(), back.values().begin()));
  std::filesystem::remove(path);
  std::filesystem::remove(std::filesystem::path(path).replace_extension(".bin"));
}

TEST_CASE("eikonal distances on constant media") {
  const double dx = 0.02;
  const GridGeometry g = GridGeometry::half_space(1.0, 1.0, dx);
  SUBCASE("point source, c = 1") {
    const DistanceField d = eikonal_distance(SpeedField::sample(SpeedModel::constant(1.0), g), PointSource{{0.0, 0.0}});
    CHECK(d.eval({0.0, 0.0}) == doctest::Approx(0.0).epsilon(1e-12));
    for (Vec2 p : {Vec2{0.5, -0.5}, Vec2{-0.8, -0.1}, Vec2{0.0, -0.9}}) {
      CHECK(std::abs(d.eval(p) - p.norm()) <= 3.0 * dx);
    }
  }
  SUBCASE("point source, c = 2 halves the distance") {
    const DistanceField d1 = eikonal_distance(SpeedField::sample(SpeedModel::constant(1.0), g), PointSource{{0.0, 0.0}});
    const DistanceField d2 = eikonal_distance(SpeedField::sample(SpeedModel::constant(2.0), g), PointSource{{0.0, 0.0}});
    for (Vec2 p : {Vec2{0.5, -0.5}, Vec2{-0.8, -0.1}}) CHECK(d2.eval(p) == doctest::Approx(d1.eval(p) / 2).epsilon(1e-12));
  }
  SUBCASE("whole surface gives the depth") {
    const DistanceField d =
        eikonal_distance(SpeedField::sample(SpeedModel::constant(1.0), g), BoundarySegment{-1.0, 1.0});
    for (Vec2 p : {Vec2{0.5, -0.5}, Vec2{-0.8, -0.1}, Vec2{0.0, -0.9}}) {
      CHECK(d.eval(p) == doctest::Approx(-p.x2).epsilon(1e-9));
    }
  }
}

TEST_CASE("geodesics") {
  SUBCASE("straight rays for c = 1") {
    const GeodesicPath path = trace_geodesic(SpeedModel::constant(1.0).speed, 0.0, 0.5, 0.01);
    CHECK(path.point_at(0.3).x1 == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(path.point_at(0.3).x2 == doctest::Approx(-0.3).epsilon(1e-12));
  }
  SUBCASE("depth-only speed keeps the first coordinate") {
    const GeodesicPath path = trace_geodesic(SpeedModel::layered(1.0, -0.5).speed, 0.2, 0.6, 0.01);
    for (const Vec2& p : path.points) CHECK(p.x1 == doctest::Approx(0.2).epsilon(1e-12));
  }
  SUBCASE("lens paths are unit speed and converge under step refinement") {
    const SpeedModel lens = SpeedModel::lens();
    const GeodesicPath coarse = trace_geodesic(lens.speed, 0.5, 0.6, 0.01);
    const GeodesicPath fine = trace_geodesic(lens.speed, 0.5, 0.6, 0.001);
    for (std::size_t k = 0; k < coarse.points.size(); ++k) {
      CHECK(coarse.velocities[k].norm() / lens(coarse.points[k]) == doctest::Approx(1.0).epsilon(1e-6));
    }
    const Vec2 a = coarse.point_at(0.6), b = fine.point_at(0.6);
    CHECK((a - b).norm() < 1e-7);
    CHECK(a.x1 < 0.5);  // bends toward the slow lens
  }
}

TEST_CASE("normal rays minimize distance to the surface for c = 1") {
  const GridGeometry g = GridGeometry::half_space(1.0, 1.0, 0.02);
  const DistanceField d = eikonal_distance(SpeedField::sample(SpeedModel::constant(1.0), g), BoundarySegment{-1.0, 1.0});
  const GeodesicPath path = trace_geodesic(SpeedModel::constant(1.0).speed, 0.1, 0.8, 0.01);
  CHECK(cut_length(path, d, 1e-2) == doctest::Approx(path.s.back()));
}
