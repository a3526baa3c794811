#pragma once

#include "bcwave/types.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace bcwave {

/// Any scalar wave speed c(x) > 0 on the half-space.
using SpeedFunction = std::function<double(Vec2)>;

/// Regular node lattice covering [x1_min, x1_min + (n1-1) d1] x [x2_min, x2_min + (n2-1) d2].
/// Node (i, k) sits at (x1_min + i d1, x2_min + k d2); storage index is k * n1 + i.
struct GridGeometry {
  double x1_min = 0.0;
  double x2_min = 0.0;
  double d1 = 1.0;
  double d2 = 1.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;

  double x1_max() const { return x1_min + d1 * static_cast<double>(n1 - 1); }
  double x2_max() const { return x2_min + d2 * static_cast<double>(n2 - 1); }
  std::size_t size() const { return n1 * n2; }
  std::size_t index(std::size_t i, std::size_t k) const { return k * n1 + i; }
  Vec2 node(std::size_t i, std::size_t k) const {
    return {x1_min + d1 * static_cast<double>(i), x2_min + d2 * static_cast<double>(k)};
  }
  bool contains(Vec2 p, double slack = 1e-12) const;

  /// Grid over [-half_width, half_width] x [-depth, 0] with the given spacing.
  static GridGeometry half_space(double half_width, double depth, double spacing);
};

/// Analytic wave-speed model with a name usable in manifests.
struct SpeedModel {
  std::string name;
  SpeedFunction speed;

  double operator()(Vec2 p) const { return speed(p); }

  static SpeedModel constant(double c);
  /// c(x) = c0 + gradient * x2; depends on depth only.
  static SpeedModel layered(double c0, double gradient);
  /// c = 1 + x2/2 - exp(-4 (x1^2 + (x2 - 0.375)^2)) / 2, a slow lens centred just above the surface.
  static SpeedModel lens();
};

/// Sampled isotropic wave speed on a rectangular grid (values strictly positive).
class SpeedField {
 public:
  SpeedField(GridGeometry geometry, std::vector<double> values);

  static SpeedField sample(const SpeedModel& model, const GridGeometry& geometry);

  const GridGeometry& geometry() const { return geometry_; }
  std::span<const double> values() const { return values_; }
  double at(std::size_t i, std::size_t k) const { return values_[geometry_.index(i, k)]; }
  double max_speed() const;
  double min_speed() const;

  /// Bilinear interpolation; exact at nodes. Throws DomainError outside the extent.
  double eval(Vec2 p) const;
  /// Bilinear interpolation with constant continuation outside the extent.
  double eval_clamped(Vec2 p) const;
  SpeedFunction as_function() const;

  /// Text header (origin, spacing, dimensions) next to a little-endian float64 payload.
  void save(const std::filesystem::path& header_path) const;
  static SpeedField load(const std::filesystem::path& header_path);
  void export_csv(const std::filesystem::path& path) const;

 private:
  GridGeometry geometry_;
  std::vector<double> values_;
};

/// Bilinear c(p); throws DomainError outside the grid.
double eval_speed(const SpeedField& field, Vec2 p);

/// Travel-time distances d(., S) in the metric c^-2 dx^2.
struct DistanceField {
  GridGeometry geometry;
  std::vector<double> values;

  double at(std::size_t i, std::size_t k) const { return values[geometry.index(i, k)]; }
  /// Bilinear interpolation, clamped to the grid.
  double eval(Vec2 p) const;
};

struct PointSource {
  Vec2 point;
};

/// Segment {x1_lo <= x1 <= x1_hi, x2 = top of grid}.
struct BoundarySegment {
  double x1_lo = 0.0;
  double x1_hi = 0.0;
};

using EikonalSource = std::variant<PointSource, BoundarySegment>;

/// First-order upwind fast marching for |grad d| = 1/c.
DistanceField eikonal_distance(const SpeedField& field, const EikonalSource& source);

/// Unit-speed normal geodesic of g = c^-2 dx^2 sampled at s_k = k ds.
struct GeodesicPath {
  double base = 0.0;  ///< y on the boundary x2 = 0
  double ds = 0.0;
  std::vector<double> s;
  std::vector<Vec2> points;
  std::vector<Vec2> velocities;  ///< Cartesian d(point)/ds, Euclidean length c(point)
  bool truncated = false;        ///< left the admissible box before s_max

  /// Linear interpolation of the point at arclength s (clamped to the sampled range).
  Vec2 point_at(double s_query) const;
};

struct GeodesicOptions {
  /// Box the path must stay inside; exits flag the path as truncated.
  std::optional<GridGeometry> extent;
  /// Step for the centred differences of log c.
  double fd_step = 1e-5;
};

/// Integrates x'' = 2 (grad log c . x') x' - |x'|^2 grad log c with classical RK4 and
/// fixed step, launched from (y, 0) with velocity c(y) (0, -1).
GeodesicPath trace_geodesic(const SpeedFunction& speed, double y, double s_max, double ds,
                            const GeodesicOptions& options = {});

/// Largest sampled s with |d(path(s), Gamma) - s| <= tol; the last sample when no violation.
double cut_length(const GeodesicPath& path, const DistanceField& distance_to_gamma, double tol);

/// d(x_j, y_i) for boundary points, read off point-source eikonal solves on `field`.
/// Row i corresponds to centre ys[i], column j to xs[j].
Matrix boundary_distances(const SpeedField& field, std::span<const double> ys,
                          std::span<const double> xs);

}  // namespace bcwave
