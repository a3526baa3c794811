#pragma once

#include "bcwave/basis.hpp"
#include "bcwave/boundary_ops.hpp"
#include "bcwave/control.hpp"
#include "bcwave/forward.hpp"
#include "bcwave/spline.hpp"
#include "bcwave/types.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace bcwave {

/// Harmonic function with its trace and outward normal derivative d/dx2 on {x2 = 0}.
struct HarmonicFunction {
  std::string name;
  std::function<double(Vec2)> value;
  std::function<double(double)> boundary_value;
  std::function<double(double)> boundary_dx2;

  static HarmonicFunction one();
  static HarmonicFunction x1();
  static HarmonicFunction x2();
  /// Re (x1 + i x2)^n or Im (x1 + i x2)^n.
  static HarmonicFunction polynomial(int degree, bool imaginary);
};

/// int_0^T b(t) Lambda phi_n(t, x) dt for every source n and receiver x (N x n_receivers),
/// the only trace data the B-functional needs.
struct TraceMoments {
  ReceiverLattice lattice;
  Matrix moments;
  std::uint64_t trace_fingerprint = 0;

  static TraceMoments from(const TraceSet& traces);
};

/// B(f, phi) = <f, b phi> - <Lambda f, b d_x2 phi> for f = sum_n coeffs_n phi_n.
double b_functional(const Vector& coeffs, const HarmonicFunction& phi, const TraceMoments& moments,
                    const BasisSpec& basis);

/// Per-source values B(phi_n, phi); b_functional is coeffs . b_functional_row.
Vector b_functional_row(const HarmonicFunction& phi, const TraceMoments& moments, const BasisSpec& basis);

/// H phi = B(psi, phi) / B(psi, 1). Throws NumericalError when |B(psi, 1)| <= threshold.
double point_value_harmonic(const CapSource& cap, const HarmonicFunction& phi, const TraceMoments& moments,
                            const BasisSpec& basis, double threshold = 1e-14);

/// <psi, K f> / <psi, P b>: the value u^f(T, x(y, s)) seen through the cap.
double point_value_wavefield(const CapSource& cap, const Vector& coeffs, const ConnectingMatrix& K,
                             double threshold = 1e-14);

enum PointFlag : unsigned {
  kDegenerateCap = 1u,   ///< cap volume not positive
  kOutsideDomain = 2u,   ///< estimated depth coordinate not below the surface
  kNonMonotone = 4u,     ///< depth does not decrease from the previous s in the column
  kNoSpeed = 8u,         ///< column had too few usable points for the spline
};

struct TransformPoint {
  double y = 0.0, s = 0.0;
  double phi1 = 0.0, phi2 = 0.0;  ///< estimated Cartesian point
  double volume = 0.0;
  double c_est = 0.0;
  unsigned flags = 0;

  bool usable() const { return (flags & (kDegenerateCap | kOutsideDomain)) == 0; }
};

/// Estimated Phi_{c,h}(y_i, s_j); points[i * ss.size() + j].
struct TransformSamples {
  std::vector<double> ys, ss;
  double h = 0.0, alpha = 0.0;
  std::vector<TransformPoint> points;

  TransformPoint& at(std::size_t i, std::size_t j) { return points[i * ss.size() + j]; }
  const TransformPoint& at(std::size_t i, std::size_t j) const { return points[i * ss.size() + j]; }
  std::size_t usable_count() const;

  void write_csv(const std::filesystem::path& path) const;
  static TransformSamples read_csv(const std::filesystem::path& path);
};

struct TransformInputs {
  const ConnectingMatrix* K = nullptr;
  const TraceMoments* moments = nullptr;
  const BasisSpec* basis = nullptr;
  const BoundaryDistanceTable* distances = nullptr;
};

/// Cap sources psi for every (y_i, s_j): row i * ss.size() + j of psi.
struct CapTable {
  std::vector<double> ys, ss;
  double h = 0.0, alpha = 0.0;
  Matrix psi;
  std::vector<double> volumes;
  std::vector<unsigned> flags;
  std::uint64_t trace_fingerprint = 0;

  /// Writes caps.csv (grid, volumes, flags) and psi.bin into dir.
  void save(const std::filesystem::path& dir) const;
  static CapTable load(const std::filesystem::path& dir);
};

CapTable compute_caps(const TransformInputs& in, std::vector<double> ys, std::vector<double> ss, double h,
                      double alpha);

/// Harmonic point values H x1, H x2 through precomputed caps.
TransformSamples transform_from_caps(const CapTable& caps, const TraceMoments& moments, const BasisSpec& basis);

/// compute_caps followed by transform_from_caps.
TransformSamples build_transform(const TransformInputs& in, std::vector<double> ys, std::vector<double> ss,
                                 double h, double alpha);

/// Fits a smoothing spline per column (fixed y) to each coordinate over s and sets
/// c_est = |d Phi / ds| at the usable points.
void speed_from_transform(TransformSamples& samples, const SplineOptions& options = {});

}  // namespace bcwave
