#pragma once

#include "bcwave/basis.hpp"
#include "bcwave/medium.hpp"
#include "bcwave/types.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace bcwave {

inline constexpr double kCflLimit = 0.5;

/// Space grid plus leapfrog time lattice t_n = t_start + n dt, n = 0..n_steps.
struct SimGrid {
  GridGeometry space;
  double dt = 0.0;
  double t_start = 0.0;  ///< -t0
  double t_end = 0.0;    ///< 2T

  std::size_t n_steps() const;
  double time(std::size_t n) const { return t_start + dt * static_cast<double>(n); }
  /// dt * c_max / min(d1, d2).
  double cfl(double c_max) const;
  /// Throws ConfigError when the CFL number exceeds kCflLimit or the window is malformed.
  void validate(double c_max) const;
};

/// Grid wide and deep enough that no edge reflection reaches |x1| <= receiver_half_width
/// before t_end: padding of (t_end - t_start) * c_max / 2 beyond the receivers and below the
/// surface. The x1 origin is aligned so that x1 = 0 is a node, and dt divides dt_sample.
SimGrid covering_grid(double receiver_half_width, double t_start, double t_end, double c_max,
                      double spacing, double dt_sample, double cfl = 0.4);

/// One separable term space(x) * time(t) of a Neumann source; space is assumed to vanish
/// outside [x_lo, x_hi].
struct SourceTerm {
  std::function<double(double)> space;
  double x_lo = 0.0;
  double x_hi = 0.0;
  std::function<double(double)> time;
};

/// Boundary data f = du/dx2 on {x2 = 0} (the outward normal derivative), as a sum of terms.
struct BoundarySource {
  std::vector<SourceTerm> terms;

  bool empty() const { return terms.empty(); }
  double operator()(double t, double x) const;
};

/// Time function reading samples s[n] at t = t_start + n dt (nearest sample, zero outside).
std::function<double(double)> sampled_time_function(std::vector<double> samples, double t_start,
                                                    double dt);

/// Dirichlet trace sampled at receiver times x positions (linear interpolation in both).
struct ReceiverSpec {
  std::vector<double> times;
  std::vector<double> positions;
};

struct InteriorSnapshot {
  double time = 0.0;
  GridGeometry geometry;
  std::vector<double> values;

  double at(std::size_t i, std::size_t k) const { return values[geometry.index(i, k)]; }
  /// Bilinear interpolation, clamped to the grid.
  double eval(Vec2 p) const;
};

struct SimulationResult {
  Matrix traces;  ///< receivers.times x receivers.positions
  std::vector<InteriorSnapshot> snapshots;
  std::vector<double> energy;  ///< per step, when requested
};

struct SimulateOptions {
  std::vector<double> snapshot_times;
  bool energy = false;
};

/// Leapfrog with the 5-point Laplacian; Neumann conditions by ghost nodes on every edge,
/// the prescribed derivative entering on the top edge.
SimulationResult simulate(const SpeedField& field, const BoundarySource& source, const SimGrid& grid,
                          const ReceiverSpec& receivers, const SimulateOptions& options = {});

/// u^f(T, .) on the simulation grid.
InteriorSnapshot final_state(const SpeedField& field, const BoundarySource& source,
                             const SimGrid& grid, double T);

/// <u, v> in L^2(c^-2 dx) over the grid with trapezoid weights.
double interior_inner(const InteriorSnapshot& u, const InteriorSnapshot& v, const SpeedField& field);

/// Basis function phi_m with the Gaussian time tail kept on [t_start, 0) and a cut after T.
BoundarySource basis_source(const BasisSpec& basis, std::size_t m);

/// Global receiver lattice x = r dx_r (|x| <= half_width), t = k dt_r (0 <= t <= 2T).
struct ReceiverLattice {
  double dt_r = 0.0025;
  double dx_r = 0.0125;
  double T = 1.0;
  double half_width = 4.5;  ///< l_r

  std::size_t nt() const;       ///< samples on [0, 2T]
  std::size_t nt_half() const;  ///< samples on [0, T]
  long r_max() const;           ///< positions are r dx_r with |r| <= r_max
  std::size_t nx() const { return static_cast<std::size_t>(2 * r_max() + 1); }
  double time(std::size_t k) const { return dt_r * static_cast<double>(k); }
  double position(std::size_t col) const { return dx_r * static_cast<double>(static_cast<long>(col) - r_max()); }
  /// Column of the receiver at x = r dx_r.
  std::size_t column(long r) const { return static_cast<std::size_t>(r + r_max()); }
};

/// A recorded trace window: row k is t = (t_begin + k) dt_r, column c is x = (x_begin + c) dx_r.
struct TraceGenerator {
  long t_begin = 0;
  long x_begin = 0;
  Matrix samples;
};

/// Trace of one basis source: scale * generator shifted by (t_shift, x_shift) lattice steps.
struct TraceEntry {
  std::size_t generator = 0;
  long t_shift = 0;
  long x_shift = 0;
  double scale = 1.0;
};

/// N-to-D data for every basis function, stored compactly as shifted generator traces.
class TraceSet {
 public:
  TraceSet() = default;
  TraceSet(ReceiverLattice lattice, std::vector<TraceGenerator> generators,
           std::vector<TraceEntry> entries);

  const ReceiverLattice& lattice() const { return lattice_; }
  std::size_t size() const { return entries_.size(); }
  const std::vector<TraceGenerator>& generators() const { return generators_; }
  const std::vector<TraceEntry>& entries() const { return entries_; }

  /// Lambda phi_n on [0, 2T] x Rec (nt x nx).
  Matrix trace(std::size_t n) const;
  /// Same, summed over sources with the given coefficients (n_times x n_locations block).
  Matrix combine(const Matrix& coeffs) const;

  /// Content hash over lattice, entries and generator samples.
  std::uint64_t fingerprint() const;

  /// Writes manifest.txt and one gen_<k>.bin per generator into dir.
  void save(const std::filesystem::path& dir) const;
  static TraceSet load(const std::filesystem::path& dir);

 private:
  ReceiverLattice lattice_;
  std::vector<TraceGenerator> generators_;
  std::vector<TraceEntry> entries_;
};

struct RecordOptions {
  /// Rows whose Gaussian exceeds this at T get their own simulation with the cut at T.
  double cut_threshold = 1e-14;
  /// Use one spatially shifted generator per time profile when the medium is laterally
  /// invariant (detected from the field).
  bool allow_lateral_shift = true;
};

/// Simulates the N-to-D map on every basis function. Time rows are obtained by shifting one
/// simulation per location except near T, where the cut source differs from a shift.
TraceSet record_ndmap(const SpeedField& field, const BasisSpec& basis, const SimGrid& grid,
                      const ReceiverLattice& lattice, const RecordOptions& options = {});

/// True when every column of the field equals the first (speed independent of x1).
bool laterally_invariant(const SpeedField& field);

}  // namespace bcwave
