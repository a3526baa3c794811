#pragma once

#include "bcwave/basis.hpp"
#include "bcwave/boundary_ops.hpp"
#include "bcwave/control.hpp"
#include "bcwave/forward.hpp"
#include "bcwave/medium.hpp"
#include "bcwave/types.hpp"

#include <array>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace bcwave {

/// Semi-geodesic chart grid (y_i, s_j); point p = i * ss.size() + j.
struct ChartGrid {
  std::vector<double> ys, ss;

  std::size_t size() const { return ys.size() * ss.size(); }
  std::size_t index(std::size_t i, std::size_t j) const { return i * ss.size() + j; }
  double y(std::size_t p) const { return ys[p / ss.size()]; }
  double s(std::size_t p) const { return ss[p % ss.size()]; }
};

/// L_g f(y_i, s_j) = u^f(T, x(y_i, s_j)) for every basis function f, and the same for d_t^2 f.
/// Rows are chart points, columns basis indices.
struct InternalDataTable {
  ChartGrid grid;
  std::vector<Vec2> points;  ///< Cartesian x(y_i, s_j) where known (oracle mode)
  std::vector<char> valid;   ///< 0 for points excluded from the chart
  Matrix values;
  Matrix values_dd;
  std::vector<std::string> diagnostics;

  std::size_t valid_count() const;
};

struct OracleOptions {
  double geodesic_step = 2.5e-3;
  /// Start of the source window before t = 0 (the time buffer t0).
  double t0 = 0.1;
  /// Exclude points beyond the cut locus when given: |d(x, Gamma) - s| > cut_tol.
  const DistanceField* distance_to_gamma = nullptr;
  double cut_tol = 2e-2;
};

/// Ground-truth table: one simulation per source location with snapshots that stand in
/// for every time row (u^f(T) only sees f on t <= T, so shifted sources give shifted
/// snapshots). Points come from trace_geodesic.
InternalDataTable sample_Lg_oracle(const SpeedField& field, const SpeedFunction& speed, const BasisSpec& basis,
                                   const ChartGrid& grid, const SimGrid& sim, const OracleOptions& options = {});

/// Boundary-data table: point values <psi_p, K f> / vol_p through one cap per chart point.
/// d_t^2 phi_m enters through its basis projection.
InternalDataTable sample_Lg_data(const std::vector<CapSource>& caps, const ConnectingMatrix& K,
                                 const BasisSpec& basis, const GramMatrix& gram, const ChartGrid& grid);

/// Contravariant metric in chart coordinates (x^1, x^2) = (y, s); NaN where not evaluated.
struct MetricSamples {
  ChartGrid grid;
  std::vector<double> g_yy, g_ys, g_ss;
  std::vector<char> evaluated;
  double alpha = 0.0;
  /// Eigenvalue range of the data term L* W L, for the conditioning report.
  double eig_max = 0.0, eig_min = 0.0;
  std::size_t effective_rank = 0;

  void write_csv(const std::filesystem::path& path) const;
};

struct RecoverOptions {
  double alpha = 1e-6;
  /// Width of the quintic cutoff ramp on the targets, in grid cells from each chart edge;
  /// 0 fits the coordinate products on the whole chart.
  std::size_t margin_cells = 0;
  /// Chart cells next to each edge where no metric is reported (at least margin_cells).
  std::size_t edge_cells = 2;
  /// Eigenvalues below rank_tol * eig_max count as rank deficiency.
  double rank_tol = 1e-12;
};

/// Tikhonov fits (L*WL + alpha G) f_l = L*W phi_l for the targets y, s, y^2, ys, s^2 on the
/// chart, combined as g^{jk} = (L d_t^2 f_{jk} - x^k L d_t^2 f_j - x^j L d_t^2 f_k) / 2 away
/// from the edges. alpha is relative to trace(L*WL) / N.
MetricSamples recover_metric(const InternalDataTable& table, const GramMatrix& gram, const RecoverOptions& options = {});

/// Inverse metric g^{ij}(x) on a chart.
using InverseMetric = std::function<std::array<double, 3>(Vec2)>;  // {g^11, g^12, g^22}

struct IdentityReport {
  std::vector<double> steps;
  std::vector<double> residuals;  ///< max over points and components
  std::vector<double> orders;     ///< log2 of successive residual ratios
};

/// Compares g^{lk} with (Delta_g(x^l x^k) - x^k Delta_g x^l - x^l Delta_g x^k) / 2, the
/// Laplace-Beltrami operator discretized by nested centred differences with step h, for
/// h = step0 / 2^r, r = 0..levels-1.
IdentityReport laplacian_identity_check(const InverseMetric& metric, const std::vector<Vec2>& points, double step0,
                                        std::size_t levels = 3);

/// Delta_g u at p with nested centred differences of step h.
double laplace_beltrami(const InverseMetric& metric, const std::function<double(Vec2)>& u, Vec2 p, double h);

/// g^{yy} = c^2 / |d_y x(y, s)|^2 in semi-geodesic coordinates, from geodesics launched at
/// y +- dy (g^{ss} = 1 and g^{ys} = 0 there by construction).
double semigeodesic_gyy(const SpeedFunction& speed, double y, double s, double ds, double dy = 1e-3);

}  // namespace bcwave
