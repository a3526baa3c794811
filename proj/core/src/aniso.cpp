#include "bcwave/aniso.hpp"

#include "bcwave/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace bcwave {

std::size_t InternalDataTable::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), char{1}));
}

namespace {

void check_grid(const ChartGrid& grid) {
  if (grid.ys.empty() || grid.ss.empty()) throw ConfigError("chart grid is empty");
  for (double s : grid.ss) {
    if (!(s >= 0.0)) throw ConfigError("chart depths must be non-negative");
  }
}

// Keys cubic convolution weights (a = -1/2) for offset f in [0, 1).
std::array<double, 4> cubic_weights(double f) {
  auto w = [](double x) {
    x = std::abs(x);
    if (x <= 1.0) return (1.5 * x - 2.5) * x * x + 1.0;
    if (x < 2.0) return ((-0.5 * x + 2.5) * x - 4.0) * x + 2.0;
    return 0.0;
  };
  return {w(1.0 + f), w(f), w(1.0 - f), w(2.0 - f)};
}

// Bicubic interpolation; smoother than bilinear, which matters once the samples are
// differentiated twice through the fit.
double cubic_eval(const InteriorSnapshot& snap, Vec2 p) {
  const GridGeometry& g = snap.geometry;
  const double u = (p.x1 - g.x1_min) / g.d1, v = (p.x2 - g.x2_min) / g.d2;
  const double fu = std::floor(u), fv = std::floor(v);
  const auto i0 = static_cast<long>(fu), k0 = static_cast<long>(fv);
  if (i0 < 1 || k0 < 1 || i0 + 2 >= static_cast<long>(g.n1) || k0 + 2 >= static_cast<long>(g.n2)) {
    return snap.eval(p);
  }
  const auto wu = cubic_weights(u - fu), wv = cubic_weights(v - fv);
  double acc = 0.0;
  for (int b = 0; b < 4; ++b) {
    double row = 0.0;
    for (int a = 0; a < 4; ++a) {
      row += wu[static_cast<std::size_t>(a)] *
             snap.at(static_cast<std::size_t>(i0 - 1 + a), static_cast<std::size_t>(k0 - 1 + b));
    }
    acc += wv[static_cast<std::size_t>(b)] * row;
  }
  return acc;
}

}  // namespace

InternalDataTable sample_Lg_oracle(const SpeedField& field, const SpeedFunction& speed, const BasisSpec& basis,
                                   const ChartGrid& grid, const SimGrid& sim, const OracleOptions& options) {
  check_grid(grid);
  const auto& bp = basis.params();
  const std::size_t np = grid.size(), nt = basis.n_times(), nx = basis.n_locations();
  InternalDataTable table;
  table.grid = grid;
  table.points.resize(np);
  table.valid.assign(np, 1);

  const double s_max = *std::max_element(grid.ss.begin(), grid.ss.end());
  for (std::size_t i = 0; i < grid.ys.size(); ++i) {
    const GeodesicPath path = trace_geodesic(speed, grid.ys[i], s_max + 2.0 * options.geodesic_step, options.geodesic_step);
    for (std::size_t j = 0; j < grid.ss.size(); ++j) {
      const std::size_t p = grid.index(i, j);
      const double s = grid.ss[j];
      table.points[p] = path.point_at(s);
      std::string why;
      if (s > bp.T) {
        why = "outside the domain of influence";
      } else if (path.truncated && s > path.s.back()) {
        why = "geodesic left the box";
      } else if (options.distance_to_gamma &&
                 std::abs(options.distance_to_gamma->eval(table.points[p]) - s) > options.cut_tol) {
        why = "beyond the cut locus";
      }
      if (!why.empty()) {
        table.valid[p] = 0;
        std::ostringstream msg;
        msg << "excluded (y, s) = (" << grid.ys[i] << ", " << s << "): " << why;
        table.diagnostics.push_back(msg.str());
      }
    }
  }

  // Every row is the first row delayed, so row i is read at T - (t_i - t_1).
  const auto times = basis.times();
  const double t_ref = times.front();
  SimGrid g = sim;
  g.t_start = -options.t0;
  g.t_end = bp.T;
  std::vector<double> snap_times(nt);
  for (std::size_t i = 0; i < nt; ++i) snap_times[i] = bp.T - (times[i] - t_ref);
  SimulateOptions opts;
  opts.snapshot_times = snap_times;

  const double a = bp.a;
  auto value = [=](double t) {
    const double d = t - t_ref;
    return std::exp(-a * d * d);
  };
  auto second = [=](double t) {
    const double d = t - t_ref;
    return (4.0 * a * a * d * d - 2.0 * a) * std::exp(-a * d * d);
  };

  table.values = Matrix::Zero(static_cast<Eigen::Index>(np), static_cast<Eigen::Index>(basis.size()));
  table.values_dd = table.values;
  parallel_for(2 * nx, [&](std::size_t job) {
    const std::size_t j = job / 2;
    const bool dd = job % 2 == 1;
    BoundarySource src = basis_source(basis, basis.index(0, j));
    src.terms.front().time = dd ? std::function<double(double)>(second) : std::function<double(double)>(value);
    const SimulationResult res = simulate(field, src, g, {}, opts);
    Matrix& out = dd ? table.values_dd : table.values;
    for (std::size_t i = 0; i < nt; ++i) {
      const std::size_t m = basis.index(i, j);
      const double scale = basis.normalization(m);
      for (std::size_t p = 0; p < np; ++p) {
        out(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(m)) =
            table.valid[p] ? scale * cubic_eval(res.snapshots[i], table.points[p]) : 0.0;
      }
    }
  });
  return table;
}

InternalDataTable sample_Lg_data(const std::vector<CapSource>& caps, const ConnectingMatrix& K,
                                 const BasisSpec& basis, const GramMatrix& gram, const ChartGrid& grid) {
  check_grid(grid);
  const std::size_t np = grid.size(), n = basis.size();
  if (caps.size() != np) throw ConfigError("sample_Lg_data: need one cap per chart point");
  if (K.size() != n) throw IntegrityError("sample_Lg_data: K and basis sizes differ");
  InternalDataTable table;
  table.grid = grid;
  table.points.assign(np, Vec2{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()});
  table.valid.assign(np, 1);
  table.values = Matrix::Zero(static_cast<Eigen::Index>(np), static_cast<Eigen::Index>(n));
  for (std::size_t p = 0; p < np; ++p) {
    const CapSource& cap = caps[p];
    if (!(cap.volume > 1e-14) || static_cast<std::size_t>(cap.psi.size()) != n) {
      table.valid[p] = 0;
      std::ostringstream msg;
      msg << "excluded (y, s) = (" << grid.y(p) << ", " << grid.s(p) << "): degenerate cap";
      table.diagnostics.push_back(msg.str());
      continue;
    }
    table.values.row(static_cast<Eigen::Index>(p)) = (cap.psi.transpose() * K.K) / cap.volume;
  }

  // d_t^2 phi_{i,j} = (d_t^2 time_i) space_j, so its coefficients are (G_t^-1 D)(:, i) in row j.
  const std::size_t nt = basis.n_times(), nx = basis.n_locations();
  const auto& lat = basis.lattice();
  Matrix D(static_cast<Eigen::Index>(nt), static_cast<Eigen::Index>(nt));
  for (std::size_t i = 0; i < nt; ++i) {
    Eigen::VectorXd dd(static_cast<Eigen::Index>(lat.nt()));
    for (std::size_t k = 0; k < lat.nt(); ++k) {
      dd(static_cast<Eigen::Index>(k)) = basis.gaussian_time_dd(i, lat.t[k]) / basis.time_norm(i);
    }
    D.col(static_cast<Eigen::Index>(i)) = basis.time_samples_weighted() * dd;
  }
  const Matrix M = gram.solve_time(D);
  table.values_dd = Matrix::Zero(table.values.rows(), table.values.cols());
  for (std::size_t i = 0; i < nt; ++i) {
    for (std::size_t ip = 0; ip < nt; ++ip) {
      const double w = M(static_cast<Eigen::Index>(ip), static_cast<Eigen::Index>(i));
      if (w == 0.0) continue;
      table.values_dd.middleCols(static_cast<Eigen::Index>(i * nx), static_cast<Eigen::Index>(nx)) +=
          w * table.values.middleCols(static_cast<Eigen::Index>(ip * nx), static_cast<Eigen::Index>(nx));
    }
  }
  return table;
}

// ---------------------------------------------------------------------------

void MetricSamples::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IntegrityError("cannot write " + path.string());
  out.precision(17);
  out << "# chart: semi-geodesic (y, s); ny=" << grid.ys.size() << " ns=" << grid.ss.size() << " alpha=" << alpha
      << " rank=" << effective_rank << "\n";
  out << "y,s,g_yy,g_ys,g_ss,evaluated\n";
  for (std::size_t p = 0; p < grid.size(); ++p) {
    out << grid.y(p) << ',' << grid.s(p) << ',' << g_yy[p] << ',' << g_ys[p] << ',' << g_ss[p] << ','
        << int(evaluated[p]) << '\n';
  }
}

namespace {

double quintic_ramp(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

std::vector<double> trapezoid(const std::vector<double>& x) {
  std::vector<double> w(x.size(), 0.0);
  for (std::size_t k = 0; k + 1 < x.size(); ++k) {
    const double h = x[k + 1] - x[k];
    w[k] += 0.5 * h;
    w[k + 1] += 0.5 * h;
  }
  if (x.size() == 1) w[0] = 1.0;
  return w;
}

}  // namespace

MetricSamples recover_metric(const InternalDataTable& table, const GramMatrix& gram, const RecoverOptions& options) {
  const ChartGrid& grid = table.grid;
  const std::size_t np = grid.size(), ny = grid.ys.size(), ns = grid.ss.size();
  const auto n = table.values.cols();
  if (!(options.alpha > 0.0)) throw ConfigError("recover_metric: alpha must be positive");
  if (static_cast<std::size_t>(table.values.rows()) != np || table.values_dd.rows() != table.values.rows() ||
      table.values_dd.cols() != n) {
    throw IntegrityError("recover_metric: table shape does not match its grid");
  }
  if (gram.size() != static_cast<std::size_t>(n)) throw IntegrityError("recover_metric: Gram and table sizes differ");
  const std::size_t m = options.margin_cells;
  const std::size_t e = std::max(m, options.edge_cells);
  if (ny < 2 * e + 1 || ns < 2 * e + 1) throw ConfigError("recover_metric: chart too small for its edge margin");

  // Cutoff equal to one except on the outer margin cells of the chart.
  auto ramp = [m](const std::vector<double>& x, std::size_t k) {
    if (m == 0) return 1.0;
    const double w = x[m] - x[0], w2 = x.back() - x[x.size() - 1 - m];
    return quintic_ramp((x[k] - x[0]) / w) * quintic_ramp((x.back() - x[k]) / w2);
  };
  const std::vector<double> wy = trapezoid(grid.ys), ws = trapezoid(grid.ss);
  // Coordinates centred on the chart: the identity holds in any affine chart and the
  // products stay small.
  const double yc = 0.5 * (grid.ys.front() + grid.ys.back()), sc = 0.5 * (grid.ss.front() + grid.ss.back());
  Eigen::VectorXd W(static_cast<Eigen::Index>(np));
  Matrix targets(static_cast<Eigen::Index>(np), 5);
  for (std::size_t i = 0; i < ny; ++i) {
    for (std::size_t j = 0; j < ns; ++j) {
      const std::size_t p = grid.index(i, j);
      const double y = grid.ys[i] - yc, s = grid.ss[j] - sc;
      const double chi = ramp(grid.ys, i) * ramp(grid.ss, j);
      W(static_cast<Eigen::Index>(p)) = table.valid[p] ? wy[i] * ws[j] : 0.0;
      const auto r = static_cast<Eigen::Index>(p);
      targets(r, 0) = chi * y;
      targets(r, 1) = chi * s;
      targets(r, 2) = chi * y * y;
      targets(r, 3) = chi * y * s;
      targets(r, 4) = chi * s * s;
    }
  }

  const Matrix WL = W.asDiagonal() * table.values;
  const Eigen::MatrixXd A = table.values.transpose() * WL;
  const Eigen::MatrixXd rhs = WL.transpose() * targets;

  MetricSamples out;
  out.grid = grid;
  const double scale = A.trace() / static_cast<double>(n);
  if (!(scale > 0.0)) throw NumericalError("recover_metric: the internal data table is zero");
  out.alpha = options.alpha;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A, Eigen::EigenvaluesOnly);
  out.eig_max = eig.eigenvalues().maxCoeff();
  out.eig_min = eig.eigenvalues().minCoeff();
  out.effective_rank = static_cast<std::size_t>((eig.eigenvalues().array() > options.rank_tol * out.eig_max).count());

  const Eigen::MatrixXd normal = A + options.alpha * scale * gram.dense();
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  if (ldlt.info() != Eigen::Success) throw NumericalError("recover_metric: normal equations not factorizable");
  const Eigen::MatrixXd F = ldlt.solve(rhs);
  const Eigen::MatrixXd lap = table.values_dd * F;  // Delta_g of each fitted field

  out.g_yy.assign(np, std::numeric_limits<double>::quiet_NaN());
  out.g_ys = out.g_yy;
  out.g_ss = out.g_yy;
  out.evaluated.assign(np, 0);
  for (std::size_t i = e; i + e < ny; ++i) {
    for (std::size_t j = e; j + e < ns; ++j) {
      const std::size_t p = grid.index(i, j);
      if (!table.valid[p]) continue;
      const auto r = static_cast<Eigen::Index>(p);
      const double y = grid.ys[i] - yc, s = grid.ss[j] - sc;
      out.g_yy[p] = 0.5 * (lap(r, 2) - 2.0 * y * lap(r, 0));
      out.g_ys[p] = 0.5 * (lap(r, 3) - s * lap(r, 0) - y * lap(r, 1));
      out.g_ss[p] = 0.5 * (lap(r, 4) - 2.0 * s * lap(r, 1));
      out.evaluated[p] = 1;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

double laplace_beltrami(const InverseMetric& metric, const std::function<double(Vec2)>& u, Vec2 p, double h) {
  auto sqrt_det = [&](Vec2 q) {
    const auto g = metric(q);
    return 1.0 / std::sqrt(g[0] * g[2] - g[1] * g[1]);
  };
  // Flux component i of sqrt(g) g^{ij} d_j u at q.
  auto flux = [&](Vec2 q, int i) {
    const double du1 = (u({q.x1 + h, q.x2}) - u({q.x1 - h, q.x2})) / (2.0 * h);
    const double du2 = (u({q.x1, q.x2 + h}) - u({q.x1, q.x2 - h})) / (2.0 * h);
    const auto g = metric(q);
    const double v = i == 0 ? g[0] * du1 + g[1] * du2 : g[1] * du1 + g[2] * du2;
    return sqrt_det(q) * v;
  };
  const double div = (flux({p.x1 + h, p.x2}, 0) - flux({p.x1 - h, p.x2}, 0)) / (2.0 * h) +
                     (flux({p.x1, p.x2 + h}, 1) - flux({p.x1, p.x2 - h}, 1)) / (2.0 * h);
  return div / sqrt_det(p);
}

IdentityReport laplacian_identity_check(const InverseMetric& metric, const std::vector<Vec2>& points, double step0,
                                        std::size_t levels) {
  if (points.empty() || levels == 0 || !(step0 > 0.0)) throw ConfigError("laplacian_identity_check: bad arguments");
  const std::function<double(Vec2)> x1 = [](Vec2 q) { return q.x1; };
  const std::function<double(Vec2)> x2 = [](Vec2 q) { return q.x2; };
  const std::function<double(Vec2)> x11 = [](Vec2 q) { return q.x1 * q.x1; };
  const std::function<double(Vec2)> x12 = [](Vec2 q) { return q.x1 * q.x2; };
  const std::function<double(Vec2)> x22 = [](Vec2 q) { return q.x2 * q.x2; };
  IdentityReport report;
  for (std::size_t r = 0; r < levels; ++r) {
    const double h = step0 / std::pow(2.0, static_cast<double>(r));
    double worst = 0.0;
    for (Vec2 p : points) {
      const double l1 = laplace_beltrami(metric, x1, p, h);
      const double l2 = laplace_beltrami(metric, x2, p, h);
      const auto g = metric(p);
      const double e11 = 0.5 * (laplace_beltrami(metric, x11, p, h) - 2.0 * p.x1 * l1) - g[0];
      const double e12 = 0.5 * (laplace_beltrami(metric, x12, p, h) - p.x2 * l1 - p.x1 * l2) - g[1];
      const double e22 = 0.5 * (laplace_beltrami(metric, x22, p, h) - 2.0 * p.x2 * l2) - g[2];
      worst = std::max({worst, std::abs(e11), std::abs(e12), std::abs(e22)});
    }
    report.steps.push_back(h);
    report.residuals.push_back(worst);
    if (r > 0) report.orders.push_back(std::log2(report.residuals[r - 1] / worst));
  }
  return report;
}

double semigeodesic_gyy(const SpeedFunction& speed, double y, double s, double ds, double dy) {
  const double len = s + 2.0 * ds;
  const GeodesicPath plus = trace_geodesic(speed, y + dy, len, ds);
  const GeodesicPath minus = trace_geodesic(speed, y - dy, len, ds);
  const GeodesicPath mid = trace_geodesic(speed, y, len, ds);
  const Vec2 d = (1.0 / (2.0 * dy)) * (plus.point_at(s) - minus.point_at(s));
  const double c = speed(mid.point_at(s));
  return c * c / d.dot(d);
}

}  // namespace bcwave
