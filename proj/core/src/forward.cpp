#include "bcwave/forward.hpp"

#include "bcwave/io.hpp"
#include "bcwave/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace bcwave {

std::size_t SimGrid::n_steps() const {
  if (!(dt > 0) || !(t_end > t_start)) throw ConfigError("simulation window needs dt > 0 and t_end > t_start");
  const double q = (t_end - t_start) / dt;
  const auto n = static_cast<std::size_t>(std::llround(q));
  if (std::abs(q - static_cast<double>(n)) > 1e-6) {
    throw ConfigError("simulation window is not a whole number of time steps");
  }
  return n;
}

double SimGrid::cfl(double c_max) const { return dt * c_max / std::min(space.d1, space.d2); }

void SimGrid::validate(double c_max) const {
  (void)n_steps();
  if (space.n1 < 3 || space.n2 < 3) throw ConfigError("simulation grid needs at least 3x3 nodes");
  if (t_start > 0) throw ConfigError("simulation must start at or before t = 0");
  const double number = cfl(c_max);
  if (number > kCflLimit) {
    std::ostringstream msg;
    msg << "CFL number " << number << " exceeds the limit " << kCflLimit << " (dt = " << dt
        << ", c_max = " << c_max << ")";
    throw ConfigError(msg.str());
  }
}

SimGrid covering_grid(double receiver_half_width, double t_start, double t_end, double c_max,
                      double spacing, double dt_sample, double cfl) {
  if (!(spacing > 0) || !(c_max > 0) || !(dt_sample > 0) || !(cfl > 0) || cfl > kCflLimit) {
    throw ConfigError("covering_grid: spacing, c_max, dt_sample must be positive and cfl in (0, 0.5]");
  }
  const double pad = (t_end - t_start) * c_max / 2.0 + 4.0 * spacing;
  const double half = std::ceil((receiver_half_width + pad) / spacing - 1e-9) * spacing;
  const double depth = std::ceil(pad / spacing - 1e-9) * spacing;
  SimGrid grid;
  grid.space = GridGeometry::half_space(half, depth, spacing);
  const double dt_max = cfl * spacing / c_max;
  grid.dt = dt_sample / std::ceil(dt_sample / dt_max - 1e-9);
  grid.t_start = t_start;
  grid.t_end = t_end;
  return grid;
}

double BoundarySource::operator()(double t, double x) const {
  double v = 0.0;
  for (const auto& term : terms) {
    if (x < term.x_lo || x > term.x_hi) continue;
    v += term.space(x) * term.time(t);
  }
  return v;
}

std::function<double(double)> sampled_time_function(std::vector<double> samples, double t_start,
                                                    double dt) {
  return [samples = std::move(samples), t_start, dt](double t) {
    const double q = (t - t_start) / dt;
    const long n = std::lround(q);
    if (n < 0 || n >= static_cast<long>(samples.size())) return 0.0;
    return samples[static_cast<std::size_t>(n)];
  };
}

namespace {

double bilinear_clamped(const GridGeometry& g, std::span<const double> v, Vec2 p) {
  const double u = std::clamp((p.x1 - g.x1_min) / g.d1, 0.0, static_cast<double>(g.n1 - 1));
  const double w = std::clamp((p.x2 - g.x2_min) / g.d2, 0.0, static_cast<double>(g.n2 - 1));
  const auto i = std::min(static_cast<std::size_t>(u), g.n1 - 2);
  const auto k = std::min(static_cast<std::size_t>(w), g.n2 - 2);
  const double fu = u - static_cast<double>(i);
  const double fw = w - static_cast<double>(k);
  return (1 - fu) * (1 - fw) * v[g.index(i, k)] + fu * (1 - fw) * v[g.index(i + 1, k)] +
         (1 - fu) * fw * v[g.index(i, k + 1)] + fu * fw * v[g.index(i + 1, k + 1)];
}

bool same_geometry(const GridGeometry& a, const GridGeometry& b) {
  return a.n1 == b.n1 && a.n2 == b.n2 && std::abs(a.d1 - b.d1) < 1e-14 && std::abs(a.d2 - b.d2) < 1e-14 &&
         std::abs(a.x1_min - b.x1_min) < 1e-12 && std::abs(a.x2_min - b.x2_min) < 1e-12;
}

std::vector<double> speeds_on(const SpeedField& field, const GridGeometry& g) {
  if (same_geometry(field.geometry(), g)) {
    return {field.values().begin(), field.values().end()};
  }
  std::vector<double> c(g.size());
  for (std::size_t k = 0; k < g.n2; ++k) {
    for (std::size_t i = 0; i < g.n1; ++i) c[g.index(i, k)] = field.eval_clamped(g.node(i, k));
  }
  return c;
}

double trapezoid_weight(const GridGeometry& g, std::size_t i, std::size_t k) {
  double w = g.d1 * g.d2;
  if (i == 0 || i + 1 == g.n1) w *= 0.5;
  if (k == 0 || k + 1 == g.n2) w *= 0.5;
  return w;
}

struct SpatialStencil {
  std::size_t term = 0;
  std::vector<std::pair<std::size_t, double>> nodes;  // top-row column, space value
};

}  // namespace

double InteriorSnapshot::eval(Vec2 p) const { return bilinear_clamped(geometry, values, p); }

SimulationResult simulate(const SpeedField& field, const BoundarySource& source, const SimGrid& grid,
                          const ReceiverSpec& receivers, const SimulateOptions& options) {
  const GridGeometry& g = grid.space;
  const std::vector<double> c = speeds_on(field, g);
  const double c_max = *std::max_element(c.begin(), c.end());
  grid.validate(c_max);
  const std::size_t n_steps = grid.n_steps();
  const std::size_t n1 = g.n1, n2 = g.n2, top = n2 - 1;

  for (double x : receivers.positions) {
    if (x < g.x1_min - 1e-12 || x > g.x1_max() + 1e-12) throw DomainError("receiver outside the top edge");
  }
  for (double t : receivers.times) {
    if (t < grid.t_start - 1e-12 || t > grid.t_end + 1e-12) throw DomainError("receiver time outside the window");
  }
  for (double t : options.snapshot_times) {
    if (t < grid.t_start - 1e-12 || t > grid.t_end + 1e-12) throw DomainError("snapshot time outside the window");
  }

  std::vector<double> coef(g.size());
  for (std::size_t n = 0; n < g.size(); ++n) coef[n] = grid.dt * grid.dt * c[n] * c[n];
  const double r1 = 1.0 / (g.d1 * g.d1), r2 = 1.0 / (g.d2 * g.d2);
  const double inject = 2.0 / g.d2;

  std::vector<SpatialStencil> stencils;
  for (std::size_t q = 0; q < source.terms.size(); ++q) {
    const auto& term = source.terms[q];
    SpatialStencil st;
    st.term = q;
    const double lo = std::max(term.x_lo, g.x1_min), hi = std::min(term.x_hi, g.x1_max());
    if (hi < lo) continue;
    const auto i0 = static_cast<std::size_t>(std::max(0.0, std::ceil((lo - g.x1_min) / g.d1 - 1e-9)));
    const auto i1 = std::min(n1 - 1, static_cast<std::size_t>(std::floor((hi - g.x1_min) / g.d1 + 1e-9)));
    for (std::size_t i = i0; i <= i1; ++i) {
      const double v = term.space(g.x1_min + g.d1 * static_cast<double>(i));
      if (v != 0.0) st.nodes.emplace_back(i, v);
    }
    if (!st.nodes.empty()) stencils.push_back(std::move(st));
  }

  std::vector<double> prev(g.size(), 0.0), cur(g.size(), 0.0), next(g.size(), 0.0);
  std::vector<double> forcing(n1, 0.0);
  const bool want_traces = !receivers.times.empty() && !receivers.positions.empty();
  std::vector<double> top_history;
  if (want_traces) top_history.assign((n_steps + 1) * n1, 0.0);

  SimulationResult result;
  std::vector<std::size_t> snap_order(options.snapshot_times.size());
  for (std::size_t s = 0; s < snap_order.size(); ++s) snap_order[s] = s;
  result.snapshots.resize(options.snapshot_times.size());
  std::vector<double> w_over_c2;
  if (options.energy) {
    w_over_c2.resize(g.size());
    result.energy.reserve(n_steps);
    for (std::size_t k = 0; k < n2; ++k) {
      for (std::size_t i = 0; i < n1; ++i) {
        w_over_c2[g.index(i, k)] = trapezoid_weight(g, i, k) / (c[g.index(i, k)] * c[g.index(i, k)]);
      }
    }
  }

  auto take_snapshots = [&](std::size_t n) {
    // Snapshots with t in [t_n, t_{n+1}] are interpolated from cur (t_n) and next (t_{n+1}).
    for (std::size_t s = 0; s < options.snapshot_times.size(); ++s) {
      auto& snap = result.snapshots[s];
      if (!snap.values.empty()) continue;
      const double q = (options.snapshot_times[s] - grid.t_start) / grid.dt - static_cast<double>(n);
      if (q < -1e-9 || q > 1.0 + 1e-9) continue;
      const double f = std::clamp(q, 0.0, 1.0);
      snap.time = options.snapshot_times[s];
      snap.geometry = g;
      snap.values.resize(g.size());
      for (std::size_t p = 0; p < g.size(); ++p) snap.values[p] = (1.0 - f) * cur[p] + f * next[p];
    }
  };

  for (std::size_t n = 0; n < n_steps; ++n) {
    const double t = grid.time(n);
    if (want_traces) std::copy(cur.begin() + static_cast<long>(top * n1), cur.end(), top_history.begin() + static_cast<long>(n * n1));
    std::fill(forcing.begin(), forcing.end(), 0.0);
    for (const auto& st : stencils) {
      const double amp = source.terms[st.term].time(t);
      if (amp == 0.0) continue;
      for (const auto& [i, v] : st.nodes) forcing[i] += inject * v * amp;
    }
    double kinetic = 0.0, potential = 0.0;
    for (std::size_t k = 0; k < n2; ++k) {
      const double* row = cur.data() + k * n1;
      const double* down = cur.data() + (k == 0 ? 1 : k - 1) * n1;
      const double* up = cur.data() + (k == top ? top - 1 : k + 1) * n1;
      const double* pr = prev.data() + k * n1;
      const double* cf = coef.data() + k * n1;
      double* nx = next.data() + k * n1;
      auto update = [&](std::size_t i, double left, double right) {
        double lap = (left + right - 2.0 * row[i]) * r1 + (up[i] + down[i] - 2.0 * row[i]) * r2;
        if (k == top) lap += forcing[i];
        nx[i] = 2.0 * row[i] - pr[i] + cf[i] * lap;
        return lap;
      };
      if (!options.energy) {
        update(0, row[1], row[1]);
        for (std::size_t i = 1; i + 1 < n1; ++i) update(i, row[i - 1], row[i + 1]);
        update(n1 - 1, row[n1 - 2], row[n1 - 2]);
      } else {
        for (std::size_t i = 0; i < n1; ++i) {
          const double left = i == 0 ? row[1] : row[i - 1];
          const double right = i + 1 == n1 ? row[n1 - 2] : row[i + 1];
          double lap = update(i, left, right);
          if (k == top) lap -= forcing[i];
          const std::size_t p = k * n1 + i;
          const double v = (nx[i] - row[i]) / grid.dt;
          kinetic += w_over_c2[p] * v * v;
          potential -= w_over_c2[p] * c[p] * c[p] * nx[i] * lap;
        }
      }
    }
    if (options.energy) result.energy.push_back(0.5 * (kinetic + potential));
    take_snapshots(n);
    std::swap(prev, cur);
    std::swap(cur, next);
  }
  if (want_traces) std::copy(cur.begin() + static_cast<long>(top * n1), cur.end(), top_history.begin() + static_cast<long>(n_steps * n1));
  for (std::size_t s = 0; s < options.snapshot_times.size(); ++s) {
    auto& snap = result.snapshots[s];
    if (!snap.values.empty()) continue;
    snap.time = options.snapshot_times[s];
    snap.geometry = g;
    snap.values = cur;
  }

  if (want_traces) {
    const auto nt = static_cast<Eigen::Index>(receivers.times.size());
    const auto nr = static_cast<Eigen::Index>(receivers.positions.size());
    result.traces = Matrix::Zero(nt, nr);
    std::vector<std::size_t> col(receivers.positions.size());
    std::vector<double> colf(receivers.positions.size());
    for (std::size_t r = 0; r < receivers.positions.size(); ++r) {
      const double u = std::clamp((receivers.positions[r] - g.x1_min) / g.d1, 0.0, static_cast<double>(n1 - 1));
      col[r] = std::min(static_cast<std::size_t>(u), n1 - 2);
      colf[r] = u - static_cast<double>(col[r]);
      if (colf[r] < 1e-9) colf[r] = 0.0;
      if (colf[r] > 1.0 - 1e-9) {
        col[r] += 1;
        colf[r] = 0.0;
        if (col[r] == n1 - 1) {
          col[r] = n1 - 2;
          colf[r] = 1.0;
        }
      }
    }
    for (std::size_t q = 0; q < receivers.times.size(); ++q) {
      const double s = std::clamp((receivers.times[q] - grid.t_start) / grid.dt, 0.0, static_cast<double>(n_steps));
      auto n = static_cast<std::size_t>(std::llround(s));
      double f = 0.0;
      if (std::abs(s - static_cast<double>(n)) > 1e-9) {
        n = std::min(static_cast<std::size_t>(s), n_steps - 1);
        f = s - static_cast<double>(n);
      }
      const double* h0 = top_history.data() + n * n1;
      const double* h1 = f > 0 ? h0 + n1 : h0;
      for (std::size_t r = 0; r < receivers.positions.size(); ++r) {
        const std::size_t i = col[r];
        const double a = colf[r];
        const double v0 = a > 0 ? (1 - a) * h0[i] + a * h0[i + 1] : h0[i];
        const double v1 = a > 0 ? (1 - a) * h1[i] + a * h1[i + 1] : h1[i];
        result.traces(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(r)) = (1 - f) * v0 + f * v1;
      }
    }
  }
  return result;
}

InteriorSnapshot final_state(const SpeedField& field, const BoundarySource& source,
                             const SimGrid& grid, double T) {
  SimGrid g = grid;
  g.t_end = T;
  SimulateOptions opts;
  opts.snapshot_times = {T};
  auto result = simulate(field, source, g, {}, opts);
  return std::move(result.snapshots.front());
}

double interior_inner(const InteriorSnapshot& u, const InteriorSnapshot& v, const SpeedField& field) {
  if (!same_geometry(u.geometry, v.geometry)) throw IntegrityError("interior_inner: snapshots on different grids");
  const GridGeometry& g = u.geometry;
  const std::vector<double> c = speeds_on(field, g);
  double acc = 0.0;
  for (std::size_t k = 0; k < g.n2; ++k) {
    for (std::size_t i = 0; i < g.n1; ++i) {
      const std::size_t p = g.index(i, k);
      acc += trapezoid_weight(g, i, k) * u.values[p] * v.values[p] / (c[p] * c[p]);
    }
  }
  return acc;
}

namespace {

// Gaussian restricted to Gamma; the endpoint nodes carry half weight so that the
// discrete source pairs with traces like the trapezoid rule on Gamma.
std::function<double(double)> restricted_space(double centre, double a, double half_width) {
  return [=](double x) {
    const double d = x - centre;
    const double v = std::exp(-a * d * d);
    const double e = std::abs(x) - half_width;
    if (e > 1e-9) return 0.0;
    if (e > -1e-9) return 0.5 * v;
    return v;
  };
}

// Gaussian time profile kept on [t_start, T]; the sample at T carries half weight.
std::function<double(double)> cut_time(double centre, double a, double T, double scale) {
  return [=](double t) {
    const double e = t - T;
    if (e > 1e-9) return 0.0;
    const double d = t - centre;
    const double v = scale * std::exp(-a * d * d);
    return e > -1e-9 ? 0.5 * v : v;
  };
}

std::function<double(double)> free_time(double centre, double a) {
  return [=](double t) {
    const double d = t - centre;
    return std::exp(-a * d * d);
  };
}

}  // namespace

BoundarySource basis_source(const BasisSpec& basis, std::size_t m) {
  const auto [i, j] = basis.unindex(m);
  const auto& p = basis.params();
  const double xj = basis.locations()[j];
  const double cut = basis.space_cutoff();
  SourceTerm term;
  term.x_lo = std::max(xj - cut, -p.half_width);
  term.x_hi = std::min(xj + cut, p.half_width);
  term.space = restricted_space(xj, p.a, p.half_width);
  term.time = cut_time(basis.times()[i], p.a, p.T, basis.normalization(m));
  BoundarySource src;
  src.terms.push_back(std::move(term));
  return src;
}

// ---------------------------------------------------------------------------

std::size_t ReceiverLattice::nt() const {
  return static_cast<std::size_t>(std::llround(2.0 * T / dt_r)) + 1;
}

std::size_t ReceiverLattice::nt_half() const {
  return static_cast<std::size_t>(std::llround(T / dt_r)) + 1;
}

long ReceiverLattice::r_max() const { return std::lround(half_width / dx_r); }

TraceSet::TraceSet(ReceiverLattice lattice, std::vector<TraceGenerator> generators,
                   std::vector<TraceEntry> entries)
    : lattice_(lattice), generators_(std::move(generators)), entries_(std::move(entries)) {
  for (const auto& e : entries_) {
    if (e.generator >= generators_.size()) throw IntegrityError("trace entry refers to a missing generator");
  }
}

namespace {

void add_shifted(Matrix& out, const ReceiverLattice& lat, const TraceGenerator& gen, long t_shift,
                 long x_shift, double scale) {
  const long nt = static_cast<long>(out.rows());
  const long rmax = lat.r_max();
  const long gr = static_cast<long>(gen.samples.rows()), gc = static_cast<long>(gen.samples.cols());
  // Row k of the output reads generator row k - t_shift - t_begin.
  const long k0 = std::max(0L, t_shift + gen.t_begin);
  const long k1 = std::min(nt, t_shift + gen.t_begin + gr);
  // Column of receiver r = col - rmax reads generator column r - x_shift - x_begin.
  const long c0 = std::max(0L, x_shift + gen.x_begin + rmax);
  const long c1 = std::min(static_cast<long>(out.cols()), x_shift + gen.x_begin + rmax + gc);
  if (k1 <= k0 || c1 <= c0) return;
  out.block(k0, c0, k1 - k0, c1 - c0) +=
      scale * gen.samples.block(k0 - t_shift - gen.t_begin, c0 - rmax - x_shift - gen.x_begin, k1 - k0, c1 - c0);
}

}  // namespace

Matrix TraceSet::trace(std::size_t n) const {
  if (n >= entries_.size()) throw DomainError("trace index out of range");
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(lattice_.nt()), static_cast<Eigen::Index>(lattice_.nx()));
  const auto& e = entries_[n];
  add_shifted(out, lattice_, generators_[e.generator], e.t_shift, e.x_shift, e.scale);
  return out;
}

Matrix TraceSet::combine(const Matrix& coeffs) const {
  if (static_cast<std::size_t>(coeffs.size()) != entries_.size()) {
    throw IntegrityError("TraceSet::combine: coefficient count does not match the trace set");
  }
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(lattice_.nt()), static_cast<Eigen::Index>(lattice_.nx()));
  for (std::size_t n = 0; n < entries_.size(); ++n) {
    const double w = coeffs.data()[n];
    if (w == 0.0) continue;
    const auto& e = entries_[n];
    add_shifted(out, lattice_, generators_[e.generator], e.t_shift, e.x_shift, w * e.scale);
  }
  return out;
}

std::uint64_t TraceSet::fingerprint() const {
  std::ostringstream head;
  head.precision(17);
  head << lattice_.dt_r << ' ' << lattice_.dx_r << ' ' << lattice_.T << ' ' << lattice_.half_width << '\n';
  for (const auto& e : entries_) head << e.generator << ' ' << e.t_shift << ' ' << e.x_shift << ' ' << e.scale << '\n';
  std::uint64_t h = io::fnv1a(head.str());
  for (const auto& gen : generators_) {
    std::ostringstream gh;
    gh << gen.t_begin << ' ' << gen.x_begin << ' ' << gen.samples.rows() << ' ' << gen.samples.cols();
    h = io::fnv1a(gh.str(), h);
    h = io::hash_doubles(std::span<const double>(gen.samples.data(), static_cast<std::size_t>(gen.samples.size())), h);
  }
  return h;
}

void TraceSet::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::ostringstream m;
  m.precision(17);
  m << "bcwave-traces 1\n";
  m << "dt_r " << lattice_.dt_r << "\ndx_r " << lattice_.dx_r << "\nT " << lattice_.T << "\nhalf_width "
    << lattice_.half_width << "\n";
  m << "generators " << generators_.size() << "\n";
  for (std::size_t k = 0; k < generators_.size(); ++k) {
    const auto& gen = generators_[k];
    const std::string file = "gen_" + std::to_string(k) + ".bin";
    io::write_matrix(dir / file, gen.samples);
    m << "gen " << k << ' ' << gen.t_begin << ' ' << gen.x_begin << ' ' << gen.samples.rows() << ' '
      << gen.samples.cols() << ' ' << file << ' '
      << io::hex(io::hash_doubles(std::span<const double>(gen.samples.data(), static_cast<std::size_t>(gen.samples.size()))))
      << "\n";
  }
  m << "entries " << entries_.size() << "\n";
  for (std::size_t n = 0; n < entries_.size(); ++n) {
    const auto& e = entries_[n];
    m << "entry " << n << ' ' << e.generator << ' ' << e.t_shift << ' ' << e.x_shift << ' ' << e.scale << "\n";
  }
  m << "fingerprint " << io::hex(fingerprint()) << "\n";
  io::write_text(dir / "manifest.txt", m.str());
}

TraceSet TraceSet::load(const std::filesystem::path& dir) {
  std::istringstream in(io::read_text(dir / "manifest.txt"));
  std::string word;
  int version = 0;
  in >> word >> version;
  if (word != "bcwave-traces" || version != 1) throw IntegrityError("not a trace manifest: " + dir.string());
  ReceiverLattice lat;
  std::size_t n_gen = 0, n_entries = 0;
  std::string key;
  in >> key >> lat.dt_r >> key >> lat.dx_r >> key >> lat.T >> key >> lat.half_width >> key >> n_gen;
  if (!in || key != "generators") throw IntegrityError("malformed trace manifest header");
  std::vector<TraceGenerator> gens(n_gen);
  for (std::size_t k = 0; k < n_gen; ++k) {
    std::size_t idx = 0, rows = 0, cols = 0;
    std::string file, hash;
    in >> key >> idx >> gens[k].t_begin >> gens[k].x_begin >> rows >> cols >> file >> hash;
    if (!in || key != "gen" || idx != k) throw IntegrityError("malformed generator line in trace manifest");
    gens[k].samples = io::read_matrix(dir / file, rows, cols);
    const auto h = io::hex(io::hash_doubles(
        std::span<const double>(gens[k].samples.data(), static_cast<std::size_t>(gens[k].samples.size()))));
    if (h != hash) throw ProvenanceError("trace payload " + file + " does not match its manifest hash");
  }
  in >> key >> n_entries;
  if (!in || key != "entries") throw IntegrityError("malformed trace manifest entries");
  std::vector<TraceEntry> entries(n_entries);
  for (std::size_t n = 0; n < n_entries; ++n) {
    std::size_t idx = 0;
    in >> key >> idx >> entries[n].generator >> entries[n].t_shift >> entries[n].x_shift >> entries[n].scale;
    if (!in || key != "entry" || idx != n) throw IntegrityError("malformed entry line in trace manifest");
  }
  std::string fp;
  in >> key >> fp;
  TraceSet set(lat, std::move(gens), std::move(entries));
  if (key != "fingerprint" || fp != io::hex(set.fingerprint())) {
    throw ProvenanceError("trace set fingerprint mismatch in " + dir.string());
  }
  return set;
}

// ---------------------------------------------------------------------------

bool laterally_invariant(const SpeedField& field) {
  const auto& g = field.geometry();
  for (std::size_t k = 0; k < g.n2; ++k) {
    const double ref = field.at(0, k);
    for (std::size_t i = 1; i < g.n1; ++i) {
      if (std::abs(field.at(i, k) - ref) > 1e-14 * std::abs(ref)) return false;
    }
  }
  return true;
}

namespace {

struct GeneratorPlan {
  double x_centre = 0.0;
  double t_centre = 0.0;
  bool cut = false;        // Gaussian stops at T
  bool restrict = false;   // spatial profile restricted to Gamma
  long x_begin = 0;
  long x_count = 0;
};

long lattice_steps(double value, double step, const char* what) {
  const double q = value / step;
  const long n = std::lround(q);
  if (std::abs(q - static_cast<double>(n)) > 1e-6) {
    throw ConfigError(std::string(what) + " is not on the receiver lattice");
  }
  return n;
}

}  // namespace

TraceSet record_ndmap(const SpeedField& field, const BasisSpec& basis, const SimGrid& grid,
                      const ReceiverLattice& lattice, const RecordOptions& options) {
  const auto& p = basis.params();
  if (std::abs(lattice.T - p.T) > 1e-12) throw ConfigError("receiver lattice and basis disagree on T");
  if (p.half_width > lattice.half_width + 1e-12) throw ConfigError("source interval exceeds the receiver interval");
  if (std::abs(grid.t_end - 2.0 * p.T) > 1e-9) throw ConfigError("simulation must end at 2T");
  const long t_begin = lattice_steps(grid.t_start, lattice.dt_r, "simulation start");
  const long n_rec_t = lattice_steps(2.0 * p.T, lattice.dt_r, "2T") - t_begin + 1;
  const long rmax = lattice.r_max();
  (void)lattice_steps(p.quad_dt, lattice.dt_r, "basis quadrature step");

  const double cutoff = basis.space_cutoff();
  const std::size_t n_t = basis.n_times(), n_x = basis.n_locations();
  std::vector<bool> near_T(n_t);
  for (std::size_t i = 0; i < n_t; ++i) near_T[i] = basis.gaussian_time(i, p.T) > options.cut_threshold;
  std::vector<long> row_shift(n_t);
  const double t_ref = basis.times()[0];
  for (std::size_t i = 0; i < n_t; ++i) row_shift[i] = lattice_steps(basis.times()[i] - t_ref, lattice.dt_r, "source time");

  bool lateral = options.allow_lateral_shift && laterally_invariant(field);
  std::vector<long> loc_steps(n_x, 0);
  if (lateral) {
    for (std::size_t j = 0; j < n_x; ++j) {
      const double q = basis.locations()[j] / lattice.dx_r;
      loc_steps[j] = std::lround(q);
      if (std::abs(q - static_cast<double>(loc_steps[j])) > 1e-6) lateral = false;
    }
  }
  auto interior = [&](std::size_t j) {
    const double x = basis.locations()[j];
    return x - cutoff > -p.half_width && x + cutoff < p.half_width;
  };

  std::vector<GeneratorPlan> plans;
  // key: (location or -1 for the shared lateral generator, time row or -1 for the shift generator)
  std::map<std::pair<long, long>, std::size_t> plan_of;
  auto add_plan = [&](long loc, long row) {
    const auto key = std::make_pair(loc, row);
    if (auto it = plan_of.find(key); it != plan_of.end()) return it->second;
    GeneratorPlan gp;
    gp.x_centre = loc < 0 ? 0.0 : basis.locations()[static_cast<std::size_t>(loc)];
    gp.t_centre = row < 0 ? t_ref : basis.times()[static_cast<std::size_t>(row)];
    gp.cut = row >= 0;
    gp.restrict = loc >= 0;
    const long extra = loc < 0 ? lattice_steps(p.half_width, lattice.dx_r, "source half width") : 0;
    gp.x_begin = -rmax - extra;
    gp.x_count = 2 * (rmax + extra) + 1;
    plans.push_back(gp);
    plan_of[key] = plans.size() - 1;
    return plans.size() - 1;
  };

  std::vector<TraceEntry> entries(basis.size());
  for (std::size_t i = 0; i < n_t; ++i) {
    for (std::size_t j = 0; j < n_x; ++j) {
      const std::size_t m = basis.index(i, j);
      const bool shared = lateral && interior(j);
      const long loc = shared ? -1 : static_cast<long>(j);
      TraceEntry e;
      e.scale = basis.normalization(m);
      e.x_shift = shared ? loc_steps[j] : 0;
      if (near_T[i]) {
        e.generator = add_plan(loc, static_cast<long>(i));
        e.t_shift = 0;
      } else {
        e.generator = add_plan(loc, -1);
        e.t_shift = row_shift[i];
      }
      entries[m] = e;
    }
  }

  const double max_x = lattice.dx_r * static_cast<double>(rmax + (lateral ? lattice_steps(p.half_width, lattice.dx_r, "source half width") : 0));
  if (grid.space.x1_min > -max_x + 1e-9 || grid.space.x1_max() < max_x - 1e-9) {
    throw ConfigError("simulation grid does not cover the receivers needed by the trace generators");
  }

  std::vector<TraceGenerator> generators(plans.size());
  parallel_for(plans.size(), [&](std::size_t q) {
    const auto& gp = plans[q];
    SourceTerm term;
    term.x_lo = gp.x_centre - cutoff;
    term.x_hi = gp.x_centre + cutoff;
    if (gp.restrict) {
      term.x_lo = std::max(term.x_lo, -p.half_width);
      term.x_hi = std::min(term.x_hi, p.half_width);
      term.space = restricted_space(gp.x_centre, p.a, p.half_width);
    } else {
      const double xc = gp.x_centre, a = p.a;
      term.space = [xc, a](double x) { return std::exp(-a * (x - xc) * (x - xc)); };
    }
    term.time = gp.cut ? cut_time(gp.t_centre, p.a, p.T, 1.0) : free_time(gp.t_centre, p.a);
    BoundarySource src;
    src.terms.push_back(std::move(term));
    ReceiverSpec rec;
    rec.times.resize(static_cast<std::size_t>(n_rec_t));
    for (long k = 0; k < n_rec_t; ++k) rec.times[static_cast<std::size_t>(k)] = lattice.dt_r * static_cast<double>(t_begin + k);
    rec.positions.resize(static_cast<std::size_t>(gp.x_count));
    for (long c = 0; c < gp.x_count; ++c) rec.positions[static_cast<std::size_t>(c)] = lattice.dx_r * static_cast<double>(gp.x_begin + c);
    auto sim = simulate(field, src, grid, rec);
    generators[q].t_begin = t_begin;
    generators[q].x_begin = gp.x_begin;
    generators[q].samples = std::move(sim.traces);
  });
  return TraceSet(lattice, std::move(generators), std::move(entries));
}

}  // namespace bcwave
