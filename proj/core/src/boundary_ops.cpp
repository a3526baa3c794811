#include "bcwave/boundary_ops.hpp"

#include "bcwave/io.hpp"
#include "bcwave/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bcwave {

std::vector<double> apply_R(std::span<const double> f) { return {f.rbegin(), f.rend()}; }

std::vector<double> apply_I(std::span<const double> f, double dt) {
  std::vector<double> out(f.size(), 0.0);
  for (std::size_t k = 1; k < f.size(); ++k) out[k] = out[k - 1] + 0.5 * dt * (f[k - 1] + f[k]);
  return out;
}

std::vector<double> apply_J(std::span<const double> f, double dt) {
  if (f.size() % 2 == 0) throw IntegrityError("apply_J: series on [0, 2T] needs an odd sample count");
  const std::size_t n = f.size() / 2;
  const std::vector<double> F = apply_I(f, dt);
  std::vector<double> out(n + 1);
  for (std::size_t k = 0; k <= n; ++k) out[k] = F[2 * n - k] - F[k];
  return out;
}

Matrix apply_R_rows(const Matrix& f) { return f.colwise().reverse(); }

Matrix apply_I_rows(const Matrix& f, double dt) {
  Matrix out = Matrix::Zero(f.rows(), f.cols());
  for (Eigen::Index k = 1; k < f.rows(); ++k) out.row(k) = out.row(k - 1) + 0.5 * dt * (f.row(k - 1) + f.row(k));
  return out;
}

Matrix apply_J_rows(const Matrix& f, double dt) {
  if (f.rows() % 2 == 0) throw IntegrityError("apply_J: series on [0, 2T] needs an odd sample count");
  const Eigen::Index n = f.rows() / 2;
  const Matrix F = apply_I_rows(f, dt);
  Matrix out(n + 1, f.cols());
  for (Eigen::Index k = 0; k <= n; ++k) out.row(k) = F.row(2 * n - k) - F.row(k);
  return out;
}

// ---------------------------------------------------------------------------

double ConnectingMatrix::symmetry_defect() const {
  const double norm = K.norm();
  if (norm == 0.0) return 0.0;
  return (K - K.transpose()).norm() / norm;
}

double ConnectingMatrix::min_eigen_ratio() const {
  const Eigen::MatrixXd sym = 0.5 * (K + K.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  if (top == 0.0) return 0.0;
  return ev.minCoeff() / top;
}

ConnectingMatrix ConnectingMatrix::masked(const std::vector<std::size_t>& keep) const {
  ConnectingMatrix out;
  out.trace_fingerprint = trace_fingerprint;
  out.mask = keep;
  out.K = Matrix::Zero(K.rows(), K.cols());
  for (std::size_t a : keep) {
    for (std::size_t b : keep) {
      out.K(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          K(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    }
  }
  return out;
}

void ConnectingMatrix::save(const std::filesystem::path& bin_path) const {
  io::write_matrix(bin_path, K);
  std::ostringstream m;
  m << "bcwave-connecting 1\nsize " << K.rows() << "\ntraces " << io::hex(trace_fingerprint) << "\npayload "
    << io::hex(io::hash_doubles(std::span<const double>(K.data(), static_cast<std::size_t>(K.size())))) << "\n";
  io::write_text(bin_path.string() + ".manifest", m.str());
}

ConnectingMatrix ConnectingMatrix::load(const std::filesystem::path& bin_path,
                                        std::optional<std::uint64_t> expected) {
  std::istringstream in(io::read_text(bin_path.string() + ".manifest"));
  std::string word, key, traces_hex, payload_hex;
  int version = 0;
  std::size_t n = 0;
  in >> word >> version >> key >> n >> key >> traces_hex >> key >> payload_hex;
  if (!in || word != "bcwave-connecting" || version != 1) throw IntegrityError("malformed K manifest");
  ConnectingMatrix out;
  out.K = io::read_matrix(bin_path, n, n);
  out.trace_fingerprint = std::stoull(traces_hex, nullptr, 16);
  if (io::hex(io::hash_doubles(std::span<const double>(out.K.data(), static_cast<std::size_t>(out.K.size())))) !=
      payload_hex) {
    throw ProvenanceError("K payload does not match its manifest");
  }
  if (expected && *expected != out.trace_fingerprint) {
    throw ProvenanceError("K was assembled from different traces (stale provenance)");
  }
  return out;
}

// ---------------------------------------------------------------------------

LatticeMap lattice_map(const ReceiverLattice& lattice, const BasisSpec& basis) {
  const auto& lat = basis.lattice();
  LatticeMap map;
  const double s = basis.params().quad_dt / lattice.dt_r;
  map.stride = static_cast<std::size_t>(std::llround(s));
  if (map.stride == 0 || std::abs(s - static_cast<double>(map.stride)) > 1e-6) {
    throw ConfigError("quadrature time step must be a multiple of the receiver time step");
  }
  for (double t : lat.t) {
    const double q = t / lattice.dt_r;
    const long k = std::lround(q);
    if (std::abs(q - static_cast<double>(k)) > 1e-6 || k < 0 || static_cast<std::size_t>(k) >= lattice.nt_half()) {
      throw ConfigError("quadrature time is not a receiver sample time");
    }
    map.rows.push_back(static_cast<std::size_t>(k));
  }
  for (double x : lat.x) {
    const double q = x / lattice.dx_r;
    const long r = std::lround(q);
    if (std::abs(q - static_cast<double>(r)) > 1e-6 || std::abs(r) > lattice.r_max()) {
      throw ConfigError("quadrature point on Gamma is not a receiver position");
    }
    map.cols.push_back(lattice.column(r));
  }
  return map;
}

namespace {

Matrix select(const Matrix& f, const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t a = 0; a < rows.size(); ++a) {
    for (std::size_t b = 0; b < cols.size(); ++b) {
      out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          f(static_cast<Eigen::Index>(rows[a]), static_cast<Eigen::Index>(cols[b]));
    }
  }
  return out;
}

}  // namespace

Matrix rj_time_factor(const BasisSpec& basis) {
  const auto& lat = basis.lattice();
  const std::size_t n = lat.nt() - 1;
  const double dt = basis.params().quad_dt;
  const Matrix& ts = basis.time_samples();
  const auto nti = static_cast<Eigen::Index>(basis.n_times());
  Matrix rj(static_cast<Eigen::Index>(lat.nt()), nti);
  std::vector<double> ext(2 * n + 1, 0.0);
  for (Eigen::Index i = 0; i < nti; ++i) {
    std::fill(ext.begin(), ext.end(), 0.0);
    for (std::size_t k = 0; k < n; ++k) ext[k] = ts(i, static_cast<Eigen::Index>(k));
    ext[n] = 0.5 * ts(i, static_cast<Eigen::Index>(n));
    const auto j = apply_J(ext, dt);
    const auto r = apply_R(j);
    for (std::size_t k = 0; k <= n; ++k) rj(static_cast<Eigen::Index>(k), i) = r[k];
  }
  return basis.time_samples_weighted() * rj;
}

ConnectingMatrix assemble_K(const TraceSet& traces, const BasisSpec& basis, const GramMatrix& gram) {
  if (traces.size() != basis.size()) throw IntegrityError("trace set and basis have different sizes");
  const auto& lattice = traces.lattice();
  if (std::abs(lattice.T - basis.params().T) > 1e-12) throw IntegrityError("trace set and basis disagree on T");
  const LatticeMap map = lattice_map(lattice, basis);
  const std::size_t N = basis.size();
  const std::size_t nt = basis.n_times(), nx = basis.n_locations();
  const std::size_t nth = lattice.nt_half();

  Matrix jl(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  Matrix rl(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  // Only the Gamma columns are needed from each trace.
  std::vector<std::size_t> all_rows(lattice.nt());
  for (std::size_t k = 0; k < all_rows.size(); ++k) all_rows[k] = k;
  std::vector<std::size_t> half_rows(nth);
  for (std::size_t k = 0; k < nth; ++k) half_rows[k] = k;

  parallel_for(N, [&](std::size_t n) {
    const Matrix tr = select(traces.trace(n), all_rows, map.cols);
    const Matrix j = apply_J_rows(tr, lattice.dt_r);
    Matrix r = apply_R_rows(tr.topRows(static_cast<Eigen::Index>(nth)));
    std::vector<std::size_t> sel(map.rows.size());
    for (std::size_t a = 0; a < sel.size(); ++a) sel[a] = map.rows[a];
    std::vector<std::size_t> ident(map.cols.size());
    for (std::size_t b = 0; b < ident.size(); ++b) ident[b] = b;
    const Matrix pj = basis.inner_products(select(j, sel, ident));
    const Matrix pr = basis.inner_products(select(r, sel, ident));
    jl.col(static_cast<Eigen::Index>(n)) = Eigen::Map<const Eigen::VectorXd>(pj.data(), pj.size());
    rl.col(static_cast<Eigen::Index>(n)) = Eigen::Map<const Eigen::VectorXd>(pr.data(), pr.size());
  });

  const Matrix M = gram.solve_time(rj_time_factor(basis));
  ConnectingMatrix out;
  out.trace_fingerprint = traces.fingerprint();
  out.K.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  for (std::size_t i = 0; i < nt; ++i) {
    for (std::size_t j = 0; j < nx; ++j) {
      const auto col = static_cast<Eigen::Index>(basis.index(i, j));
      Eigen::VectorXd acc = jl.col(col);
      for (std::size_t ip = 0; ip < nt; ++ip) {
        const double w = M(static_cast<Eigen::Index>(ip), static_cast<Eigen::Index>(i));
        if (w == 0.0) continue;
        acc -= w * rl.col(static_cast<Eigen::Index>(basis.index(ip, j)));
      }
      out.K.col(col) = 0.5 * acc;
    }
  }
  return out;
}

}  // namespace bcwave
