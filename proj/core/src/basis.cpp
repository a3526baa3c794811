#include "bcwave/basis.hpp"

#include "bcwave/boundary_ops.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bcwave {

namespace {

std::vector<double> uniform_points(double first, double last, double step, const char* what) {
  const double span = (last - first) / step;
  const auto n = static_cast<long>(std::llround(span));
  if (n < 0 || std::abs(span - static_cast<double>(n)) > 1e-6) {
    std::ostringstream msg;
    msg << what << ": range [" << first << ", " << last << "] is not a whole number of steps of " << step;
    throw ConfigError(msg.str());
  }
  std::vector<double> pts(static_cast<std::size_t>(n) + 1);
  for (std::size_t k = 0; k < pts.size(); ++k) pts[k] = first + step * static_cast<double>(k);
  return pts;
}

void trapezoid_lattice(double lo, double hi, double step, std::vector<double>& nodes,
                       std::vector<double>& weights, const char* what) {
  nodes = uniform_points(lo, hi, step, what);
  weights.assign(nodes.size(), step);
  if (nodes.size() == 1) {
    weights[0] = 0.0;
    return;
  }
  weights.front() *= 0.5;
  weights.back() *= 0.5;
}

}  // namespace

void BasisParams::validate() const {
  if (!(T > 0)) throw ConfigError("basis: T must be positive");
  if (!(dt_s > 0) || !(dx_s > 0) || !(a > 0)) throw ConfigError("basis: dt_s, dx_s and a must be positive");
  if (!(quad_dt > 0) || !(quad_dx > 0)) throw ConfigError("basis: quadrature steps must be positive");
  if (!(t_first >= 0) || !(t_last <= T) || !(t_last >= t_first)) {
    throw ConfigError("basis: source times must lie in [0, T] with t_first <= t_last");
  }
  if (!(half_width > 0)) throw ConfigError("basis: half_width must be positive");
}

BasisSpec::BasisSpec(const BasisParams& params) : params_(params) {
  params_.validate();
  times_ = uniform_points(params_.t_first, params_.t_last, params_.dt_s, "basis times");
  locations_ = uniform_points(-params_.half_width, params_.half_width, params_.dx_s, "basis locations");
  trapezoid_lattice(0.0, params_.T, params_.quad_dt, lattice_.t, lattice_.wt, "quadrature times");
  trapezoid_lattice(-params_.half_width, params_.half_width, params_.quad_dx, lattice_.x, lattice_.wx,
                    "quadrature locations");

  const auto nti = static_cast<Eigen::Index>(times_.size());
  const auto nxj = static_cast<Eigen::Index>(locations_.size());
  const auto ntq = static_cast<Eigen::Index>(lattice_.nt());
  const auto nxq = static_cast<Eigen::Index>(lattice_.nx());

  time_samples_.resize(nti, ntq);
  time_norms_.resize(times_.size());
  for (Eigen::Index i = 0; i < nti; ++i) {
    double sq = 0.0;
    for (Eigen::Index k = 0; k < ntq; ++k) {
      const double g = gaussian_time(static_cast<std::size_t>(i), lattice_.t[static_cast<std::size_t>(k)]);
      time_samples_(i, k) = g;
      sq += lattice_.wt[static_cast<std::size_t>(k)] * g * g;
    }
    if (!(sq > 0)) throw ConfigError("basis: a time profile has zero quadrature norm");
    time_norms_[static_cast<std::size_t>(i)] = std::sqrt(sq);
    time_samples_.row(i) /= std::sqrt(sq);
  }
  space_samples_.resize(nxj, nxq);
  space_norms_.resize(locations_.size());
  for (Eigen::Index j = 0; j < nxj; ++j) {
    double sq = 0.0;
    for (Eigen::Index l = 0; l < nxq; ++l) {
      const double h = gaussian_space(static_cast<std::size_t>(j), lattice_.x[static_cast<std::size_t>(l)]);
      space_samples_(j, l) = h;
      sq += lattice_.wx[static_cast<std::size_t>(l)] * h * h;
    }
    if (!(sq > 0)) throw ConfigError("basis: a space profile has zero quadrature norm");
    space_norms_[static_cast<std::size_t>(j)] = std::sqrt(sq);
    space_samples_.row(j) /= std::sqrt(sq);
  }
  const Eigen::Map<const Eigen::RowVectorXd> wt(lattice_.wt.data(), ntq);
  const Eigen::Map<const Eigen::RowVectorXd> wx(lattice_.wx.data(), nxq);
  time_weighted_ = time_samples_.array().rowwise() * wt.array();
  space_weighted_ = space_samples_.array().rowwise() * wx.array();
}

double BasisSpec::gaussian_time(std::size_t i, double t) const {
  const double d = t - times_[i];
  return std::exp(-params_.a * d * d);
}

double BasisSpec::gaussian_space(std::size_t j, double x) const {
  const double d = x - locations_[j];
  return std::exp(-params_.a * d * d);
}

double BasisSpec::gaussian_time_dd(std::size_t i, double t) const {
  const double d = t - times_[i];
  const double a = params_.a;
  return (4.0 * a * a * d * d - 2.0 * a) * std::exp(-a * d * d);
}

double BasisSpec::normalization(std::size_t m) const {
  const auto [i, j] = unindex(m);
  return 1.0 / (time_norms_[i] * space_norms_[j]);
}

double BasisSpec::value(std::size_t m, double t, double x) const {
  const auto [i, j] = unindex(m);
  return gaussian_time(i, t) * gaussian_space(j, x) * normalization(m);
}

Matrix BasisSpec::inner_products(const Matrix& field) const {
  if (field.rows() != static_cast<Eigen::Index>(lattice_.nt()) ||
      field.cols() != static_cast<Eigen::Index>(lattice_.nx())) {
    throw IntegrityError("inner_products: field is not sampled on the basis lattice");
  }
  return time_weighted_ * field * space_weighted_.transpose();
}

Matrix BasisSpec::inner_products(std::span<const double> p, std::span<const double> q) const {
  if (p.size() != lattice_.nt() || q.size() != lattice_.nx()) {
    throw IntegrityError("inner_products: separable factors are not sampled on the lattice");
  }
  const Eigen::Map<const Eigen::VectorXd> pv(p.data(), static_cast<Eigen::Index>(p.size()));
  const Eigen::Map<const Eigen::VectorXd> qv(q.data(), static_cast<Eigen::Index>(q.size()));
  const Eigen::VectorXd tp = time_weighted_ * pv;
  const Eigen::VectorXd sq = space_weighted_ * qv;
  return tp * sq.transpose();
}

Matrix BasisSpec::synthesize(const Matrix& coeffs) const {
  return time_samples_.transpose() * coeffs * space_samples_;
}

double BasisSpec::space_cutoff() const { return std::sqrt(36.9 / params_.a); }

BasisSpec build_basis(const BasisParams& params) { return BasisSpec(params); }

// ---------------------------------------------------------------------------

namespace {

Eigen::LLT<Eigen::MatrixXd> factor_with_jitter(const Matrix& g, double& jitter) {
  Eigen::MatrixXd m = g;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  jitter = 0.0;
  if (llt.info() == Eigen::Success) return llt;
  jitter = 1e-12 * m.trace() / static_cast<double>(m.rows());
  m.diagonal().array() += jitter;
  llt.compute(m);
  if (llt.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "Gram factorization failed even with jitter " << jitter << " (size " << m.rows() << ")";
    throw NumericalError(msg.str());
  }
  return llt;
}

}  // namespace

GramMatrix::GramMatrix(const BasisSpec& basis) : nx_(basis.n_locations()) {
  time_ = basis.time_samples_weighted() * basis.time_samples().transpose();
  space_ = basis.space_samples_weighted() * basis.space_samples().transpose();
  // Symmetrize away rounding.
  time_ = 0.5 * (time_ + time_.transpose()).eval();
  space_ = 0.5 * (space_ + space_.transpose()).eval();
  time_llt_ = factor_with_jitter(time_, jitter_time_);
  space_llt_ = factor_with_jitter(space_, jitter_space_);
  const Eigen::MatrixXd lt = time_llt_.matrixL();
  const Eigen::MatrixXd lx = space_llt_.matrixL();
  const double pt = lt.diagonal().array().square().minCoeff();
  const double px = lx.diagonal().array().square().minCoeff();
  min_pivot_ = pt * px;
}

double GramMatrix::entry(std::size_t m, std::size_t n) const {
  const auto mi = static_cast<Eigen::Index>(m / nx_), mj = static_cast<Eigen::Index>(m % nx_);
  const auto ni = static_cast<Eigen::Index>(n / nx_), nj = static_cast<Eigen::Index>(n % nx_);
  return time_(mi, ni) * space_(mj, nj);
}

Matrix GramMatrix::dense() const {
  const Eigen::Index nt = time_.rows(), nx = space_.rows();
  Matrix g(nt * nx, nt * nx);
  for (Eigen::Index i = 0; i < nt; ++i) {
    for (Eigen::Index k = 0; k < nt; ++k) {
      g.block(i * nx, k * nx, nx, nx) = time_(i, k) * space_;
    }
  }
  return g;
}

Matrix GramMatrix::solve(const Matrix& rhs) const {
  if (rhs.rows() != time_.rows() || rhs.cols() != space_.rows()) {
    throw IntegrityError("GramMatrix::solve: block shape mismatch");
  }
  const Eigen::MatrixXd x = time_llt_.solve(Eigen::MatrixXd(rhs));
  const Eigen::MatrixXd y = space_llt_.solve(Eigen::MatrixXd(x.transpose()));
  return y.transpose();
}

Matrix GramMatrix::solve_time(const Matrix& rhs) const {
  if (rhs.rows() != time_.rows()) throw IntegrityError("GramMatrix::solve_time: row mismatch");
  return time_llt_.solve(Eigen::MatrixXd(rhs));
}

GramMatrix gram(const BasisSpec& basis) { return GramMatrix(basis); }

CoeffVector project(const std::function<double(double, double)>& f, const BasisSpec& basis,
                    const GramMatrix& gram) {
  const auto& lat = basis.lattice();
  Matrix field(static_cast<Eigen::Index>(lat.nt()), static_cast<Eigen::Index>(lat.nx()));
  for (std::size_t k = 0; k < lat.nt(); ++k) {
    for (std::size_t l = 0; l < lat.nx(); ++l) {
      field(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = f(lat.t[k], lat.x[l]);
    }
  }
  CoeffVector out;
  out.ip = basis.inner_products(field);
  out.coeffs = gram.solve(out.ip);
  return out;
}

// ---------------------------------------------------------------------------

double ricker_decomposition_error(const std::function<double(double)>& profile,
                                  const std::function<double(double)>& second_derivative,
                                  double start, double T, double dt) {
  if (!(dt > 0) || !(T > 0) || start > 0) throw ConfigError("ricker check: need start <= 0 < T, dt > 0");
  // Lattice with 0 and T on nodes.
  const auto n_pos = static_cast<std::size_t>(std::ceil(T / dt));
  const double h = T / static_cast<double>(n_pos);
  const auto n_neg = static_cast<std::size_t>(std::llround(-start / h));
  const std::size_t n = n_neg + n_pos + 1;
  std::vector<double> dd(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = (static_cast<double>(k) - static_cast<double>(n_neg)) * h;
    dd[k] = second_derivative(t);
  }
  const std::vector<double> once = apply_I(dd, h);
  const std::vector<double> twice = apply_I(once, h);
  double num = 0.0, den = 0.0;
  for (std::size_t k = n_neg; k < n; ++k) {
    const double t = (static_cast<double>(k) - static_cast<double>(n_neg)) * h;
    const double w = (k == n_neg || k == n - 1) ? 0.5 * h : h;
    const double p = profile(t);
    num += w * (p - twice[k]) * (p - twice[k]);
    den += w * p * p;
  }
  if (!(den > 0)) throw NumericalError("ricker check: profile has zero norm on [0, T]");
  return std::sqrt(num / den);
}

RickerReport ricker_decomposition_check(const BasisSpec& basis, double t0, double dt_fine) {
  RickerReport report;
  const double T = basis.params().T;
  for (std::size_t i = 0; i < basis.n_times(); ++i) {
    const std::size_t one_based = i + 1;
    const double start = one_based <= 3 ? -t0 : 0.0;
    const double err = ricker_decomposition_error(
        [&](double t) { return basis.gaussian_time(i, t); },
        [&](double t) { return basis.gaussian_time_dd(i, t); }, start, T, dt_fine);
    report.errors.push_back(err);
    if (one_based >= 4) report.max_error_from_row4 = std::max(report.max_error_from_row4, err);
  }
  return report;
}

}  // namespace bcwave
