#include "bcwave/control.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bcwave {

double TauFunction::operator()(double y) const {
  if (x.empty()) throw DomainError("empty tau function");
  if (y <= x.front()) return values.front();
  if (y >= x.back()) return values.back();
  const auto it = std::upper_bound(x.begin(), x.end(), y);
  const auto k = static_cast<std::size_t>(it - x.begin());
  const double f = (y - x[k - 1]) / (x[k] - x[k - 1]);
  return (1 - f) * values[k - 1] + f * values[k];
}

TauFunction TauFunction::constant(double value, double x_lo, double x_hi) {
  return {{x_lo, x_hi}, {value, value}};
}

std::vector<double> BoundaryDistanceTable::row(double y) const {
  if (centres.empty()) throw DomainError("empty boundary distance table");
  auto pick = [&](std::size_t r) {
    std::vector<double> out(points.size());
    for (std::size_t c = 0; c < points.size(); ++c) out[c] = d(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    return out;
  };
  if (y < centres.front() - 1e-9 || y > centres.back() + 1e-9) {
    std::ostringstream msg;
    msg << "cap centre " << y << " outside the boundary distance table";
    throw DomainError(msg.str());
  }
  const auto it = std::lower_bound(centres.begin(), centres.end(), y - 1e-9);
  const auto k = static_cast<std::size_t>(it - centres.begin());
  if (std::abs(centres[k] - y) <= 1e-9 || k == 0) return pick(k);
  const double f = (y - centres[k - 1]) / (centres[k] - centres[k - 1]);
  auto lo = pick(k - 1), hi = pick(k);
  for (std::size_t c = 0; c < lo.size(); ++c) lo[c] = (1 - f) * lo[c] + f * hi[c];
  return lo;
}

BoundaryDistanceTable BoundaryDistanceTable::euclidean(std::vector<double> centres, std::vector<double> points) {
  BoundaryDistanceTable t;
  t.d.resize(static_cast<Eigen::Index>(centres.size()), static_cast<Eigen::Index>(points.size()));
  for (std::size_t r = 0; r < centres.size(); ++r) {
    for (std::size_t c = 0; c < points.size(); ++c) {
      t.d(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = std::abs(points[c] - centres[r]);
    }
  }
  t.centres = std::move(centres);
  t.points = std::move(points);
  return t;
}

std::pair<TauFunction, TauFunction> tau_for_cap(double y, double s, double h, double T,
                                                const BoundaryDistanceTable& table) {
  if (!(s >= 0) || !(h >= 0)) throw ConfigError("cap depth and height must be non-negative");
  if (s + h > T + 1e-12) {
    std::ostringstream msg;
    msg << "cap with s + h = " << s + h << " exceeds the source window T = " << T;
    throw ConfigError(msg.str());
  }
  const auto dist = table.row(y);
  TauFunction t1{table.points, std::vector<double>(table.points.size(), s)};
  TauFunction t2{table.points, std::vector<double>(table.points.size())};
  for (std::size_t c = 0; c < dist.size(); ++c) t2.values[c] = std::max(s + h - dist[c], s);
  return {std::move(t1), std::move(t2)};
}

std::vector<std::size_t> mask_for_tau(const TauFunction& tau, const BasisSpec& basis) {
  const double T = basis.params().T;
  std::vector<double> tau_at(basis.n_locations());
  for (std::size_t j = 0; j < basis.n_locations(); ++j) tau_at[j] = tau(basis.locations()[j]);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < basis.n_times(); ++i) {
    for (std::size_t j = 0; j < basis.n_locations(); ++j) {
      if (T - basis.times()[i] <= tau_at[j] + 1e-12) keep.push_back(basis.index(i, j));
    }
  }
  return keep;
}

Matrix b_vector(const BasisSpec& basis) {
  const auto& lat = basis.lattice();
  std::vector<double> p(lat.nt()), q(lat.nx(), 1.0);
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = basis.params().T - lat.t[k];
  return basis.inner_products(p, q);
}

double default_alpha(const ConnectingMatrix& K) {
  if (K.K.rows() == 0) throw ConfigError("empty connecting matrix");
  return 1e-4 * K.K.trace() / static_cast<double>(K.K.rows());
}

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0) || !std::isfinite(alpha)) {
    std::ostringstream msg;
    msg << "regularization alpha must be positive (got " << alpha << ")";
    throw ConfigError(msg.str());
  }
}

Eigen::MatrixXd gather(const Matrix& m, const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t a = 0; a < rows.size(); ++a) {
    for (std::size_t b = 0; b < cols.size(); ++b) {
      out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          m(static_cast<Eigen::Index>(rows[a]), static_cast<Eigen::Index>(cols[b]));
    }
  }
  return out;
}

Eigen::VectorXd gather(const Vector& v, const std::vector<std::size_t>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t a = 0; a < idx.size(); ++a) out(static_cast<Eigen::Index>(a)) = v(static_cast<Eigen::Index>(idx[a]));
  return out;
}

Vector flat(const Matrix& block) { return Eigen::Map<const Eigen::VectorXd>(block.data(), block.size()); }

Vector solve_masked(const Matrix& sym, const Vector& b, const std::vector<std::size_t>& mask, double alpha) {
  Vector f = Vector::Zero(b.size());
  if (mask.empty()) return f;
  Eigen::MatrixXd A = gather(sym, mask, mask);
  A.diagonal().array() += alpha;
  const Eigen::VectorXd rhs = gather(b, mask);
  Eigen::VectorXd x;
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() == Eigen::Success) {
    x = llt.solve(rhs);
  } else {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    if (ldlt.info() != Eigen::Success) {
      std::ostringstream msg;
      msg << "masked control system is singular (alpha = " << alpha << ", size " << mask.size() << ")";
      throw NumericalError(msg.str());
    }
    x = ldlt.solve(rhs);
  }
  if (!x.allFinite()) {
    std::ostringstream msg;
    msg << "masked control solve produced non-finite values (alpha = " << alpha << ")";
    throw NumericalError(msg.str());
  }
  for (std::size_t a = 0; a < mask.size(); ++a) f(static_cast<Eigen::Index>(mask[a])) = x(static_cast<Eigen::Index>(a));
  return f;
}

}  // namespace

Matrix symmetric_part(const ConnectingMatrix& K) { return 0.5 * (K.K + K.K.transpose()); }

Vector solve_control(const ConnectingMatrix& K, const Matrix& bvec, const std::vector<std::size_t>& mask,
                     double alpha) {
  check_alpha(alpha);
  if (static_cast<std::size_t>(bvec.size()) != K.size()) throw IntegrityError("solve_control: [b] size mismatch");
  return solve_masked(symmetric_part(K), flat(bvec), mask, alpha);
}

CapSource cap_source(const ConnectingMatrix& K, const Matrix& bvec, const CapSpec& cap,
                     const BasisSpec& basis, const BoundaryDistanceTable& table) {
  check_alpha(cap.alpha);
  const auto [tau1, tau2] = tau_for_cap(cap.y, cap.s, cap.h, basis.params().T, table);
  CapSource out;
  out.cap = cap;
  out.mask1 = mask_for_tau(tau1, basis);
  out.mask2 = mask_for_tau(tau2, basis);
  const Matrix sym = symmetric_part(K);
  const Vector b = flat(bvec);
  out.f1 = solve_masked(sym, b, out.mask1, cap.alpha);
  out.f2 = solve_masked(sym, b, out.mask2, cap.alpha);
  out.psi = out.f2 - out.f1;
  out.volume = out.psi.dot(b);
  return out;
}

CapSolver::CapSolver(const Matrix& sym, const Matrix& bvec, const BasisSpec& basis, double s, double alpha)
    : sym_(&sym), basis_(&basis), b_(flat(bvec)), s_(s), alpha_(alpha) {
  check_alpha(alpha);
  if (static_cast<std::size_t>(sym.rows()) != basis.size() || b_.size() != sym.rows()) {
    throw IntegrityError("CapSolver: K, [b] and basis sizes differ");
  }
  const auto& locs = basis.locations();
  mask1_ = mask_for_tau(TauFunction::constant(s, locs.front(), locs.back()), basis);
  in_mask1_.assign(basis.size(), 0);
  for (std::size_t m : mask1_) in_mask1_[m] = 1;
  f1_ = Vector::Zero(sym.rows());
  if (mask1_.empty()) return;
  Eigen::MatrixXd A = gather(sym, mask1_, mask1_);
  A.diagonal().array() += alpha;
  llt_.compute(A);
  if (llt_.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "K_tau + alpha is not positive definite at s = " << s << " (alpha = " << alpha
        << "); increase alpha";
    throw NumericalError(msg.str());
  }
  const Eigen::VectorXd x = llt_.solve(gather(b_, mask1_));
  for (std::size_t a = 0; a < mask1_.size(); ++a) f1_(static_cast<Eigen::Index>(mask1_[a])) = x(static_cast<Eigen::Index>(a));
}

CapSource CapSolver::solve(double y, double h, const BoundaryDistanceTable& table) const {
  const auto [tau1, tau2] = tau_for_cap(y, s_, h, basis_->params().T, table);
  (void)tau1;
  CapSource out;
  out.cap = {y, s_, h, alpha_};
  out.mask1 = mask1_;
  out.mask2 = mask_for_tau(tau2, *basis_);
  std::vector<std::size_t> extra;
  for (std::size_t m : out.mask2) {
    if (!in_mask1_[m]) extra.push_back(m);
  }
  out.f1 = f1_;
  out.f2 = f1_;
  if (!extra.empty()) {
    const Matrix& sym = *sym_;
    // Bordered system [A B; B^T C] [x1; x2] = [b1; b2] with A = K_{M1} + alpha factored.
    const Eigen::MatrixXd B = gather(sym, mask1_, extra);
    Eigen::MatrixXd C = gather(sym, extra, extra);
    C.diagonal().array() += alpha_;
    const Eigen::VectorXd b1 = gather(b_, mask1_);
    const Eigen::VectorXd b2 = gather(b_, extra);
    Eigen::MatrixXd AinvB = mask1_.empty() ? Eigen::MatrixXd(0, static_cast<Eigen::Index>(extra.size())) : Eigen::MatrixXd(llt_.solve(B));
    const Eigen::VectorXd x1_base = gather(f1_, mask1_);
    const Eigen::MatrixXd S = C - B.transpose() * AinvB;
    const Eigen::VectorXd r = b2 - B.transpose() * x1_base;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
    if (ldlt.info() != Eigen::Success) throw NumericalError("Schur complement of the cap system is singular");
    const Eigen::VectorXd x2 = ldlt.solve(r);
    const Eigen::VectorXd x1 = x1_base - AinvB * x2;
    out.f2.setZero();
    for (std::size_t a = 0; a < mask1_.size(); ++a) out.f2(static_cast<Eigen::Index>(mask1_[a])) = x1(static_cast<Eigen::Index>(a));
    for (std::size_t a = 0; a < extra.size(); ++a) out.f2(static_cast<Eigen::Index>(extra[a])) = x2(static_cast<Eigen::Index>(a));
    if (!out.f2.allFinite()) throw NumericalError("cap solve produced non-finite values");
  }
  out.psi = out.f2 - out.f1;
  out.volume = out.psi.dot(b_);
  return out;
}

}  // namespace bcwave
