#pragma once

#include "bcwave/basis.hpp"
#include "bcwave/boundary_ops.hpp"
#include "bcwave/types.hpp"

#include <memory>
#include <utility>
#include <vector>

namespace bcwave {

/// Piecewise-linear tau on boundary samples, constant beyond the end samples.
struct TauFunction {
  std::vector<double> x;
  std::vector<double> values;

  double operator()(double y) const;
  static TauFunction constant(double value, double x_lo, double x_hi);
};

/// Boundary distances d(x, y) for centres y (rows) and boundary samples x (columns).
struct BoundaryDistanceTable {
  std::vector<double> centres;
  std::vector<double> points;
  Matrix d;

  /// Row for centre y, linearly interpolated between neighbouring centres.
  std::vector<double> row(double y) const;

  /// |x - y|, the distances for c = 1.
  static BoundaryDistanceTable euclidean(std::vector<double> centres, std::vector<double> points);
};

struct CapSpec {
  double y = 0.0;
  double s = 0.0;
  double h = 0.0;
  double alpha = 0.0;
};

/// tau_1 = s and tau_2 = max(s + h - d(., y), s) sampled on the table's boundary points.
std::pair<TauFunction, TauFunction> tau_for_cap(double y, double s, double h, double T,
                                                const BoundaryDistanceTable& table);

/// Indices m = (i, j) with T - t_i <= tau(x_j), ascending.
std::vector<std::size_t> mask_for_tau(const TauFunction& tau, const BasisSpec& basis);

/// [b] for b(t) = T - t (n_times x n_locations).
Matrix b_vector(const BasisSpec& basis);

/// 1e-4 trace(K) / N.
double default_alpha(const ConnectingMatrix& K);

/// Solves ([K]_mask + alpha) f = [b]_mask with a symmetric factorization of the symmetric
/// part of K; entries outside the mask are zero.
Vector solve_control(const ConnectingMatrix& K, const Matrix& bvec, const std::vector<std::size_t>& mask,
                     double alpha);

struct CapSource {
  CapSpec cap;
  Vector f1, f2, psi;
  std::vector<std::size_t> mask1, mask2;
  double volume = 0.0;  ///< <psi, P_tau2 b>
};

/// Two masked solves and psi = f2 - f1.
CapSource cap_source(const ConnectingMatrix& K, const Matrix& bvec, const CapSpec& cap,
                     const BasisSpec& basis, const BoundaryDistanceTable& table);

/// (K + K^T) / 2.
Matrix symmetric_part(const ConnectingMatrix& K);

/// Cap solves sharing one depth s and alpha: K_{M1} + alpha is factored once and the extra
/// indices of each tau_2 mask are handled by a Schur complement. `sym` (the symmetric part
/// of K) and `basis` must outlive the solver.
class CapSolver {
 public:
  CapSolver(const Matrix& sym, const Matrix& bvec, const BasisSpec& basis, double s, double alpha);

  double depth() const { return s_; }
  double alpha() const { return alpha_; }
  const std::vector<std::size_t>& base_mask() const { return mask1_; }
  const Vector& base_solution() const { return f1_; }

  CapSource solve(double y, double h, const BoundaryDistanceTable& table) const;

 private:
  const Matrix* sym_;
  const BasisSpec* basis_;
  Vector b_;
  double s_, alpha_;
  std::vector<std::size_t> mask1_;
  std::vector<char> in_mask1_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Vector f1_;
};

}  // namespace bcwave
