#pragma once

#include "bcwave/types.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace bcwave {

/// Parameters of the Gaussian space-time source basis
///   phi_{i,j}(t, x) = C_{i,j} exp(-a ((t - t_i)^2 + (x - x_j)^2))
/// on [0, T] x Gamma with Gamma = [-half_width, half_width]. Inner products use the
/// trapezoidal rule on the receiver lattice (quad_dt, quad_dx).
struct BasisParams {
  double T = 1.0;
  double t_first = 0.025;
  double t_last = 0.975;
  double dt_s = 0.025;
  double half_width = 3.0;  ///< l_s
  double dx_s = 0.025;
  double a = 1381.6;
  double quad_dt = 0.0025;   ///< receiver time sampling
  double quad_dx = 0.0125;   ///< receiver spatial sampling

  void validate() const;
};

/// Trapezoidal lattice on [0, T] x Gamma.
struct QuadratureLattice {
  std::vector<double> t, wt;  ///< nodes and weights on [0, T]
  std::vector<double> x, wx;  ///< nodes and weights on Gamma

  std::size_t nt() const { return t.size(); }
  std::size_t nx() const { return x.size(); }
};

/// Index m <-> (i, j) with m = i * nx + j: time-major, location-minor.
struct BasisIndex {
  std::size_t i = 0;  ///< source time
  std::size_t j = 0;  ///< source location
};

/// Normalized Gaussian basis. Each phi factors as time_factor(i) * space_factor(j), so the
/// Gram matrix is the Kronecker product of a time Gram and a space Gram.
class BasisSpec {
 public:
  explicit BasisSpec(const BasisParams& params);

  const BasisParams& params() const { return params_; }
  std::size_t n_times() const { return times_.size(); }
  std::size_t n_locations() const { return locations_.size(); }
  std::size_t size() const { return times_.size() * locations_.size(); }
  std::size_t index(std::size_t i, std::size_t j) const { return i * locations_.size() + j; }
  BasisIndex unindex(std::size_t m) const { return {m / locations_.size(), m % locations_.size()}; }

  std::span<const double> times() const { return times_; }
  std::span<const double> locations() const { return locations_; }
  const QuadratureLattice& lattice() const { return lattice_; }

  /// Unnormalized Gaussian profiles.
  double gaussian_time(std::size_t i, double t) const;
  double gaussian_space(std::size_t j, double x) const;
  /// d^2/dt^2 of the unnormalized time Gaussian (a Ricker wavelet up to sign and scale).
  double gaussian_time_dd(std::size_t i, double t) const;

  /// Quadrature norms of the unnormalized profiles on [0, T] and Gamma.
  double time_norm(std::size_t i) const { return time_norms_[i]; }
  double space_norm(std::size_t j) const { return space_norms_[j]; }
  double normalization(std::size_t m) const;

  /// phi_m(t, x), without the Theta cut (the Gaussian formula itself).
  double value(std::size_t m, double t, double x) const;

  /// Rows: basis time index, columns: lattice time node. Entries are the normalized time
  /// factors at the quadrature nodes; the weighted versions fold in the trapezoid weights.
  const Matrix& time_samples() const { return time_samples_; }
  const Matrix& space_samples() const { return space_samples_; }
  const Matrix& time_samples_weighted() const { return time_weighted_; }
  const Matrix& space_samples_weighted() const { return space_weighted_; }

  /// [F]_m = <F, phi_m> for a field sampled on the lattice (nt x nx); returns n_times x n_locations.
  Matrix inner_products(const Matrix& field) const;
  /// Same for separable fields F(t, x) = p(t) q(x) sampled on the lattice.
  Matrix inner_products(std::span<const double> p, std::span<const double> q) const;
  /// Sum_m coeff_m phi_m sampled on the lattice (coefficients n_times x n_locations).
  Matrix synthesize(const Matrix& coeffs) const;

  /// Spatial extent beyond which a space Gaussian is below 1e-16 of its peak.
  double space_cutoff() const;

 private:
  BasisParams params_;
  std::vector<double> times_;
  std::vector<double> locations_;
  QuadratureLattice lattice_;
  std::vector<double> time_norms_;
  std::vector<double> space_norms_;
  Matrix time_samples_, space_samples_, time_weighted_, space_weighted_;
};

BasisSpec build_basis(const BasisParams& params);

/// G = G_t (x) G_x, with Cholesky factors of both factors. A diagonal jitter of
/// 1e-12 * trace / n is added to a factor whose plain factorization fails.
class GramMatrix {
 public:
  explicit GramMatrix(const BasisSpec& basis);

  std::size_t size() const { return static_cast<std::size_t>(time_.rows() * space_.rows()); }
  const Matrix& time_factor() const { return time_; }
  const Matrix& space_factor() const { return space_; }
  double entry(std::size_t m, std::size_t n) const;
  Matrix dense() const;

  /// Solves G X = B for coefficient blocks B (n_times x n_locations).
  Matrix solve(const Matrix& rhs) const;
  /// Solves G_t X = B (B has n_times rows).
  Matrix solve_time(const Matrix& rhs) const;

  double min_pivot() const { return min_pivot_; }
  double jitter_time() const { return jitter_time_; }
  double jitter_space() const { return jitter_space_; }

 private:
  Matrix time_, space_;
  Eigen::LLT<Eigen::MatrixXd> time_llt_, space_llt_;
  double min_pivot_ = 0.0;
  double jitter_time_ = 0.0, jitter_space_ = 0.0;
  std::size_t nx_ = 0;
};

GramMatrix gram(const BasisSpec& basis);

/// Coefficient representations of a source: ip = [f] (inner products) and coeffs = G^-1 [f].
/// Both are stored as n_times x n_locations blocks.
struct CoeffVector {
  Matrix ip;
  Matrix coeffs;
};

/// Projects f(t, x) onto the basis by lattice quadrature.
CoeffVector project(const std::function<double(double, double)>& f, const BasisSpec& basis,
                    const GramMatrix& gram);

struct RickerReport {
  std::vector<double> errors;  ///< per time row i: ||phi - I^2 d_t^2 phi|| / ||phi|| on [0, T]
  double max_error_from_row4 = 0.0;
};

/// || p - I^2 p'' || / || p || on [0, T], with I the cumulative trapezoid started at `start`
/// on a lattice of step dt. Reports 1 when p'' vanishes identically.
double ricker_decomposition_error(const std::function<double(double)>& profile,
                                  const std::function<double(double)>& second_derivative,
                                  double start, double T, double dt);

/// Runs the decomposition check for every time row; rows i <= 3 (1-based) integrate from -t0.
RickerReport ricker_decomposition_check(const BasisSpec& basis, double t0, double dt_fine);

}  // namespace bcwave
