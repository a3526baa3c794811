#pragma once

#include "bcwave/basis.hpp"
#include "bcwave/forward.hpp"
#include "bcwave/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace bcwave {

/// (Rf)(t) = f(T - t) on a uniform lattice over [0, T]: index reversal.
std::vector<double> apply_R(std::span<const double> f);

/// (Jf)(t_k) = int_{t_k}^{2T - t_k} f for a series on [0, 2T] (2n + 1 samples); returns the
/// n + 1 values on [0, T]. Trapezoid rule.
std::vector<double> apply_J(std::span<const double> f, double dt);

/// Cumulative trapezoid from the first sample.
std::vector<double> apply_I(std::span<const double> f, double dt);

/// Column-wise versions for traces (rows are time samples).
Matrix apply_R_rows(const Matrix& f);
Matrix apply_J_rows(const Matrix& f, double dt);
Matrix apply_I_rows(const Matrix& f, double dt);

/// Discrete connecting operator over basis indices (m = i * n_locations + j).
struct ConnectingMatrix {
  Matrix K;
  std::uint64_t trace_fingerprint = 0;
  std::optional<std::vector<std::size_t>> mask;

  std::size_t size() const { return static_cast<std::size_t>(K.rows()); }
  /// ||K - K^T||_F / ||K||_F.
  double symmetry_defect() const;
  /// min eigenvalue / max eigenvalue of the symmetric part.
  double min_eigen_ratio() const;
  /// Copy restricted to the index set: rows and columns outside it are zeroed.
  ConnectingMatrix masked(const std::vector<std::size_t>& keep) const;

  void save(const std::filesystem::path& bin_path) const;
  /// Reads K and checks the recorded trace fingerprint when `expected` is given.
  static ConnectingMatrix load(const std::filesystem::path& bin_path,
                               std::optional<std::uint64_t> expected = std::nullopt);
};

/// Indices of the receiver lattice rows/columns that carry the basis quadrature lattice.
struct LatticeMap {
  std::vector<std::size_t> rows;  ///< trace rows for quadrature times on [0, T]
  std::vector<std::size_t> cols;  ///< trace columns for quadrature points on Gamma
  std::size_t stride = 1;         ///< quad_dt / dt_r
};

LatticeMap lattice_map(const ReceiverLattice& lattice, const BasisSpec& basis);

/// Time factor of [RJ]: A(k, i) = <R J theta_i, theta_k> for normalized time profiles cut at T.
Matrix rj_time_factor(const BasisSpec& basis);

/// [K] = ([J Lambda] - [R Lambda^T] G^-1 [RJ]) / 2, assembled from traces alone.
ConnectingMatrix assemble_K(const TraceSet& traces, const BasisSpec& basis, const GramMatrix& gram);

}  // namespace bcwave
