#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace bcwave {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// A point or vector in the (x1, x2) plane. The half-space is x2 <= 0.
struct Vec2 {
  double x1 = 0.0;
  double x2 = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x1 + b.x1, a.x2 + b.x2}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x1 - b.x1, a.x2 - b.x2}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x1, s * a.x2}; }
  friend bool operator==(Vec2, Vec2) = default;

  double norm() const { return std::hypot(x1, x2); }
  double dot(Vec2 o) const { return x1 * o.x1 + x2 * o.x2; }
};

// Error hierarchy. The CLI maps these onto process exit codes.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Query outside the domain of a field or grid.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Solver breakdown, degenerate caps, factorization failures (exit code 3).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Persisted inputs do not match the manifest that produced them (exit code 4).
class ProvenanceError : public Error {
 public:
  using Error::Error;
};

/// Mismatched or corrupt inputs (manifests, matrix shapes).
class IntegrityError : public Error {
 public:
  using Error::Error;
};

}  // namespace bcwave
