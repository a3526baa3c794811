#pragma once

#include "bcwave/types.hpp"

#include <optional>
#include <span>
#include <vector>

namespace bcwave {

struct SplineOptions {
  /// Fixed smoothing parameter; chosen by generalized cross-validation when empty.
  std::optional<double> lambda;
  /// Search range for lambda, relative to the knot-spacing scale (mean gap)^3.
  double lambda_min = 1e-10;
  double lambda_max = 1e4;
};

/// Cubic smoothing spline: minimizes sum (y_i - f(x_i))^2 + lambda int f''^2 (Reinsch form).
class SmoothingSpline {
 public:
  SmoothingSpline(std::span<const double> x, std::span<const double> y, const SplineOptions& options = {});

  double operator()(double x) const;
  double derivative(double x) const;

  double lambda() const { return lambda_; }
  double gcv() const { return gcv_; }
  /// Root-mean-square residual of the fit at the data.
  double residual_rms() const { return residual_rms_; }
  const std::vector<double>& fitted() const { return f_; }

 private:
  std::size_t segment(double x) const;

  std::vector<double> x_, f_, gamma_;  // knots, fitted values, second derivatives
  double lambda_ = 0.0, gcv_ = 0.0, residual_rms_ = 0.0;
};

}  // namespace bcwave
