#include "bcwave/spline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bcwave {

namespace {

struct Fit {
  Eigen::VectorXd f, gamma;
  double gcv = 0.0;
};

// Reinsch: f = y - lambda Q gamma with (R + lambda Q^T Q) gamma = Q^T y.
Fit fit_for(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R, const Eigen::VectorXd& y, double lambda) {
  const Eigen::MatrixXd M = R + lambda * Q.transpose() * Q;
  const Eigen::LLT<Eigen::MatrixXd> llt(M);
  Fit fit;
  fit.gamma = llt.solve(Q.transpose() * y);
  fit.f = y - lambda * Q * fit.gamma;
  // I - A = lambda Q M^-1 Q^T.
  const Eigen::MatrixXd MinvQt = llt.solve(Q.transpose());
  const double tr = lambda * (Q * MinvQt).trace();
  const auto n = static_cast<double>(y.size());
  const double rss = (y - fit.f).squaredNorm();
  fit.gcv = tr > 0 ? n * rss / (tr * tr) : std::numeric_limits<double>::infinity();
  return fit;
}

}  // namespace

SmoothingSpline::SmoothingSpline(std::span<const double> x, std::span<const double> y, const SplineOptions& options) {
  const std::size_t n = x.size();
  if (n != y.size()) throw ConfigError("spline: x and y differ in length");
  if (n < 4) throw ConfigError("spline: need at least 4 points");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(x[i] > x[i - 1])) throw ConfigError("spline: abscissae must increase strictly");
  }
  x_.assign(x.begin(), x.end());
  std::vector<double> h(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) h[i] = x[i + 1] - x[i];
  const auto m = static_cast<Eigen::Index>(n - 2);
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), m);
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto k = static_cast<std::size_t>(j) + 1;  // interior knot
    Q(j, j) = 1.0 / h[k - 1];
    Q(j + 1, j) = -1.0 / h[k - 1] - 1.0 / h[k];
    Q(j + 2, j) = 1.0 / h[k];
    R(j, j) = (h[k - 1] + h[k]) / 3.0;
    if (j + 1 < m) R(j, j + 1) = R(j + 1, j) = h[k] / 6.0;
  }
  const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(n));

  Fit best;
  if (options.lambda) {
    if (!(*options.lambda >= 0)) throw ConfigError("spline: lambda must be non-negative");
    lambda_ = *options.lambda;
    best = fit_for(Q, R, yv, lambda_);
  } else {
    const double scale = std::pow((x.back() - x.front()) / static_cast<double>(n - 1), 3);
    double lo = std::log10(options.lambda_min * scale), hi = std::log10(options.lambda_max * scale);
    best.gcv = std::numeric_limits<double>::infinity();
    double best_log = lo;
    const int coarse = 57;
    for (int q = 0; q < coarse; ++q) {
      const double l = lo + (hi - lo) * q / (coarse - 1);
      Fit f = fit_for(Q, R, yv, std::pow(10.0, l));
      if (f.gcv < best.gcv) {
        best = std::move(f);
        best_log = l;
      }
    }
    // Golden-section refinement around the best grid point.
    const double step = (hi - lo) / (coarse - 1);
    double a = best_log - step, b = best_log + step;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - g * (b - a), d = a + g * (b - a);
    Fit fc = fit_for(Q, R, yv, std::pow(10.0, c)), fd = fit_for(Q, R, yv, std::pow(10.0, d));
    for (int it = 0; it < 40; ++it) {
      if (fc.gcv < fd.gcv) {
        b = d;
        d = c;
        fd = std::move(fc);
        c = b - g * (b - a);
        fc = fit_for(Q, R, yv, std::pow(10.0, c));
      } else {
        a = c;
        c = d;
        fc = std::move(fd);
        d = a + g * (b - a);
        fd = fit_for(Q, R, yv, std::pow(10.0, d));
      }
    }
    const double l = 0.5 * (a + b);
    Fit fm = fit_for(Q, R, yv, std::pow(10.0, l));
    if (fm.gcv <= best.gcv) {
      best = std::move(fm);
      best_log = l;
    }
    lambda_ = std::pow(10.0, best_log);
  }
  gcv_ = best.gcv;
  f_.assign(best.f.data(), best.f.data() + best.f.size());
  gamma_.assign(n, 0.0);
  for (Eigen::Index j = 0; j < m; ++j) gamma_[static_cast<std::size_t>(j) + 1] = best.gamma(j);
  residual_rms_ = std::sqrt((yv - best.f).squaredNorm() / static_cast<double>(n));
}

std::size_t SmoothingSpline::segment(double x) const {
  if (x <= x_.front()) return 0;
  if (x >= x_.back()) return x_.size() - 2;
  const auto it = std::upper_bound(x_.begin(), x_.end(), x);
  return static_cast<std::size_t>(it - x_.begin()) - 1;
}

double SmoothingSpline::operator()(double x) const {
  const std::size_t i = segment(x);
  const double h = x_[i + 1] - x_[i];
  if (x < x_.front()) return f_.front() + derivative(x_.front()) * (x - x_.front());
  if (x > x_.back()) return f_.back() + derivative(x_.back()) * (x - x_.back());
  const double a = (x_[i + 1] - x) / h, b = (x - x_[i]) / h;
  return a * f_[i] + b * f_[i + 1] + ((a * a * a - a) * gamma_[i] + (b * b * b - b) * gamma_[i + 1]) * h * h / 6.0;
}

double SmoothingSpline::derivative(double x) const {
  const double xc = std::clamp(x, x_.front(), x_.back());
  const std::size_t i = segment(xc);
  const double h = x_[i + 1] - x_[i];
  const double a = (x_[i + 1] - xc) / h, b = (xc - x_[i]) / h;
  return (f_[i + 1] - f_[i]) / h + (-(3 * a * a - 1) * gamma_[i] + (3 * b * b - 1) * gamma_[i + 1]) * h / 6.0;
}

}  // namespace bcwave
