#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace memddg {

/// Least-squares slope of log(y) against log(x). Non-positive samples are skipped.
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly, ++n;
  }
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const double denom = n * sxx - sx * sx;
  return denom != 0.0 ? (n * sxy - sx * sy) / denom : std::numeric_limits<double>::quiet_NaN();
}

struct TaylorSweep {
  std::vector<double> eps;
  std::vector<double> remainder; // |f(x+εd) − f(x) − ε·slope|
  double f0 = 0.0;
  double order = 0.0;          // fitted log-log slope of the remainder
  double max_relative = 0.0;   // max remainder / max(|f0|, ε|slope|)
};

/// Logarithmically spaced values from `lo` to `hi`, `per_decade` per decade.
inline std::vector<double> log_sweep(double lo, double hi, int per_decade = 2) {
  std::vector<double> out;
  const double a = std::log10(lo), b = std::log10(hi);
  const int steps = static_cast<int>(std::lround((b - a) * per_decade));
  for (int k = 0; k <= steps; ++k) out.push_back(std::pow(10.0, a + (b - a) * k / steps));
  return out;
}

/// Remainder study of f along a direction. `f_of_eps(ε)` evaluates the energy
/// at the perturbed state, `slope` is the predicted directional derivative.
/// Samples at or below the round-off floor (relative 1e-13 of f0) are
/// ignored by the slope fit.
inline TaylorSweep taylor_sweep(const std::function<double(double)> &f_of_eps, double slope,
                                std::span<const double> eps) {
  TaylorSweep out;
  out.f0 = f_of_eps(0.0);
  std::vector<double> fit_x, fit_y;
  for (double e : eps) {
    const double r = std::abs(f_of_eps(e) - out.f0 - e * slope);
    out.eps.push_back(e);
    out.remainder.push_back(r);
    const double scale = std::max(std::abs(out.f0), std::abs(e * slope));
    if (scale > 0.0) out.max_relative = std::max(out.max_relative, r / scale);
    else if (r > 0.0) out.max_relative = std::numeric_limits<double>::infinity();
    if (r > 1e-13 * std::max(std::abs(out.f0), 1e-300) * 10.0) {
      fit_x.push_back(e);
      fit_y.push_back(r);
    }
  }
  out.order = fit_x.size() >= 2 ? loglog_slope(fit_x, fit_y) : std::numeric_limits<double>::infinity();
  return out;
}

/// Central difference of f along a direction at step h.
inline double central_difference(const std::function<double(double)> &f_of_eps, double h) {
  return (f_of_eps(h) - f_of_eps(-h)) / (2.0 * h);
}

struct DifferenceStudy {
  std::vector<double> steps;
  std::vector<double> error; // |central difference − predicted|
  double order = 0.0;
  double max_error = 0.0;
  /// True when the error is at round-off level at every step (f is locally
  /// quadratic along the direction, or its derivative vanishes).
  bool exact = false;
  bool passes(double min_order) const { return exact || order >= min_order; }
};

/// Round-off level of f itself near 0: second differences at steps so small
/// that truncation (≈ f''δ²) is negligible.
inline double evaluation_noise(const std::function<double(double)> &f_of_eps) {
  const double f0 = f_of_eps(0.0);
  double noise = std::numeric_limits<double>::epsilon() * std::abs(f0);
  for (double d : {1e-12, 2e-12, 5e-12}) noise = std::max(noise, std::abs(f_of_eps(d) + f_of_eps(-d) - 2.0 * f0));
  return noise;
}

/// Convergence of central differences toward the predicted derivative.
/// Steps whose error is within 10× the cancellation noise (evaluation
/// noise / h) are dropped, and the order is fitted over the three finest
/// remaining steps, since the coarsest steps may be pre-asymptotic.
inline DifferenceStudy central_difference_study(const std::function<double(double)> &f_of_eps,
                                                double predicted, std::span<const double> steps,
                                                double roundoff = 1e-14) {
  DifferenceStudy out;
  const double scale = std::max({std::abs(f_of_eps(0.0)), std::abs(predicted), 1e-300});
  const double noise = evaluation_noise(f_of_eps);
  std::vector<std::pair<double, double>> resolved;
  for (double h : steps) {
    const double err = std::abs(central_difference(f_of_eps, h) - predicted);
    out.steps.push_back(h);
    out.error.push_back(err);
    out.max_error = std::max(out.max_error, err);
    if (err > std::max(roundoff * scale, 10.0 * noise / h)) resolved.emplace_back(h, err);
  }
  out.exact = resolved.empty();
  std::sort(resolved.begin(), resolved.end());
  if (resolved.size() > 3) resolved.resize(3);
  std::vector<double> fx, fy;
  for (const auto &[h, e] : resolved) {
    fx.push_back(h);
    fy.push_back(e);
  }
  out.order = fx.size() >= 2 ? loglog_slope(fx, fy) : std::numeric_limits<double>::infinity();
  return out;
}

} // namespace memddg
