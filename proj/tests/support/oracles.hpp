#pragma once

// Independent reference computations used by the tests. None of these share
// code with the library: quadrature comes from Boost.Math, ODEs are integrated
// with classical RK4, and extrema by exhaustive sampling.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace oracle {

/// Adaptive Gauss-Kronrod quadrature of f on [a, b].
inline double integral(const std::function<double(double)>& f, double a, double b, double tol = 1e-14) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 20, tol);
}

/// Classical fourth-order Runge-Kutta for y' = f(t, y) from t0 to t1.
inline double rk4(const std::function<double(double, double)>& f, double y0, double t0, double t1, int steps) {
  const double h = (t1 - t0) / steps;
  double y = y0;
  double t = t0;
  for (int k = 0; k < steps; ++k) {
    const double k1 = f(t, y);
    const double k2 = f(t + 0.5 * h, y + 0.5 * h * k1);
    const double k3 = f(t + 0.5 * h, y + 0.5 * h * k2);
    const double k4 = f(t + h, y + h * k3);
    y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
  }
  return y;
}

/// Classical RK4 for a system y' = f(y) (autonomous), from 0 to t1.
inline std::vector<double> rk4_system(const std::function<std::vector<double>(const std::vector<double>&)>& f,
                                      std::vector<double> y, double t1, int steps) {
  const double h = t1 / steps;
  auto axpy = [](const std::vector<double>& a, double s, const std::vector<double>& b) {
    std::vector<double> r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + s * b[i];
    return r;
  };
  for (int k = 0; k < steps; ++k) {
    const auto k1 = f(y);
    const auto k2 = f(axpy(y, 0.5 * h, k1));
    const auto k3 = f(axpy(y, 0.5 * h, k2));
    const auto k4 = f(axpy(y, h, k3));
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return y;
}

/// Minimum of f over n equally spaced samples of [a, b].
inline double sampled_min(const std::function<double(double)>& f, double a, double b, int n) {
  double m = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) m = std::min(m, f(a + (b - a) * i / (n - 1)));
  return m;
}

/// Maximum of f over n equally spaced samples of [a, b].
inline double sampled_max(const std::function<double(double)>& f, double a, double b, int n) {
  return -sampled_min([&](double x) { return -f(x); }, a, b, n);
}

/// Catalog trait profile a(x) = 2 - x^2 / (1 + x^2), written out independently.
inline double trait_profile(double x) { return 2.0 - x * x / (1.0 + x * x); }

/// Normalized Gaussian density.
inline double gaussian(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * M_PI));
}

}  // namespace oracle
