#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace selmut {

/// Uniform discretization of a bounded trait interval [x_min, x_max].
class Grid1D {
 public:
  Grid1D(double x_min, double x_max, std::size_t n_nodes);

  double x_min() const noexcept { return x_min_; }
  double x_max() const noexcept { return x_max_; }
  std::size_t size() const noexcept { return n_nodes_; }
  double spacing() const noexcept { return h_; }
  double x(std::size_t i) const noexcept { return x_min_ + static_cast<double>(i) * h_; }
  std::vector<double> nodes() const;

  /// Index of the node nearest to x (clamped to the grid).
  std::size_t nearest(double x) const noexcept;

  bool operator==(const Grid1D&) const = default;

 private:
  double x_min_;
  double x_max_;
  std::size_t n_nodes_;
  double h_;
};

/// Node samples of a scalar function on a Grid1D.
class Field {
 public:
  explicit Field(const Grid1D& grid, double value = 0.0);
  Field(const Grid1D& grid, std::vector<double> values);

  template <class F>
  static Field sample(const Grid1D& grid, F&& f) {
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(grid.x(i));
    return Field(grid, std::move(v));
  }

  const Grid1D& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double& operator[](std::size_t i) noexcept { return values_[i]; }

  double max() const noexcept;
  double min() const noexcept;
  std::size_t argmax() const noexcept;
  bool all_finite() const noexcept;

 private:
  Grid1D grid_;
  std::vector<double> values_;
};

/// Composite trapezoid rule over the whole grid.
double trapezoid(const Field& f);

struct ExpIntegral {
  double value;      ///< may underflow to 0 or overflow to inf
  double log_value;  ///< always finite for finite input
};

/// Integral of w * exp(u / eps), evaluated as exp(M/eps) * int w exp((u - M)/eps)
/// with M = max u so that no intermediate term overflows.
ExpIntegral weighted_exp_integral(const Field& u, const Field& w, double eps);

/// Same, restricted to the node range [first, last] (inclusive).
ExpIntegral weighted_exp_integral(const Field& u, const Field& w, double eps,
                                  std::size_t first, std::size_t last);

/// Unit weight shortcut: int exp(u / eps) dx.
ExpIntegral exp_integral(const Field& u, double eps);

enum class GradientScheme { centered, upwind_godunov };

/// Second-order centered differences inside, first-order one-sided at the ends.
Field centered_gradient(const Field& f);

/// Forward and backward differences per node. Ghost nodes copy the boundary
/// value, so backward[0] = forward[n-1] = 0.
struct OneSidedDifferences {
  std::vector<double> forward;
  std::vector<double> backward;
};
OneSidedDifferences one_sided_differences(const Field& f);

/// 3-point Laplacian; each boundary node takes its neighbour's value.
Field laplacian(const Field& f);

/// Piecewise-linear interpolation. Outside the grid the boundary slope,
/// clamped to [-slope_clamp, slope_clamp], is used for linear extrapolation.
double interpolate(const Field& f, double x, double slope_clamp);

/// Warns (returns false) when h > sqrt(eps) / 8.
bool resolves_concentration(const Grid1D& grid, double eps) noexcept;

}  // namespace selmut
