#include "selmut/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace selmut {

Grid1D::Grid1D(double x_min, double x_max, std::size_t n_nodes)
    : x_min_(x_min), x_max_(x_max), n_nodes_(n_nodes), h_(0.0) {
  if (!(x_min < x_max) || !std::isfinite(x_min) || !std::isfinite(x_max)) {
    throw std::invalid_argument("Grid1D: need finite x_min < x_max");
  }
  if (n_nodes < 3) {
    throw std::invalid_argument("Grid1D: need at least 3 nodes, got " + std::to_string(n_nodes));
  }
  h_ = (x_max - x_min) / static_cast<double>(n_nodes - 1);
}

std::vector<double> Grid1D::nodes() const {
  std::vector<double> xs(n_nodes_);
  for (std::size_t i = 0; i < n_nodes_; ++i) xs[i] = x(i);
  return xs;
}

std::size_t Grid1D::nearest(double x) const noexcept {
  const double s = std::round((x - x_min_) / h_);
  if (s <= 0.0) return 0;
  if (s >= static_cast<double>(n_nodes_ - 1)) return n_nodes_ - 1;
  return static_cast<std::size_t>(s);
}

Field::Field(const Grid1D& grid, double value) : grid_(grid), values_(grid.size(), value) {
  if (!std::isfinite(value)) throw std::invalid_argument("Field: non-finite fill value");
}

Field::Field(const Grid1D& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw std::invalid_argument("Field: " + std::to_string(values_.size()) +
                                " values for a grid of " + std::to_string(grid_.size()) + " nodes");
  }
  if (!all_finite()) throw std::invalid_argument("Field: non-finite value");
}

double Field::max() const noexcept { return *std::max_element(values_.begin(), values_.end()); }

double Field::min() const noexcept { return *std::min_element(values_.begin(), values_.end()); }

std::size_t Field::argmax() const noexcept {
  return static_cast<std::size_t>(std::max_element(values_.begin(), values_.end()) - values_.begin());
}

bool Field::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double trapezoid(const Field& f) {
  const auto v = f.values();
  double interior = 0.0;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) interior += v[i];
  return f.grid().spacing() * (interior + 0.5 * (v.front() + v.back()));
}

ExpIntegral weighted_exp_integral(const Field& u, const Field& w, double eps, std::size_t first,
                                  std::size_t last) {
  const auto uv = u.values();
  const auto wv = w.values();
  const double peak = *std::max_element(uv.begin() + first, uv.begin() + last + 1);
  const double h = u.grid().spacing();
  double scaled = 0.0;
  for (std::size_t i = first; i <= last; ++i) {
    const double weight = (i == first || i == last) ? 0.5 : 1.0;
    scaled += weight * wv[i] * std::exp((uv[i] - peak) / eps);
  }
  if (first == last) scaled = 0.0;
  scaled *= h;
  const double log_value = peak / eps + std::log(scaled);
  return {std::exp(log_value), log_value};
}

ExpIntegral weighted_exp_integral(const Field& u, const Field& w, double eps) {
  return weighted_exp_integral(u, w, eps, 0, u.size() - 1);
}

ExpIntegral exp_integral(const Field& u, double eps) {
  return weighted_exp_integral(u, Field(u.grid(), 1.0), eps);
}

Field centered_gradient(const Field& f) {
  const std::size_t n = f.size();
  const double h = f.grid().spacing();
  std::vector<double> g(n);
  g[0] = (f[1] - f[0]) / h;
  g[n - 1] = (f[n - 1] - f[n - 2]) / h;
  for (std::size_t i = 1; i + 1 < n; ++i) g[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
  return Field(f.grid(), std::move(g));
}

OneSidedDifferences one_sided_differences(const Field& f) {
  const std::size_t n = f.size();
  const double h = f.grid().spacing();
  OneSidedDifferences d{std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double diff = (f[i + 1] - f[i]) / h;
    d.forward[i] = diff;
    d.backward[i + 1] = diff;
  }
  d.backward[0] = 0.0;
  d.forward[n - 1] = 0.0;
  return d;
}

Field laplacian(const Field& f) {
  const std::size_t n = f.size();
  const double inv_h2 = 1.0 / (f.grid().spacing() * f.grid().spacing());
  std::vector<double> l(n);
  for (std::size_t i = 1; i + 1 < n; ++i) l[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) * inv_h2;
  l[0] = l[1];
  l[n - 1] = l[n - 2];
  return Field(f.grid(), std::move(l));
}

double interpolate(const Field& f, double x, double slope_clamp) {
  const Grid1D& g = f.grid();
  const std::size_t n = f.size();
  const double h = g.spacing();
  if (x <= g.x_min()) {
    const double slope = std::clamp((f[1] - f[0]) / h, -slope_clamp, slope_clamp);
    return f[0] + slope * (x - g.x_min());
  }
  if (x >= g.x_max()) {
    const double slope = std::clamp((f[n - 1] - f[n - 2]) / h, -slope_clamp, slope_clamp);
    return f[n - 1] + slope * (x - g.x_max());
  }
  const double s = (x - g.x_min()) / h;
  auto i = static_cast<std::size_t>(s);
  if (i >= n - 1) i = n - 2;
  const double theta = s - static_cast<double>(i);
  return (1.0 - theta) * f[i] + theta * f[i + 1];
}

bool resolves_concentration(const Grid1D& grid, double eps) noexcept {
  return grid.spacing() <= std::sqrt(eps) / 8.0;
}

}  // namespace selmut
