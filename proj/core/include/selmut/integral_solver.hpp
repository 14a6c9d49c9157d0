#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "selmut/model.hpp"
#include "selmut/numerics.hpp"
#include "selmut/parabolic_solver.hpp"
#include "selmut/trajectory.hpp"

namespace selmut {

/// Composite trapezoid discretization of int K(z) (.) dz on [-radius, radius].
struct KernelQuadrature {
  std::vector<double> nodes;          ///< symmetric about 0
  std::vector<double> weights;        ///< trapezoid weights w_j
  std::vector<double> kernel_values;  ///< K(z_j), scaled so sum w_j K(z_j) = 1
  double radius = 0.0;
  double spacing = 0.0;
  double raw_mass = 0.0;   ///< sum w_j K(z_j) before renormalization
  double tail_mass = 0.0;  ///< estimate of int_{|z|>radius} K(z) exp(S|z|) dz

  std::size_t size() const noexcept { return nodes.size(); }
  /// w_j K(z_j) for node j.
  double mass_weight(std::size_t j) const noexcept { return weights[j] * kernel_values[j]; }
  /// sum_j w_j K(z_j) g(z_j).
  template <class F>
  double integrate(F&& g) const {
    double s = 0.0;
    for (std::size_t j = 0; j < nodes.size(); ++j) s += mass_weight(j) * g(nodes[j]);
    return s;
  }
};

struct KernelQuadratureOptions {
  double tol = 1e-10;
  double slope = 3.0;          ///< working slope bound S, default 3 A
  double max_radius = 100.0;   ///< cap on the truncation radius
  double spacing_fraction = 1.0 / 20.0;  ///< node spacing as a fraction of the kernel scale
};

/// Chooses the truncation radius so that the exponentially weighted tail is
/// below tol, then lays down trapezoid nodes. Throws KernelTruncationError if
/// the tail stays above tol up to max_radius.
KernelQuadrature build_kernel_quadrature(const ModelSpec& model, const KernelQuadratureOptions& options = {});

/// Largest exponent fed to exp() in the mutation term.
inline constexpr double kExponentClamp = 80.0;

struct ClampCounter {
  std::uint64_t clamped = 0;
  std::uint64_t evaluations = 0;
};

/// sum_j w_j K(z_j) b(x + eps z_j, I) exp((u(x + eps z_j) - u(x)) / eps) at node
/// x_index. Off-grid values come from interpolate() with the slope clamp A.
double mutation_term(const Field& u, std::size_t x_index, double I, const ModelSpec& model,
                     const KernelQuadrature& kq, double eps, ClampCounter* counter = nullptr);

/// Upper envelope constant for the kernel model: b_M int K exp(A|z|) dz + K2.
double integral_envelope_rate(const ModelSpec& model, const KernelQuadrature& kq, double A);

/// Explicit Euler integrator of u_t = R(x, I) + mutation_term with I = int exp(u/eps) dx.
class IntegralSolver {
 public:
  IntegralSolver(ModelSpec model, Grid1D grid, SolverConfig config, KernelQuadrature kq,
                 std::optional<NutrientRange> range = std::nullopt);

  SimState initial_state(const Field& u0) const;

  /// Right-hand side at every node; returns max_x of the mutation term.
  double rhs(const Field& u, double I, std::vector<double>& out, ClampCounter& counter) const;

  /// dt = min(dt_max, cfl eps / (max mutation term + K2)).
  double stable_dt(double max_mutation) const;

  SimState step(const SimState& state, double dt) const;
  SimState step(const SimState& state) const;

  /// Same recording contract as ParabolicSolver::run, plus clamp accounting.
  /// Throws StabilityError when more than 10% of the exponents of one step clamp.
  RunResult run(const Field& u0, const NutrientPath& frozen_I = {}) const;

  double nutrient(const Field& u) const;
  const KernelQuadrature& quadrature() const noexcept { return kq_; }
  const SolverConfig& config() const noexcept { return config_; }

  /// Centre and radius of the window on which |du/dt| is monitored.
  void set_monitor_window(double center, double radius) {
    monitor_center_ = center;
    monitor_radius_ = radius;
  }

 private:
  struct Shift {
    std::ptrdiff_t offset;  ///< whole-cell part of eps z_j / h
    double theta;           ///< fractional part in [0, 1)
  };

  double birth_at(std::size_t i, std::size_t j, double I) const;

  ModelSpec model_;
  Grid1D grid_;
  SolverConfig config_;
  KernelQuadrature kq_;
  std::optional<NutrientRange> range_;
  std::vector<Shift> shifts_;
  std::vector<double> birth_table_;  ///< b(x_i + eps z_j) when b ignores I
  double monitor_center_ = 0.0;
  double monitor_radius_ = 2.0;
};

}  // namespace selmut
