#pragma once

#include <cstddef>
#include <functional>
#include <optional>

#include "selmut/model.hpp"
#include "selmut/numerics.hpp"
#include "selmut/trajectory.hpp"

namespace selmut {

enum class Boundary { neumann_zero_flux };

/// Numerical Hamiltonian used for |grad u|^2.
enum class HamiltonianFlux { godunov, lax_friedrichs };

struct SolverConfig {
  double eps = 0.1;
  double T = 1.0;
  double cfl_diffusion = 0.45;
  double cfl_advection = 0.45;
  double cfl_integral = 0.45;  ///< integral solver only
  double dt_max = 1e-2;
  double record_every = 0.1;
  Boundary boundary = Boundary::neumann_zero_flux;
  HamiltonianFlux flux = HamiltonianFlux::godunov;

  void validate() const;  ///< throws std::invalid_argument
};

struct SimState {
  double t = 0.0;
  Field u;
  double I = 0.0;
  std::size_t step_count = 0;
};

/// u0(x) = -A|x - x0| + b0, shifted so the nutrient integral equals a target.
struct InitialData {
  Field u;
  double x0;
  double A;
  double b0;
};

/// Builds the envelope-shaped initial datum carrying nutrient mass target_I0.
/// b0 is the root of log I(b) = log target_I0; since log I is affine in b with
/// slope 1/eps the root is obtained in one Newton step and then verified.
/// Throws InitializationError when target_I0 lies outside the nutrient range
/// or when b0 exceeds the model's envelope cap B (grid too small for the mass).
InitialData build_initial_data(const ModelSpec& model, const Grid1D& grid, double eps,
                               double target_I0, double x0,
                               const std::optional<NutrientRange>& range = std::nullopt,
                               std::optional<double> A = std::nullopt);

/// Godunov flux for p -> p^2 (monotone, upwind).
inline double godunov_p2(double d_minus, double d_plus) noexcept {
  const double l = d_minus < 0.0 ? d_minus : 0.0;
  const double r = d_plus > 0.0 ? d_plus : 0.0;
  return l * l > r * r ? l * l : r * r;
}

/// Lax-Friedrichs flux for p -> p^2 with dissipation coefficient alpha >= max |2p|.
inline double lax_friedrichs_p2(double d_minus, double d_plus, double alpha) noexcept {
  const double p = 0.5 * (d_minus + d_plus);
  return p * p + 0.5 * alpha * (d_plus - d_minus);
}

/// Optional replacement of the computed nutrient by a prescribed path I(t).
using NutrientPath = std::function<double(double t)>;

/// Explicit Euler integrator of u_t = eps u_xx + |u_x|^2 + R(x, I(t)) with
/// I = int psi exp(u/eps) dx, lagged by one step.
class ParabolicSolver {
 public:
  ParabolicSolver(ModelSpec model, Grid1D grid, SolverConfig config,
                  std::optional<NutrientRange> range = std::nullopt);

  SimState initial_state(const Field& u0) const;

  /// Largest admissible step for u under both CFL constraints and dt_max.
  double stable_dt(const Field& u) const;

  /// One explicit step of size dt (callers normally pass stable_dt).
  SimState step(const SimState& state, double dt) const;
  SimState step(const SimState& state) const { return step(state, stable_dt(state.u)); }

  /// Advances to config.T, recording the trajectory every step and snapshots
  /// every record_every. Throws BlowUpError on non-finite values or when I
  /// leaves (0, 10 I_M).
  RunResult run(const Field& u0, const NutrientPath& frozen_I = {}) const;

  double nutrient(const Field& u) const;

  const SolverConfig& config() const noexcept { return config_; }
  const Grid1D& grid() const noexcept { return grid_; }

 private:
  void rhs(const Field& u, double I, std::vector<double>& out) const;

  ModelSpec model_;
  Grid1D grid_;
  SolverConfig config_;
  std::optional<NutrientRange> range_;
  Field psi_;
};

/// Free-function form of ParabolicSolver::run.
RunResult run_parabolic(const ModelSpec& model, const Grid1D& grid, const SolverConfig& config,
                        const Field& u0, const std::optional<NutrientRange>& range = std::nullopt);

/// Upper envelope constant for the Laplacian model: A^2 + K2.
double parabolic_envelope_rate(const ModelSpec& model, double A);

}  // namespace selmut
