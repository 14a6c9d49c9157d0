#pragma once

#include <cstddef>
#include <vector>

#include "selmut/integral_solver.hpp"
#include "selmut/model.hpp"
#include "selmut/numerics.hpp"
#include "selmut/trajectory.hpp"

namespace selmut {

enum class HamiltonianKind { eikonal, kernel_integral };

/// Default half-width of the p-range on which the kernel moment-generating
/// function is tabulated.
inline constexpr double kMgfRange = 10.0;

/// int K(z) exp(p z) dz by direct quadrature. Throws ExtrapolationError when
/// |p| > p_limit.
double mgf_kernel(const KernelQuadrature& kq, double p, double p_limit = kMgfRange);

/// d/dp of mgf_kernel, int K(z) z exp(p z) dz.
double mgf_kernel_derivative(const KernelQuadrature& kq, double p, double p_limit = kMgfRange);

/// Cubic Hermite table of the kernel moment-generating function on
/// [-p_limit, p_limit].
class MgfTable {
 public:
  MgfTable() = default;
  MgfTable(const KernelQuadrature& kq, double p_limit = kMgfRange, double spacing = 0.01);

  /// Throws ExtrapolationError outside the tabulated range.
  double operator()(double p) const;
  double derivative(double p) const;
  /// Minimizer of the (convex) table; 0 for symmetric kernels.
  double argmin() const noexcept { return argmin_; }
  double p_limit() const noexcept { return p_limit_; }

 private:
  std::size_t locate(double p, double& s) const;

  double p_limit_ = 0.0;
  double spacing_ = 0.0;
  std::vector<double> values_;
  std::vector<double> slopes_;
  double argmin_ = 0.0;
};

/// Numerical Hamiltonian of a constrained limit equation u_t = H(x, u_x, I).
///
/// eikonal:          H = G(D-, D+) + R(x, I),  G = max(min(D-, 0)^2, max(D+, 0)^2)
/// kernel_integral:  H = b(x, I) F(D-, D+) + R(x, I),
///                   F = max(mgf(min(D-, p*)), mgf(max(D+, p*))), p* = argmin mgf
///
/// F is the Godunov flux of the convex function mgf: nonincreasing in D- and
/// nondecreasing in D+, which makes the explicit update monotone under the
/// step-size restriction reported by wave_speed().
class Hamiltonian {
 public:
  static Hamiltonian eikonal(ModelSpec model, NutrientRange range);
  static Hamiltonian kernel_integral(ModelSpec model, NutrientRange range, const KernelQuadrature& kq,
                                     double p_limit = kMgfRange, double table_spacing = 0.01);

  HamiltonianKind kind() const noexcept { return kind_; }
  const ModelSpec& model() const noexcept { return model_; }
  const NutrientRange& range() const noexcept { return range_; }
  const MgfTable& mgf_table() const noexcept { return table_; }

  /// I-independent gradient part (G or F above).
  double flux(double d_minus, double d_plus) const;
  /// Full Hamiltonian given the gradient part.
  double evaluate(double x, double gradient_part, double I) const;
  double numerical(double x, double d_minus, double d_plus, double I) const {
    return evaluate(x, flux(d_minus, d_plus), I);
  }
  /// Sum of |dH/dD-| and |dH/dD+| at the given differences (b bounded by b_M).
  double wave_speed(double d_minus, double d_plus) const;

 private:
  Hamiltonian(HamiltonianKind kind, ModelSpec model, NutrientRange range)
      : kind_(kind), model_(std::move(model)), range_(range) {}

  HamiltonianKind kind_;
  ModelSpec model_;
  NutrientRange range_;
  MgfTable table_;
};

struct HJState {
  double t = 0.0;
  Field u;
  double I = 0.0;
};

struct ConstraintStepInfo {
  int iterations = 0;
  double residual = 0.0;  ///< |max u| after the step
};

/// One explicit step of u_t = H(x, u_x, I) with I chosen so that max u stays 0.
/// Phi(I) = max_x [u + dt H_num(x, D-u, D+u, I)] is continuous and strictly
/// decreasing in I; its root is found by bisection on [I_m/4, 4 I_M] until both
/// |Phi| and the bracket width are <= tol, within 60 halvings. Throws ConstraintInfeasibleError when Phi
/// does not change sign on the bracket or the root is not reached.
HJState constrained_step(const HJState& state, const Hamiltonian& ham, double dt, double tol,
                         ConstraintStepInfo* info = nullptr);

inline constexpr int kMaxBisectionIterations = 60;

/// Default fixed step for limit runs: h / 10.
double default_hj_dt(const Grid1D& grid);

/// Integrates the constrained system to T with fixed dt. Requires |max u0| <= tol.
/// Rows are recorded every step (the row at t = 0 carries the multiplier of the
/// first step); snapshots every record_every and at T. Throws StabilityError
/// when dt violates the monotonicity restriction dt * wave_speed <= h.
RunResult run_hj(const Grid1D& grid, const Hamiltonian& ham, const Field& u0, double T, double dt,
                 double tol, double record_every = 0.1);

}  // namespace selmut
