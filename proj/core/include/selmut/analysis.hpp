#pragma once

#include <cstddef>
#include <exception>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "selmut/errors.hpp"
#include "selmut/hj_solver.hpp"
#include "selmut/integral_solver.hpp"
#include "selmut/model.hpp"
#include "selmut/numerics.hpp"
#include "selmut/parabolic_solver.hpp"
#include "selmut/trajectory.hpp"

namespace selmut {

/// Outcome of one monitor. margin is the worst signed excess of the measured
/// quantity over its bound: positive means violated, <= 0 means satisfied.
struct Check {
  std::string name;
  bool passed = true;
  double margin = 0.0;
  double witness_x = 0.0;
  double witness_t = 0.0;
  double value = 0.0;  ///< headline measured quantity (check-specific)
  std::string detail;
};

/// I(t) within [I_m - s, I_M + s] at every recorded time, where s = c eps^2 for
/// the Laplacian model and s = integral_slack for the kernel model.
Check check_I_bounds(const Trajectory& traj, const NutrientRange& range, double eps, double c, Variant variant,
                     double integral_slack = 0.02);

/// u(t, x) <= -A|x - x0| + b0 + C t + tol at every snapshot node.
Check check_envelope(const std::vector<Snapshot>& snapshots, double A, double x0, double b0, double C,
                     double tol = 1e-8);

/// u(t, x) >= u0(x0) - G |x - x0| - K2 t - tol at every snapshot node
/// (G = sup |u0'|).
Check check_lower_bound(const std::vector<Snapshot>& snapshots, double u0_at_x0, double grad_u0, double x0,
                        double K2, double tol = 1e-8);

/// Constants of the linear-in-time, linear-in-space slope bound for the kernel
/// model, built from the model constants, the envelope rate C, sup |u0'| and u0(x0).
struct LipschitzGrowth {
  double C1 = 0.0;
  double C2 = 0.0;
  double C3 = 0.0;
  double C4 = 0.0;
};
LipschitzGrowth lipschitz_growth_constants(const ModelConstants& k, double envelope_rate, double grad_u0,
                                           double u0_at_x0);

/// max(|D+u|, |D-u|)(t, x) <= (1 + slack)(C2 t + C3 |x - x0| + C4) at every snapshot node.
Check check_lipschitz_growth(const std::vector<Snapshot>& snapshots, double x0, const LipschitzGrowth& g,
                             double slack = 0.1);

/// Slope profile of v = sqrt(2 D^2 - u).
struct RegularizingProfile {
  std::vector<double> times;
  std::vector<double> max_slope;  ///< m(t) = max nodewise |D v|
  double sup_excess = 0.0;        ///< sup_{t >= t0} (m(t) - 1 / (2 sqrt t))
  double witness_t = 0.0;
  double witness_x = 0.0;
};

/// D^2 = B + (A^2 + K2) T for the Laplacian model.
double regularizing_height(const ModelConstants& k, double T);

/// Throws DomainError if 2 D^2 - u <= 0 anywhere.
RegularizingProfile regularizing_profile(const std::vector<Snapshot>& snapshots, double D2, double t0);

/// Pass iff every value lies within rel * |pilot| of pilot.
Check check_uniform_band(const std::string& name, const std::vector<double>& values, double pilot, double rel);

/// Pass iff every value is at most factor * pilot.
Check check_bounded_by(const std::string& name, const std::vector<double>& values, double pilot, double factor);

/// Total variation of I on [t0, t1].
double total_variation(const Trajectory& traj, double t0, double t1);

/// TV of I on the window; passes iff the TV computed from every second sample
/// agrees with the full one to 5% (sampling is fine enough). value = TV.
Check check_bv(const Trajectory& traj, double t0, double t1);

struct Peak {
  double location = 0.0;
  double mass = 0.0;
  double width = 0.0;
};

struct ConcentrationReport {
  std::vector<Peak> peaks;
  double residual_mass = 0.0;
  bool degenerate = false;  ///< every node above the threshold (flat u)
  const Peak* dominant() const;
};

/// Peaks are maximal runs of nodes with u >= max u - delta, widened by four
/// widths (clipped halfway to the neighbouring run). Mass uses the overflow-safe
/// exponential integral of the widened run; location and width are the mean and
/// standard deviation of n = exp(u/eps) on it.
ConcentrationReport detect_concentrations(const Field& u, double eps, double delta, double I);

/// Mass of n on {u < -delta} (default delta = 20 eps) at most tol * I.
Check check_support(const Field& u, double eps, double I, double tol, std::optional<double> delta = std::nullopt);

/// |u(t, x) - u(s, x)| <= eta + B_mod (t - s) for snapshot pairs in [t_lo, t_hi]
/// and nodes with |x - center| <= radius. Throws std::invalid_argument if the
/// snapshot spacing inside the window exceeds a tenth of its length.
Check check_time_modulus(const std::vector<Snapshot>& snapshots, double t_lo, double t_hi, double center,
                         double radius, double B_mod, double eta);

/// Largest |u(t,x) - u(s,x)| / (t - s) over consecutive snapshots in the window.
double observed_time_rate(const std::vector<Snapshot>& snapshots, double t_lo, double t_hi, double center,
                          double radius);

// --- epsilon sweeps ---------------------------------------------------------

struct SweepMember {
  double eps = 0.0;
  RunResult run;
  std::optional<InitialData> initial;  ///< absent for stub members
};

struct ConvergenceReport {
  std::vector<double> eps;
  std::vector<double> e_u;
  std::vector<double> e_I;
  std::vector<double> max_u;
  std::vector<double> width;
  double width_slope = 0.0;  ///< least-squares slope of log width against log eps
  std::vector<Check> checks;
  bool passed() const;
  const Check* find(const std::string& name) const;
};

struct ComparisonOptions {
  double x0 = 0.0;
  double window_radius = 2.0;
  double T = 0.0;
  Variant variant = Variant::parabolic;
  double slack = 0.1;
  double slope_target = 0.5;
  double slope_tol = 0.15;
};

/// Compares member runs (eps strictly decreasing) with a limit run. For a
/// single member only the errors are reported, with no cross-eps checks.
ConvergenceReport compare_to_reference(const std::vector<SweepMember>& members, const RunResult& reference,
                                       const ComparisonOptions& options);

/// Shared inputs of the eps-solver members of a sweep.
struct SweepSetup {
  ModelSpec model;
  Variant variant = Variant::parabolic;
  Grid1D grid{-4.0, 4.0, 801};
  std::vector<double> eps_list;
  double T = 5.0;
  double x0 = 1.0;
  double I0 = 1.5;
  SolverConfig solver;
  KernelQuadratureOptions quadrature;
  std::optional<NutrientRange> range;
  unsigned jobs = 1;
};

/// A member run failed; carries the offending eps and the original exception.
class SweepMemberError : public Error {
 public:
  SweepMemberError(const std::string& what, double eps, std::exception_ptr cause)
      : Error(what), eps_(eps), cause_(std::move(cause)) {}
  double eps() const noexcept { return eps_; }
  std::exception_ptr cause() const noexcept { return cause_; }

 private:
  double eps_;
  std::exception_ptr cause_;
};

/// Runs one eps-solver member from the envelope-shaped initial datum.
SweepMember run_member(const SweepSetup& setup, double eps);

/// Runs all members on up to setup.jobs threads; results come back in eps_list
/// order. Throws SweepMemberError naming the first failing eps.
std::vector<SweepMember> run_members(const SweepSetup& setup);

/// Runs the members and compares them with the given limit run.
ConvergenceReport epsilon_sweep(const SweepSetup& setup, const RunResult& reference,
                                std::vector<SweepMember>* members_out = nullptr);

// --- calibration file -------------------------------------------------------

/// Flat key = value file of frozen pilot constants.
class Calibration {
 public:
  static Calibration load(const std::string& path);
  static Calibration parse(const std::string& text);
  std::string serialize() const;
  void save(const std::string& path) const;

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  /// Throws ConfigError when absent.
  double get(const std::string& key) const;
  void set(const std::string& key, double value) { values_[key] = value; }
  const std::map<std::string, double>& values() const noexcept { return values_; }

 private:
  std::map<std::string, double> values_;
};

}  // namespace selmut
