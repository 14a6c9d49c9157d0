#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "selmut/numerics.hpp"

namespace selmut {

/// Time series recorded by every solver, one row per accepted step.
struct Trajectory {
  std::vector<double> times;
  std::vector<double> I;
  std::vector<double> max_u;
  std::vector<double> argmax_u;
  std::vector<double> rho;  ///< total mass int n dx (NaN for limit runs)
  std::vector<double> dI_dt;
  std::vector<double> tv_I_cum;
  std::vector<double> boundary_leak;  ///< mass fraction in the two boundary half-cells
  std::vector<std::uint64_t> clamp_events;

  std::size_t size() const noexcept { return times.size(); }
  bool empty() const noexcept { return times.empty(); }

  void append(double t, double I_value, double max_u_value, double argmax_x, double rho_value,
              double leak = 0.0, std::uint64_t clamps = 0);

  /// Post-processes dI/dt (centered differences, one-sided at the ends) and
  /// the cumulative total variation of I.
  void finalize();
};

struct Snapshot {
  double t;
  Field u;
};

struct RunDiagnostics {
  std::vector<double> dt;        ///< accepted step sizes
  std::vector<double> dt_limit;  ///< stability limit in force at that step
  double min_boundary_margin = std::numeric_limits<double>::infinity();  ///< max u - u(boundary)
  std::uint64_t clamp_events = 0;
  std::uint64_t exponent_evaluations = 0;
  std::size_t clamp_warning_steps = 0;
  double max_time_derivative = 0.0;   ///< max |du/dt| on the monitored window
  double time_derivative_bound = 0.0; ///< matching a-priori bound (integral runs)
  int max_bisection_iterations = 0;   ///< limit runs only
  double max_constraint_residual = 0.0;
  std::vector<std::string> warnings;
};

struct RunResult {
  Trajectory trajectory;
  std::vector<Snapshot> snapshots;
  RunDiagnostics diagnostics;
};

/// Snapshot times k * period in [0, T], always including T.
std::vector<double> snapshot_schedule(double T, double period);

/// Snapshot with time closest to t (throws std::out_of_range when empty).
const Snapshot& nearest_snapshot(const std::vector<Snapshot>& snapshots, double t);

}  // namespace selmut
