#include "selmut/parabolic_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "selmut/errors.hpp"

namespace selmut {

void SolverConfig::validate() const {
  auto in_cfl = [](double c) { return c > 0.0 && c <= 0.9; };
  if (!(eps > 0.0)) throw std::invalid_argument("solver eps must be positive");
  if (!(T >= 0.0)) throw std::invalid_argument("solver horizon T must be non-negative");
  if (!in_cfl(cfl_diffusion) || !in_cfl(cfl_advection) || !in_cfl(cfl_integral)) {
    throw std::invalid_argument("CFL factors must lie in (0, 0.9]");
  }
  if (!(dt_max > 0.0)) throw std::invalid_argument("dt_max must be positive");
  if (!(record_every > 0.0)) throw std::invalid_argument("record_every must be positive");
}

InitialData build_initial_data(const ModelSpec& model, const Grid1D& grid, double eps,
                               double target_I0, double x0,
                               const std::optional<NutrientRange>& range, std::optional<double> A) {
  const double slope = A.value_or(model.constants.A);
  if (!(target_I0 > 0.0) || !(eps > 0.0) || !(slope > 0.0)) {
    throw InitializationError("initial data needs target_I0 > 0, eps > 0 and A > 0");
  }
  if (range && (target_I0 < range->I_m * (1.0 - 1e-12) || target_I0 > range->I_M * (1.0 + 1e-12))) {
    std::ostringstream os;
    os << "target nutrient " << target_I0 << " outside [I_m, I_M] = [" << range->I_m << ", "
       << range->I_M << "]";
    throw InitializationError(os.str());
  }
  const Field psi = Field::sample(grid, model.psi);
  Field u = Field::sample(grid, [&](double x) { return -slope * std::abs(x - x0); });

  // log I(b) = log I(0) + b/eps; one Newton step from b = 0 lands on the root.
  const double log_target = std::log(target_I0);
  double b0 = 0.0;
  for (int it = 0; it < 3; ++it) {
    Field shifted = u;
    for (auto& v : shifted.values()) v += b0;
    const double residual = weighted_exp_integral(shifted, psi, eps).log_value - log_target;
    if (std::abs(residual) <= 1e-13 * std::max(1.0, std::abs(log_target))) break;
    b0 -= eps * residual;
  }
  if (b0 > model.constants.B) {
    std::ostringstream os;
    os << "initial height b0 = " << b0 << " exceeds the envelope cap B = " << model.constants.B
       << "; the grid is too small for the requested mass";
    throw InitializationError(os.str());
  }
  for (auto& v : u.values()) v += b0;
  const double achieved = weighted_exp_integral(u, psi, eps).value;
  if (std::abs(achieved - target_I0) > 1e-10 * target_I0) {
    throw InitializationError("initial mass root not reached to 1e-10 relative");
  }
  return {std::move(u), x0, slope, b0};
}

double parabolic_envelope_rate(const ModelSpec& model, double A) { return A * A + model.constants.K2; }

ParabolicSolver::ParabolicSolver(ModelSpec model, Grid1D grid, SolverConfig config,
                                 std::optional<NutrientRange> range)
    : model_(std::move(model)),
      grid_(grid),
      config_(config),
      range_(range),
      psi_(Field::sample(grid_, model_.psi)) {
  config_.validate();
}

double ParabolicSolver::nutrient(const Field& u) const {
  return weighted_exp_integral(u, psi_, config_.eps).value;
}

SimState ParabolicSolver::initial_state(const Field& u0) const {
  return SimState{0.0, u0, nutrient(u0), 0};
}

double ParabolicSolver::stable_dt(const Field& u) const {
  const double h = grid_.spacing();
  double max_slope = 0.0;
  for (std::size_t i = 0; i + 1 < u.size(); ++i) max_slope = std::max(max_slope, std::abs(u[i + 1] - u[i]) / h);
  const double dt_diffusion = config_.cfl_diffusion * h * h / (2.0 * config_.eps);
  const double dt_advection = config_.cfl_advection * h / (2.0 * max_slope + 1e-12);
  return std::min({config_.dt_max, dt_diffusion, dt_advection});
}

void ParabolicSolver::rhs(const Field& u, double I, std::vector<double>& out) const {
  const std::size_t n = u.size();
  const double h = grid_.spacing();
  const double inv_h = 1.0 / h;
  const double eps_inv_h2 = config_.eps / (h * h);
  double alpha = 0.0;
  if (config_.flux == HamiltonianFlux::lax_friedrichs) {
    for (std::size_t i = 0; i + 1 < n; ++i) alpha = std::max(alpha, 2.0 * std::abs(u[i + 1] - u[i]) * inv_h);
  }
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Ghost nodes copy the boundary value; the Laplacian at a boundary node
    // is its neighbour's.
    const double d_minus = i == 0 ? 0.0 : (u[i] - u[i - 1]) * inv_h;
    const double d_plus = i + 1 == n ? 0.0 : (u[i + 1] - u[i]) * inv_h;
    const std::size_t c = std::clamp<std::size_t>(i, 1, n - 2);
    const double lap = (u[c + 1] - 2.0 * u[c] + u[c - 1]) * eps_inv_h2;
    const double ham = config_.flux == HamiltonianFlux::godunov ? godunov_p2(d_minus, d_plus)
                                                                 : lax_friedrichs_p2(d_minus, d_plus, alpha);
    out[i] = lap + ham + eval_rate(model_, grid_.x(i), I, Variant::parabolic);
  }
}

SimState ParabolicSolver::step(const SimState& state, double dt) const {
  std::vector<double> f;
  rhs(state.u, state.I, f);
  SimState next{state.t + dt, state.u, 0.0, state.step_count + 1};
  auto v = next.u.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] += dt * f[i];
    if (!std::isfinite(v[i])) {
      std::ostringstream os;
      os << "non-finite u at t = " << next.t << ", x = " << grid_.x(i);
      throw BlowUpError(os.str(), next.t, grid_.x(i));
    }
  }
  next.I = nutrient(next.u);
  return next;
}

namespace {

void record_row(Trajectory& traj, RunDiagnostics& diag, const SimState& s, const Grid1D& grid,
                double eps, bool psi_unit) {
  const double log_rho = exp_integral(s.u, eps).log_value;
  const double rho = std::exp(log_rho);
  const std::size_t n = s.u.size();
  const double h = grid.spacing();
  const double leak = 0.5 * h * (std::exp(s.u[0] / eps - log_rho) + std::exp(s.u[n - 1] / eps - log_rho));
  const std::size_t k = s.u.argmax();
  const double peak = s.u[k];
  diag.min_boundary_margin = std::min(diag.min_boundary_margin, peak - std::max(s.u[0], s.u[n - 1]));
  traj.append(s.t, s.I, peak, grid.x(k), psi_unit ? s.I : rho, leak);
}

}  // namespace

RunResult ParabolicSolver::run(const Field& u0, const NutrientPath& frozen_I) const {
  RunResult out;
  SimState state = initial_state(u0);
  if (frozen_I) state.I = frozen_I(0.0);
  out.snapshots.push_back({0.0, u0});
  if (config_.T == 0.0) return out;

  const double I_cap = range_ ? 10.0 * range_->I_M : std::numeric_limits<double>::infinity();
  const auto schedule = snapshot_schedule(config_.T, config_.record_every);
  std::size_t next = 1;
  record_row(out.trajectory, out.diagnostics, state, grid_, config_.eps, model_.psi_is_unit);

  while (next < schedule.size()) {
    const double limit = stable_dt(state.u);
    double dt = limit;
    const double remaining = schedule[next] - state.t;
    const bool lands = remaining <= dt * (1.0 + 1e-9);
    if (lands) dt = remaining;
    state = step(state, dt);
    if (lands) state.t = schedule[next];
    if (frozen_I) state.I = frozen_I(state.t);
    if (!(state.I > 0.0) || !(state.I < I_cap)) {
      std::ostringstream os;
      os << "nutrient I = " << state.I << " left (0, " << I_cap << ") at t = " << state.t;
      throw BlowUpError(os.str(), state.t, grid_.x(state.u.argmax()));
    }
    out.diagnostics.dt.push_back(dt);
    out.diagnostics.dt_limit.push_back(limit);
    record_row(out.trajectory, out.diagnostics, state, grid_, config_.eps, model_.psi_is_unit);
    if (lands) {
      out.snapshots.push_back({state.t, state.u});
      ++next;
    }
  }
  out.trajectory.finalize();
  if (out.diagnostics.min_boundary_margin < 20.0 * config_.eps * std::log(10.0)) {
    out.diagnostics.warnings.push_back("boundary value within 20 eps ln 10 of max u; widen the grid");
  }
  if (!resolves_concentration(grid_, config_.eps)) {
    out.diagnostics.warnings.push_back("grid spacing exceeds sqrt(eps)/8");
  }
  return out;
}

RunResult run_parabolic(const ModelSpec& model, const Grid1D& grid, const SolverConfig& config,
                        const Field& u0, const std::optional<NutrientRange>& range) {
  return ParabolicSolver(model, grid, config, range).run(u0);
}

}  // namespace selmut
