#include "selmut/integral_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "selmut/errors.hpp"

namespace selmut {

KernelQuadrature build_kernel_quadrature(const ModelSpec& model, const KernelQuadratureOptions& options) {
  if (!model.has_kernel()) throw KernelTruncationError("model has no mutation kernel");
  const double scale = model.kernel_scale;
  const double end = std::min(model.kernel_radius, options.max_radius);

  // Tail integrals of (K(z) + K(-z)) exp(S z) on a fine grid, accumulated from
  // the outer end inwards.
  const double fine = scale / 200.0;
  const auto n_fine = static_cast<std::size_t>(std::ceil(end / fine));
  const double df = end / static_cast<double>(n_fine);
  auto g = [&](double z) { return (model.kernel(z) + model.kernel(-z)) * std::exp(options.slope * z); };
  std::vector<double> tail(n_fine + 1, 0.0);
  for (std::size_t k = n_fine; k-- > 0;) {
    const double a = static_cast<double>(k) * df;
    tail[k] = tail[k + 1] + 0.5 * df * (g(a) + g(a + df));
  }
  const bool compact = model.kernel_radius <= options.max_radius;
  std::size_t cut = n_fine + 1;
  for (std::size_t k = 0; k <= n_fine; ++k) {
    if (tail[k] <= options.tol) {
      cut = k;
      break;
    }
  }
  if (cut > n_fine || (!compact && cut == n_fine)) {
    std::ostringstream os;
    os << "kernel tail int_{|z|>Z} K exp(" << options.slope << "|z|) stays above " << options.tol
       << " for Z <= " << options.max_radius;
    throw KernelTruncationError(os.str());
  }
  double radius = static_cast<double>(cut) * df;

  KernelQuadrature kq;
  kq.spacing = scale * options.spacing_fraction;
  const auto half = static_cast<std::ptrdiff_t>(std::ceil(radius / kq.spacing - 1e-9));
  radius = static_cast<double>(half) * kq.spacing;
  kq.radius = radius;
  kq.tail_mass = tail[std::min(cut, n_fine)];
  const auto count = static_cast<std::size_t>(2 * half + 1);
  kq.nodes.resize(count);
  kq.weights.resize(count);
  kq.kernel_values.resize(count);
  for (std::size_t j = 0; j < count; ++j) {
    kq.nodes[j] = static_cast<double>(static_cast<std::ptrdiff_t>(j) - half) * kq.spacing;
    kq.weights[j] = (j == 0 || j + 1 == count) ? 0.5 * kq.spacing : kq.spacing;
    kq.kernel_values[j] = model.kernel(kq.nodes[j]);
  }
  double mass = 0.0;
  for (std::size_t j = 0; j < count; ++j) mass += kq.weights[j] * kq.kernel_values[j];
  kq.raw_mass = mass;
  for (auto& k : kq.kernel_values) k /= mass;
  return kq;
}

double mutation_term(const Field& u, std::size_t x_index, double I, const ModelSpec& model,
                     const KernelQuadrature& kq, double eps, ClampCounter* counter) {
  const double x = u.grid().x(x_index);
  const double ux = u[x_index];
  const double A = model.constants.A;
  double sum = 0.0;
  for (std::size_t j = 0; j < kq.size(); ++j) {
    const double y = x + eps * kq.nodes[j];
    double e = (interpolate(u, y, A) - ux) / eps;
    if (e > kExponentClamp) {
      e = kExponentClamp;
      if (counter) ++counter->clamped;
    }
    if (counter) ++counter->evaluations;
    sum += kq.mass_weight(j) * model.birth(y, I) * std::exp(e);
  }
  return sum;
}

double integral_envelope_rate(const ModelSpec& model, const KernelQuadrature& kq, double A) {
  const double moment = kq.integrate([A](double z) { return std::exp(A * std::abs(z)); });
  return model.constants.b_M * moment + model.constants.K2;
}

IntegralSolver::IntegralSolver(ModelSpec model, Grid1D grid, SolverConfig config, KernelQuadrature kq,
                               std::optional<NutrientRange> range)
    : model_(std::move(model)), grid_(grid), config_(config), kq_(std::move(kq)), range_(range) {
  config_.validate();
  if (!model_.has_kernel()) throw std::invalid_argument("integral solver needs a kernel model");
  const double h = grid_.spacing();
  shifts_.reserve(kq_.size());
  for (double z : kq_.nodes) {
    const double s = config_.eps * z / h;
    double whole = std::floor(s);
    double theta = s - whole;
    if (theta > 1.0 - 1e-12) {
      whole += 1.0;
      theta = 0.0;
    }
    shifts_.push_back({static_cast<std::ptrdiff_t>(whole), theta});
  }
  if (!model_.birth_depends_on_I) {
    const std::size_t J = kq_.size();
    birth_table_.resize(grid_.size() * J);
    for (std::size_t i = 0; i < grid_.size(); ++i)
      for (std::size_t j = 0; j < J; ++j)
        birth_table_[i * J + j] =
            kq_.mass_weight(j) * model_.birth(grid_.x(i) + config_.eps * kq_.nodes[j], 0.0);
  }
}

double IntegralSolver::nutrient(const Field& u) const { return exp_integral(u, config_.eps).value; }

SimState IntegralSolver::initial_state(const Field& u0) const { return SimState{0.0, u0, nutrient(u0), 0}; }

double IntegralSolver::birth_at(std::size_t i, std::size_t j, double I) const {
  if (!birth_table_.empty()) return birth_table_[i * kq_.size() + j];
  return kq_.mass_weight(j) * model_.birth(grid_.x(i) + config_.eps * kq_.nodes[j], I);
}

double IntegralSolver::rhs(const Field& u, double I, std::vector<double>& out, ClampCounter& counter) const {
  const std::size_t n = u.size();
  const std::size_t J = kq_.size();
  const auto n_signed = static_cast<std::ptrdiff_t>(n);
  const double inv_eps = 1.0 / config_.eps;
  const double A = model_.constants.A;
  out.resize(n);
  double max_mutation = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ui = u[i];
    const double xi = grid_.x(i);
    double sum = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      const auto k = static_cast<std::ptrdiff_t>(i) + shifts_[j].offset;
      const double theta = shifts_[j].theta;
      double uy;
      if (k >= 0 && k + 1 < n_signed) {
        uy = (1.0 - theta) * u[static_cast<std::size_t>(k)] + theta * u[static_cast<std::size_t>(k + 1)];
      } else if (theta == 0.0 && k >= 0 && k < n_signed) {
        uy = u[static_cast<std::size_t>(k)];
      } else {
        uy = interpolate(u, xi + config_.eps * kq_.nodes[j], A);
      }
      double e = (uy - ui) * inv_eps;
      if (e > kExponentClamp) {
        e = kExponentClamp;
        ++counter.clamped;
      }
      sum += birth_at(i, j, I) * std::exp(e);
    }
    counter.evaluations += J;
    max_mutation = std::max(max_mutation, sum);
    out[i] = eval_rate(model_, xi, I, Variant::parabolic) + sum;
  }
  return max_mutation;
}

double IntegralSolver::stable_dt(double max_mutation) const {
  return std::min(config_.dt_max, config_.cfl_integral * config_.eps / (max_mutation + model_.constants.K2));
}

namespace {

void check_clamps(const ClampCounter& c, double t, RunDiagnostics* diag) {
  if (c.evaluations == 0) return;
  const double fraction = static_cast<double>(c.clamped) / static_cast<double>(c.evaluations);
  if (fraction > 0.10) {
    std::ostringstream os;
    os << "exponent clamp fired on " << 100.0 * fraction << "% of evaluations at t = " << t;
    throw StabilityError(os.str());
  }
  if (diag) {
    diag->clamp_events += c.clamped;
    diag->exponent_evaluations += c.evaluations;
    if (fraction > 0.01) ++diag->clamp_warning_steps;
  }
}

}  // namespace

SimState IntegralSolver::step(const SimState& state, double dt) const {
  std::vector<double> f;
  ClampCounter counter;
  rhs(state.u, state.I, f, counter);
  check_clamps(counter, state.t, nullptr);
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

SimState IntegralSolver::step(const SimState& state) const {
  std::vector<double> f;
  ClampCounter counter;
  const double max_mutation = rhs(state.u, state.I, f, counter);
  return step(state, stable_dt(max_mutation));
}

RunResult IntegralSolver::run(const Field& u0, const NutrientPath& frozen_I) const {
  RunResult out;
  SimState state = initial_state(u0);
  if (frozen_I) state.I = frozen_I(0.0);
  out.snapshots.push_back({0.0, u0});
  if (config_.T == 0.0) return out;

  const double eps = config_.eps;
  const double h = grid_.spacing();
  const std::size_t n = grid_.size();
  const double I_cap = range_ ? 10.0 * range_->I_M : std::numeric_limits<double>::infinity();
  const auto schedule = snapshot_schedule(config_.T, config_.record_every);
  std::size_t next = 1;
  double worst_ratio = 0.0;

  auto record = [&](std::uint64_t clamps) {
    const double log_rho = exp_integral(state.u, eps).log_value;
    const double leak =
        0.5 * h * (std::exp(state.u[0] / eps - log_rho) + std::exp(state.u[n - 1] / eps - log_rho));
    const std::size_t k = state.u.argmax();
    out.diagnostics.min_boundary_margin =
        std::min(out.diagnostics.min_boundary_margin, state.u[k] - std::max(state.u[0], state.u[n - 1]));
    out.trajectory.append(state.t, state.I, state.u[k], grid_.x(k), std::exp(log_rho), leak, clamps);
  };
  record(0);

  std::vector<double> f;
  while (next < schedule.size()) {
    ClampCounter counter;
    const double max_mutation = rhs(state.u, state.I, f, counter);
    check_clamps(counter, state.t, &out.diagnostics);
    const double limit = stable_dt(max_mutation);
    double dt = limit;
    const double remaining = schedule[next] - state.t;
    const bool lands = remaining <= dt * (1.0 + 1e-9);
    if (lands) dt = remaining;

    // |du/dt| on the monitored window against K2 + b_M (1 + int K exp(S2 |z|) dz),
    // S2 the largest nodewise slope.
    double max_slope = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) max_slope = std::max(max_slope, std::abs(state.u[i + 1] - state.u[i]) / h);
    double max_rate = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(grid_.x(i) - monitor_center_) <= monitor_radius_) max_rate = std::max(max_rate, std::abs(f[i]));
    }
    const double bound = model_.constants.K2 +
                         model_.constants.b_M *
                             (1.0 + kq_.integrate([&](double z) { return std::exp(max_slope * std::abs(z)); }));
    if (max_rate / bound >= worst_ratio) {
      worst_ratio = max_rate / bound;
      out.diagnostics.max_time_derivative = max_rate;
      out.diagnostics.time_derivative_bound = bound;
    }

    SimState advanced{state.t + dt, state.u, 0.0, state.step_count + 1};
    auto v = advanced.u.values();
    for (std::size_t i = 0; i < n; ++i) {
      v[i] += dt * f[i];
      if (!std::isfinite(v[i])) {
        std::ostringstream os;
        os << "non-finite u at t = " << advanced.t << ", x = " << grid_.x(i);
        throw BlowUpError(os.str(), advanced.t, grid_.x(i));
      }
    }
    if (lands) advanced.t = schedule[next];
    advanced.I = frozen_I ? frozen_I(advanced.t) : nutrient(advanced.u);
    state = std::move(advanced);
    if (!(state.I > 0.0) || !(state.I < I_cap)) {
      std::ostringstream os;
      os << "nutrient I = " << state.I << " left (0, " << I_cap << ") at t = " << state.t;
      throw BlowUpError(os.str(), state.t, grid_.x(state.u.argmax()));
    }
    out.diagnostics.dt.push_back(dt);
    out.diagnostics.dt_limit.push_back(limit);
    record(counter.clamped);
    if (lands) {
      out.snapshots.push_back({state.t, state.u});
      ++next;
    }
  }
  out.trajectory.finalize();
  if (out.diagnostics.clamp_warning_steps > 0) {
    out.diagnostics.warnings.push_back("exponent clamp exceeded 1% of evaluations on " +
                                       std::to_string(out.diagnostics.clamp_warning_steps) + " steps");
  }
  if (out.diagnostics.min_boundary_margin < 20.0 * eps * std::log(10.0)) {
    out.diagnostics.warnings.push_back("boundary value within 20 eps ln 10 of max u; widen the grid");
  }
  return out;
}

}  // namespace selmut
