#include "selmut/hj_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "selmut/errors.hpp"

namespace selmut {

namespace {

void check_p(double p, double p_limit) {
  if (!(std::abs(p) <= p_limit * (1.0 + 1e-12))) {
    std::ostringstream os;
    os << "moment-generating function requested at p = " << p << ", outside [" << -p_limit << ", "
       << p_limit << "]";
    throw ExtrapolationError(os.str());
  }
}

}  // namespace

double mgf_kernel(const KernelQuadrature& kq, double p, double p_limit) {
  check_p(p, p_limit);
  return kq.integrate([p](double z) { return std::exp(p * z); });
}

double mgf_kernel_derivative(const KernelQuadrature& kq, double p, double p_limit) {
  check_p(p, p_limit);
  return kq.integrate([p](double z) { return z * std::exp(p * z); });
}

MgfTable::MgfTable(const KernelQuadrature& kq, double p_limit, double spacing) : p_limit_(p_limit) {
  if (!(p_limit > 0.0) || !(spacing > 0.0)) throw std::invalid_argument("mgf table needs positive range and spacing");
  const auto cells = static_cast<std::size_t>(std::ceil(2.0 * p_limit / spacing));
  spacing_ = 2.0 * p_limit / static_cast<double>(cells);
  values_.resize(cells + 1);
  slopes_.resize(cells + 1);
  for (std::size_t k = 0; k <= cells; ++k) {
    const double p = std::clamp(-p_limit + static_cast<double>(k) * spacing_, -p_limit, p_limit);
    values_[k] = mgf_kernel(kq, p, p_limit);
    slopes_[k] = mgf_kernel_derivative(kq, p, p_limit);
  }
  // mgf is convex, so its derivative is increasing: bisect for the zero.
  double lo = -p_limit;
  double hi = p_limit;
  if (mgf_kernel_derivative(kq, lo, p_limit) >= 0.0) {
    argmin_ = lo;
  } else if (mgf_kernel_derivative(kq, hi, p_limit) <= 0.0) {
    argmin_ = hi;
  } else {
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
      const double mid = 0.5 * (lo + hi);
      (mgf_kernel_derivative(kq, mid, p_limit) < 0.0 ? lo : hi) = mid;
    }
    argmin_ = 0.5 * (lo + hi);
    if (std::abs(argmin_) < 1e-14) argmin_ = 0.0;
  }
}

std::size_t MgfTable::locate(double p, double& s) const {
  if (values_.empty()) throw std::logic_error("mgf table is empty");
  check_p(p, p_limit_);
  const double pos = (std::clamp(p, -p_limit_, p_limit_) + p_limit_) / spacing_;
  const auto last = values_.size() - 2;
  const auto k = std::min(static_cast<std::size_t>(pos), last);
  s = pos - static_cast<double>(k);
  return k;
}

double MgfTable::operator()(double p) const {
  double s = 0.0;
  const std::size_t k = locate(p, s);
  const double s2 = s * s;
  const double s3 = s2 * s;
  return (2.0 * s3 - 3.0 * s2 + 1.0) * values_[k] + (s3 - 2.0 * s2 + s) * spacing_ * slopes_[k] +
         (-2.0 * s3 + 3.0 * s2) * values_[k + 1] + (s3 - s2) * spacing_ * slopes_[k + 1];
}

double MgfTable::derivative(double p) const {
  double s = 0.0;
  const std::size_t k = locate(p, s);
  const double s2 = s * s;
  return (6.0 * s2 - 6.0 * s) * (values_[k] - values_[k + 1]) / spacing_ + (3.0 * s2 - 4.0 * s + 1.0) * slopes_[k] +
         (3.0 * s2 - 2.0 * s) * slopes_[k + 1];
}

Hamiltonian Hamiltonian::eikonal(ModelSpec model, NutrientRange range) {
  return Hamiltonian(HamiltonianKind::eikonal, std::move(model), range);
}

Hamiltonian Hamiltonian::kernel_integral(ModelSpec model, NutrientRange range, const KernelQuadrature& kq,
                                         double p_limit, double table_spacing) {
  if (!model.has_kernel()) throw std::invalid_argument("kernel Hamiltonian needs a kernel model");
  Hamiltonian h(HamiltonianKind::kernel_integral, std::move(model), range);
  h.table_ = MgfTable(kq, p_limit, table_spacing);
  return h;
}

double Hamiltonian::flux(double d_minus, double d_plus) const {
  if (kind_ == HamiltonianKind::eikonal) {
    const double l = std::min(d_minus, 0.0);
    const double r = std::max(d_plus, 0.0);
    return std::max(l * l, r * r);
  }
  const double p_star = table_.argmin();
  return std::max(table_(std::min(d_minus, p_star)), table_(std::max(d_plus, p_star)));
}

double Hamiltonian::evaluate(double x, double gradient_part, double I) const {
  const double r = eval_rate(model_, x, I, Variant::parabolic);
  if (kind_ == HamiltonianKind::eikonal) return gradient_part + r;
  return model_.birth(x, I) * gradient_part + r;
}

double Hamiltonian::wave_speed(double d_minus, double d_plus) const {
  if (kind_ == HamiltonianKind::eikonal) {
    return 2.0 * (std::abs(std::min(d_minus, 0.0)) + std::abs(std::max(d_plus, 0.0)));
  }
  const double p_star = table_.argmin();
  return model_.constants.b_M * (std::abs(table_.derivative(std::min(d_minus, p_star))) +
                                 std::abs(table_.derivative(std::max(d_plus, p_star))));
}

HJState constrained_step(const HJState& state, const Hamiltonian& ham, double dt, double tol,
                         ConstraintStepInfo* info) {
  const Grid1D& grid = state.u.grid();
  const std::size_t n = state.u.size();
  const double inv_h = 1.0 / grid.spacing();
  std::vector<double> gradient_part(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d_minus = i == 0 ? 0.0 : (state.u[i] - state.u[i - 1]) * inv_h;
    const double d_plus = i + 1 == n ? 0.0 : (state.u[i + 1] - state.u[i]) * inv_h;
    gradient_part[i] = ham.flux(d_minus, d_plus);
  }
  auto phi = [&](double I) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, state.u[i] + dt * ham.evaluate(grid.x(i), gradient_part[i], I));
    return m;
  };

  double lo = 0.25 * ham.range().I_m;
  double hi = 4.0 * ham.range().I_M;
  const double phi_lo = phi(lo);
  const double phi_hi = phi(hi);
  if (!(phi_lo >= -tol && phi_hi <= tol)) {
    std::ostringstream os;
    os << "constraint multiplier not bracketed at t = " << state.t << ": Phi(" << lo << ") = " << phi_lo
       << ", Phi(" << hi << ") = " << phi_hi;
    throw ConstraintInfeasibleError(os.str(), phi_lo, phi_hi);
  }
  double I_star = 0.0;
  double value = 0.0;
  int iterations = 0;
  if (std::abs(phi_lo) <= tol) {
    I_star = lo;
    value = phi_lo;
  } else if (std::abs(phi_hi) <= tol) {
    I_star = hi;
    value = phi_hi;
  } else {
    bool reached = false;
    while (iterations < kMaxBisectionIterations) {
      ++iterations;
      const double mid = 0.5 * (lo + hi);
      value = phi(mid);
      I_star = mid;
      // Stop once both the constraint residual and the multiplier bracket are
      // below tol, so I itself is resolved to tol as well.
      if (std::abs(value) <= tol && hi - lo <= tol) {
        reached = true;
        break;
      }
      (value > 0.0 ? lo : hi) = mid;
    }
    if (!reached && std::abs(value) <= tol) reached = true;
    if (!reached) {
      std::ostringstream os;
      os << "constraint residual " << value << " above " << tol << " after " << iterations
         << " bisection steps at t = " << state.t;
      throw ConstraintInfeasibleError(os.str(), phi_lo, phi_hi);
    }
  }

  HJState next{state.t + dt, state.u, I_star};
  auto v = next.u.values();
  for (std::size_t i = 0; i < n; ++i) v[i] += dt * ham.evaluate(grid.x(i), gradient_part[i], I_star);
  if (info) {
    info->iterations = iterations;
    info->residual = std::abs(next.u.max());
  }
  return next;
}

double default_hj_dt(const Grid1D& grid) { return grid.spacing() / 10.0; }

RunResult run_hj(const Grid1D& grid, const Hamiltonian& ham, const Field& u0, double T, double dt, double tol,
                 double record_every) {
  if (!(dt > 0.0) || !(T >= 0.0) || !(tol > 0.0)) throw std::invalid_argument("run_hj needs dt > 0, T >= 0, tol > 0");
  if (!(u0.grid() == grid)) throw std::invalid_argument("initial field lives on a different grid");
  if (!(std::abs(u0.max()) <= tol)) {
    std::ostringstream os;
    os << "limit runs start from max u0 = 0; got max u0 = " << u0.max();
    throw InitializationError(os.str());
  }
  RunResult out;
  out.snapshots.push_back({0.0, u0});
  if (T == 0.0) return out;

  const double h = grid.spacing();
  const std::size_t n = grid.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const auto schedule = snapshot_schedule(T, record_every);
  std::size_t next = 1;
  HJState state{0.0, u0, 0.0};
  bool first = true;

  while (next < schedule.size()) {
    double speed = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d_minus = i == 0 ? 0.0 : (state.u[i] - state.u[i - 1]) / h;
      const double d_plus = i + 1 == n ? 0.0 : (state.u[i + 1] - state.u[i]) / h;
      speed = std::max(speed, ham.wave_speed(d_minus, d_plus));
    }
    if (dt * speed > h) {
      std::ostringstream os;
      os << "fixed step dt = " << dt << " violates the monotonicity restriction dt <= h / " << speed
         << " at t = " << state.t;
      throw StabilityError(os.str());
    }
    double step = dt;
    const double remaining = schedule[next] - state.t;
    const bool lands = remaining <= dt * (1.0 + 1e-9);
    if (lands) step = remaining;

    ConstraintStepInfo info;
    HJState advanced = constrained_step(state, ham, step, tol, &info);
    if (lands) advanced.t = schedule[next];
    out.diagnostics.max_bisection_iterations = std::max(out.diagnostics.max_bisection_iterations, info.iterations);
    out.diagnostics.max_constraint_residual = std::max(out.diagnostics.max_constraint_residual, info.residual);
    out.diagnostics.dt.push_back(step);
    out.diagnostics.dt_limit.push_back(h / std::max(speed, 1e-300));
    if (first) {
      const std::size_t k = state.u.argmax();
      out.trajectory.append(0.0, advanced.I, state.u[k], grid.x(k), nan);
      first = false;
    }
    state = std::move(advanced);
    const std::size_t k = state.u.argmax();
    out.trajectory.append(state.t, state.I, state.u[k], grid.x(k), nan);
    if (lands) {
      out.snapshots.push_back({state.t, state.u});
      ++next;
    }
  }
  out.trajectory.finalize();
  return out;
}

}  // namespace selmut
