#include "selmut/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "selmut/io.hpp"

namespace selmut {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Tracks the worst signed excess over a family of (measured - bound) values.
struct Worst {
  double margin = -kInf;
  double x = 0.0;
  double t = 0.0;
  void offer(double m, double x_value, double t_value) {
    if (m > margin) {
      margin = m;
      x = x_value;
      t = t_value;
    }
  }
};

Check make_check(std::string name, const Worst& w, double tol, std::string detail = {}) {
  Check c;
  c.name = std::move(name);
  c.margin = w.margin == -kInf ? 0.0 : w.margin;
  c.passed = c.margin <= tol;
  c.witness_x = w.x;
  c.witness_t = w.t;
  c.detail = std::move(detail);
  return c;
}

double node_slope(const Field& u, std::size_t i) {
  const double h = u.grid().spacing();
  double s = 0.0;
  if (i > 0) s = std::max(s, std::abs(u[i] - u[i - 1]) / h);
  if (i + 1 < u.size()) s = std::max(s, std::abs(u[i + 1] - u[i]) / h);
  return s;
}

}  // namespace

Check check_I_bounds(const Trajectory& traj, const NutrientRange& range, double eps, double c, Variant variant,
                     double integral_slack) {
  const double s = variant == Variant::parabolic ? c * eps * eps : integral_slack;
  const double lo = range.I_m - s;
  const double hi = range.I_M + s;
  Worst w;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    w.offer(traj.I[k] - hi, traj.argmax_u[k], traj.times[k]);
    w.offer(lo - traj.I[k], traj.argmax_u[k], traj.times[k]);
  }
  std::ostringstream os;
  os << "admissible interval [" << lo << ", " << hi << "]";
  Check out = make_check("I_bounds", w, 0.0, os.str());
  out.value = s;
  return out;
}

Check check_envelope(const std::vector<Snapshot>& snapshots, double A, double x0, double b0, double C, double tol) {
  Worst w;
  for (const auto& s : snapshots) {
    for (std::size_t i = 0; i < s.u.size(); ++i) {
      const double x = s.u.grid().x(i);
      w.offer(s.u[i] - (-A * std::abs(x - x0) + b0 + C * s.t), x, s.t);
    }
  }
  return make_check("upper_envelope", w, tol);
}

Check check_lower_bound(const std::vector<Snapshot>& snapshots, double u0_at_x0, double grad_u0, double x0,
                        double K2, double tol) {
  Worst w;
  for (const auto& s : snapshots) {
    for (std::size_t i = 0; i < s.u.size(); ++i) {
      const double x = s.u.grid().x(i);
      w.offer((u0_at_x0 - grad_u0 * std::abs(x - x0) - K2 * s.t) - s.u[i], x, s.t);
    }
  }
  return make_check("lower_bound", w, tol);
}

LipschitzGrowth lipschitz_growth_constants(const ModelConstants& k, double envelope_rate, double grad_u0,
                                           double u0_at_x0) {
  LipschitzGrowth g;
  g.C1 = k.K2 * (1.0 + k.L1) + k.L1 * k.b_M * std::exp(1.0);
  g.C2 = g.C1 + k.L1 * envelope_rate + k.L1 * k.K2;
  g.C3 = k.L1 * grad_u0;
  g.C4 = grad_u0 + k.L1 * k.B - k.L1 * u0_at_x0;
  return g;
}

Check check_lipschitz_growth(const std::vector<Snapshot>& snapshots, double x0, const LipschitzGrowth& g,
                             double slack) {
  Worst w;
  for (const auto& s : snapshots) {
    for (std::size_t i = 0; i < s.u.size(); ++i) {
      const double x = s.u.grid().x(i);
      const double bound = (1.0 + slack) * (g.C2 * s.t + g.C3 * std::abs(x - x0) + g.C4);
      w.offer(node_slope(s.u, i) - bound, x, s.t);
    }
  }
  return make_check("lipschitz_growth", w, 0.0);
}

double regularizing_height(const ModelConstants& k, double T) { return k.B + (k.A * k.A + k.K2) * T; }

RegularizingProfile regularizing_profile(const std::vector<Snapshot>& snapshots, double D2, double t0) {
  RegularizingProfile p;
  p.sup_excess = -kInf;
  for (const auto& s : snapshots) {
    const std::size_t n = s.u.size();
    const double h = s.u.grid().spacing();
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double arg = 2.0 * D2 - s.u[i];
      if (!(arg > 0.0)) {
        std::ostringstream os;
        os << "2 D^2 - u = " << arg << " <= 0 at t = " << s.t << ", x = " << s.u.grid().x(i);
        throw DomainError(os.str());
      }
      v[i] = std::sqrt(arg);
    }
    double m = 0.0;
    double mx = s.u.grid().x(0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double d = std::abs(v[i + 1] - v[i]) / h;
      if (d > m) {
        m = d;
        mx = s.u.grid().x(i);
      }
    }
    p.times.push_back(s.t);
    p.max_slope.push_back(m);
    if (s.t >= t0 && s.t > 0.0) {
      const double excess = m - 0.5 / std::sqrt(s.t);
      if (excess > p.sup_excess) {
        p.sup_excess = excess;
        p.witness_t = s.t;
        p.witness_x = mx;
      }
    }
  }
  if (p.sup_excess == -kInf) throw std::invalid_argument("no snapshot at or after t0");
  return p;
}

Check check_uniform_band(const std::string& name, const std::vector<double>& values, double pilot, double rel) {
  Worst w;
  for (std::size_t k = 0; k < values.size(); ++k) w.offer(std::abs(values[k] - pilot) - rel * std::abs(pilot), 0.0, 0.0);
  std::ostringstream os;
  os << "pilot " << pilot << ", relative band " << rel;
  Check c = make_check(name, w, 0.0, os.str());
  c.value = pilot;
  return c;
}

Check check_bounded_by(const std::string& name, const std::vector<double>& values, double pilot, double factor) {
  Worst w;
  for (double v : values) w.offer(v - factor * pilot, 0.0, 0.0);
  std::ostringstream os;
  os << "cap " << factor << " x pilot " << pilot;
  Check c = make_check(name, w, 0.0, os.str());
  c.value = pilot;
  return c;
}

namespace {

double tv_stride(const Trajectory& traj, double t0, double t1, std::size_t stride) {
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < traj.size(); ++k)
    if (traj.times[k] >= t0 - 1e-12 && traj.times[k] <= t1 + 1e-12) idx.push_back(k);
  if (idx.size() < 2) return 0.0;
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < idx.size(); j += stride) kept.push_back(idx[j]);
  if (kept.back() != idx.back()) kept.push_back(idx.back());
  double tv = 0.0;
  for (std::size_t j = 1; j < kept.size(); ++j) tv += std::abs(traj.I[kept[j]] - traj.I[kept[j - 1]]);
  return tv;
}

}  // namespace

double total_variation(const Trajectory& traj, double t0, double t1) { return tv_stride(traj, t0, t1, 1); }

Check check_bv(const Trajectory& traj, double t0, double t1) {
  const double fine = tv_stride(traj, t0, t1, 1);
  const double coarse = tv_stride(traj, t0, t1, 2);
  Check c;
  c.name = "bv";
  c.value = fine;
  c.margin = std::abs(fine - coarse) - std::max(0.05 * fine, 1e-12);
  c.passed = c.margin <= 0.0;
  c.witness_t = t1;
  std::ostringstream os;
  os << "TV on [" << t0 << ", " << t1 << "] = " << fine << " (half sampling " << coarse << ")";
  c.detail = os.str();
  return c;
}

const Peak* ConcentrationReport::dominant() const {
  if (peaks.empty()) return nullptr;
  return &*std::max_element(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.mass < b.mass; });
}

namespace {

// Mean and standard deviation of n = exp((u - top)/eps) on nodes [a, b] with
// trapezoid weights.
std::pair<double, double> local_moments(const Field& u, double eps, double top, std::size_t a, std::size_t b) {
  const double h = u.grid().spacing();
  double m0 = 0.0;
  double m1 = 0.0;
  for (std::size_t i = a; i <= b; ++i) {
    const double w = (i == a || i == b) && a != b ? 0.5 * h : h;
    const double n = w * std::exp((u[i] - top) / eps);
    m0 += n;
    m1 += n * u.grid().x(i);
  }
  const double mean = m1 / m0;
  double m2 = 0.0;
  for (std::size_t i = a; i <= b; ++i) {
    const double w = (i == a || i == b) && a != b ? 0.5 * h : h;
    const double d = u.grid().x(i) - mean;
    m2 += w * std::exp((u[i] - top) / eps) * d * d;
  }
  return {mean, std::sqrt(m2 / m0)};
}

}  // namespace

ConcentrationReport detect_concentrations(const Field& u, double eps, double delta, double I) {
  if (!(delta > 0.0) || !(eps > 0.0)) throw std::invalid_argument("concentration detection needs eps, delta > 0");
  const std::size_t n = u.size();
  const double top = u.max();
  const double threshold = top - delta;
  const double h = u.grid().spacing();

  std::vector<std::pair<std::size_t, std::size_t>> runs;
  for (std::size_t i = 0; i < n;) {
    if (u[i] < threshold) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && u[j + 1] >= threshold) ++j;
    runs.emplace_back(i, j);
    i = j + 1;
  }

  ConcentrationReport report;
  report.degenerate = runs.size() == 1 && runs[0].first == 0 && runs[0].second == n - 1;
  const Field ones(u.grid(), 1.0);
  double total = 0.0;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto [a, b] = runs[r];
    const auto [mean0, width0] = local_moments(u, eps, top, a, b);
    (void)mean0;
    // Widen by four widths, never past the midpoint to a neighbouring run.
    const auto pad = static_cast<std::size_t>(std::ceil(4.0 * width0 / h));
    const std::size_t left_limit = r == 0 ? 0 : (runs[r - 1].second + a + 1) / 2;
    const std::size_t right_limit = r + 1 == runs.size() ? n - 1 : (b + runs[r + 1].first) / 2;
    const std::size_t lo = a >= left_limit + pad ? a - pad : left_limit;
    const std::size_t hi = std::min(b + pad, right_limit);
    const auto [mean, width] = local_moments(u, eps, top, lo, hi);
    Peak p;
    p.location = mean;
    p.width = width > 0.0 ? width : 0.5 * h;
    p.mass = weighted_exp_integral(u, ones, eps, lo, hi).value;
    total += p.mass;
    report.peaks.push_back(p);
  }
  report.residual_mass = I - total;
  return report;
}

Check check_support(const Field& u, double eps, double I, double tol, std::optional<double> delta) {
  const double d = delta.value_or(20.0 * eps);
  const std::size_t n = u.size();
  const double h = u.grid().spacing();
  double mass = 0.0;
  Worst w;
  for (std::size_t i = 0; i < n; ++i) {
    if (u[i] >= -d) continue;
    const double weight = (i == 0 || i + 1 == n) ? 0.5 * h : h;
    const double contribution = weight * std::exp(u[i] / eps);
    mass += contribution;
    w.offer(contribution, u.grid().x(i), 0.0);
  }
  Check c;
  c.name = "support";
  c.value = mass;
  c.margin = mass - tol * I;
  c.passed = c.margin <= 0.0;
  c.witness_x = w.x;
  std::ostringstream os;
  os << "mass on {u < " << -d << "} = " << mass << " vs " << tol << " x I = " << tol * I;
  c.detail = os.str();
  return c;
}

namespace {

std::vector<const Snapshot*> in_window(const std::vector<Snapshot>& snapshots, double t_lo, double t_hi) {
  std::vector<const Snapshot*> out;
  for (const auto& s : snapshots)
    if (s.t >= t_lo - 1e-12 && s.t <= t_hi + 1e-12) out.push_back(&s);
  return out;
}

}  // namespace

Check check_time_modulus(const std::vector<Snapshot>& snapshots, double t_lo, double t_hi, double center,
                         double radius, double B_mod, double eta) {
  const auto sel = in_window(snapshots, t_lo, t_hi);
  const double window = t_hi - t_lo;
  for (std::size_t k = 0; k + 1 < sel.size(); ++k) {
    if (sel[k + 1]->t - sel[k]->t > window / 10.0 + 1e-12) {
      throw std::invalid_argument("snapshot spacing exceeds a tenth of the time window");
    }
  }
  if (sel.size() < 2) throw std::invalid_argument("time-modulus check needs two snapshots in the window");
  Worst w;
  for (std::size_t a = 0; a < sel.size(); ++a) {
    for (std::size_t b = a + 1; b < sel.size(); ++b) {
      const Field& ua = sel[a]->u;
      const Field& ub = sel[b]->u;
      const double gap = sel[b]->t - sel[a]->t;
      for (std::size_t i = 0; i < ua.size(); ++i) {
        const double x = ua.grid().x(i);
        if (std::abs(x - center) > radius) continue;
        w.offer(std::abs(ub[i] - ua[i]) - eta - B_mod * gap, x, sel[b]->t);
      }
    }
  }
  return make_check("time_modulus", w, 0.0);
}

double observed_time_rate(const std::vector<Snapshot>& snapshots, double t_lo, double t_hi, double center,
                          double radius) {
  const auto sel = in_window(snapshots, t_lo, t_hi);
  double rate = 0.0;
  for (std::size_t k = 0; k + 1 < sel.size(); ++k) {
    const Field& ua = sel[k]->u;
    const Field& ub = sel[k + 1]->u;
    const double gap = sel[k + 1]->t - sel[k]->t;
    for (std::size_t i = 0; i < ua.size(); ++i) {
      if (std::abs(ua.grid().x(i) - center) > radius) continue;
      rate = std::max(rate, std::abs(ub[i] - ua[i]) / gap);
    }
  }
  return rate;
}

// --- sweeps -----------------------------------------------------------------

bool ConvergenceReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

const Check* ConvergenceReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

// Linear interpolation of a sampled path; constant beyond the ends.
double path_at(const std::vector<double>& ts, const std::vector<double>& ys, double t) {
  if (ts.empty()) throw std::invalid_argument("empty reference path");
  if (t <= ts.front()) return ys.front();
  if (t >= ts.back()) return ys.back();
  const auto it = std::upper_bound(ts.begin(), ts.end(), t);
  const auto k = static_cast<std::size_t>(it - ts.begin());
  const double s = (t - ts[k - 1]) / (ts[k] - ts[k - 1]);
  return (1.0 - s) * ys[k - 1] + s * ys[k];
}

double field_at(const Field& f, double x) { return interpolate(f, x, kInf); }

Check nonincreasing(const std::string& name, const std::vector<double>& v, double slack) {
  Worst w;
  for (std::size_t k = 0; k + 1 < v.size(); ++k) w.offer(v[k + 1] - (1.0 + slack) * v[k], static_cast<double>(k + 1), 0.0);
  Check c = make_check(name, w, 0.0);
  c.detail = "each entry at most (1 + " + format_double(slack) + ") x its predecessor";
  return c;
}

std::vector<double> comparison_times(double T) {
  std::vector<double> ts;
  for (double t : {1.0, 0.5 * T, T}) {
    if (t > T || t <= 0.0) continue;
    if (std::find(ts.begin(), ts.end(), t) == ts.end()) ts.push_back(t);
  }
  return ts;
}

}  // namespace

ConvergenceReport compare_to_reference(const std::vector<SweepMember>& members, const RunResult& reference,
                                       const ComparisonOptions& options) {
  ConvergenceReport rep;
  for (std::size_t k = 0; k + 1 < members.size(); ++k) {
    if (!(members[k + 1].eps < members[k].eps)) throw std::invalid_argument("sweep eps list must be strictly decreasing");
  }
  const auto times = comparison_times(options.T);
  for (const auto& m : members) {
    rep.eps.push_back(m.eps);
    double e_u = 0.0;
    for (double t : times) {
      const Field& ue = nearest_snapshot(m.run.snapshots, t).u;
      const Field& ur = nearest_snapshot(reference.snapshots, t).u;
      for (std::size_t i = 0; i < ue.size(); ++i) {
        const double x = ue.grid().x(i);
        if (std::abs(x - options.x0) > options.window_radius) continue;
        const double ref = ur.grid() == ue.grid() ? ur[i] : field_at(ur, x);
        e_u = std::max(e_u, std::abs(ue[i] - ref));
      }
    }
    rep.e_u.push_back(e_u);

    const auto& tr = m.run.trajectory;
    const auto& rt = reference.trajectory;
    double e_I = 0.0;
    for (std::size_t k = 0; k + 1 < tr.size(); ++k) {
      const double f0 = std::abs(tr.I[k] - path_at(rt.times, rt.I, tr.times[k]));
      const double f1 = std::abs(tr.I[k + 1] - path_at(rt.times, rt.I, tr.times[k + 1]));
      e_I += 0.5 * (tr.times[k + 1] - tr.times[k]) * (f0 + f1);
    }
    rep.e_I.push_back(e_I);

    double mu = 0.0;
    for (double v : tr.max_u) mu = std::max(mu, std::abs(v));
    rep.max_u.push_back(mu);

    const Snapshot& last = nearest_snapshot(m.run.snapshots, options.T);
    const double I_T = tr.empty() ? exp_integral(last.u, m.eps).value : tr.I.back();
    const auto conc = detect_concentrations(last.u, m.eps, 20.0 * m.eps, I_T);
    rep.width.push_back(conc.dominant() ? conc.dominant()->width : 0.0);
  }

  if (members.size() >= 2) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const auto N = static_cast<double>(members.size());
    for (std::size_t k = 0; k < members.size(); ++k) {
      const double lx = std::log(rep.eps[k]);
      const double ly = std::log(rep.width[k]);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
    }
    rep.width_slope = (N * sxy - sx * sy) / (N * sxx - sx * sx);

    rep.checks.push_back(nonincreasing("e_u_nonincreasing", rep.e_u, options.slack));
    rep.checks.push_back(nonincreasing("e_I_nonincreasing", rep.e_I, options.slack));
    rep.checks.push_back(nonincreasing("max_u_nonincreasing", rep.max_u, options.slack));
    rep.checks.push_back(nonincreasing("width_nonincreasing", rep.width, options.slack));
    if (options.variant == Variant::parabolic) {
      Check c;
      c.name = "width_slope";
      c.value = rep.width_slope;
      c.margin = std::abs(rep.width_slope - options.slope_target) - options.slope_tol;
      c.passed = c.margin <= 0.0;
      c.detail = "log-log slope of peak width against eps, target " + format_double(options.slope_target) + " +- " +
                 format_double(options.slope_tol);
      rep.checks.push_back(c);
    } else {
      Worst w;
      for (std::size_t k = 0; k + 1 < rep.width.size(); ++k) w.offer(rep.width[k + 1] - rep.width[k], rep.eps[k + 1], 0.0);
      Check c = make_check("width_strictly_decreasing", w, 0.0);
      c.passed = c.margin < 0.0;
      rep.checks.push_back(c);
    }
  }
  return rep;
}

SweepMember run_member(const SweepSetup& setup, double eps) {
  SolverConfig config = setup.solver;
  config.eps = eps;
  config.T = setup.T;
  InitialData init = build_initial_data(setup.model, setup.grid, eps, setup.I0, setup.x0, setup.range);
  SweepMember m;
  m.eps = eps;
  if (setup.variant == Variant::parabolic) {
    m.run = ParabolicSolver(setup.model, setup.grid, config, setup.range).run(init.u);
  } else {
    IntegralSolver solver(setup.model, setup.grid, config, build_kernel_quadrature(setup.model, setup.quadrature),
                          setup.range);
    solver.set_monitor_window(setup.x0, 2.0);
    m.run = solver.run(init.u);
  }
  m.initial = std::move(init);
  return m;
}

std::vector<SweepMember> run_members(const SweepSetup& setup) {
  const std::size_t count = setup.eps_list.size();
  std::vector<std::optional<SweepMember>> slots(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < count; k = next++) {
      try {
        slots[k] = run_member(setup, setup.eps_list[k]);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(setup.jobs, static_cast<unsigned>(count)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t k = 0; k < count; ++k) {
    if (!errors[k]) continue;
    std::string what = "unknown error";
    try {
      std::rethrow_exception(errors[k]);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    throw SweepMemberError("sweep member eps = " + format_double(setup.eps_list[k]) + " failed: " + what,
                           setup.eps_list[k], errors[k]);
  }
  std::vector<SweepMember> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

ConvergenceReport epsilon_sweep(const SweepSetup& setup, const RunResult& reference,
                                std::vector<SweepMember>* members_out) {
  if (setup.eps_list.empty()) throw std::invalid_argument("sweep needs at least one eps");
  auto members = run_members(setup);
  ComparisonOptions opts;
  opts.x0 = setup.x0;
  opts.T = setup.T;
  opts.variant = setup.variant;
  auto rep = compare_to_reference(members, reference, opts);
  if (members_out) *members_out = std::move(members);
  return rep;
}

// --- calibration ------------------------------------------------------------

Calibration Calibration::parse(const std::string& text) {
  Calibration c;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("calibration line " + std::to_string(number) + ": expected key = value", number);
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (key.empty() || used != value.size() || value.empty()) {
      throw ConfigError("calibration line " + std::to_string(number) + ": cannot parse '" + line + "'", number);
    }
    if (c.values_.count(key)) throw ConfigError("calibration line " + std::to_string(number) + ": duplicate key " + key, number);
    c.values_[key] = v;
  }
  return c;
}

Calibration Calibration::load(const std::string& path) { return parse(read_file(path)); }

std::string Calibration::serialize() const {
  std::string s = "# Frozen pilot constants (eps = 0.1). Regenerate with: selmut sweep --write-calibration\n";
  for (const auto& [k, v] : values_) s += k + " = " + format_double(v) + '\n';
  return s;
}

void Calibration::save(const std::string& path) const { write_file_atomic(path, serialize()); }

double Calibration::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("calibration key missing: " + key, 0);
  return it->second;
}

}  // namespace selmut
