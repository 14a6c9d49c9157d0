#include "selmut/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "selmut/errors.hpp"
#include "selmut/io.hpp"

namespace selmut {

namespace fs = std::filesystem;

namespace {

// Deterministic line-oriented report: "check", "assumption", "metric" and
// "warning" lines followed by a final "status" line.
class Report {
 public:
  void check(const Check& c, const std::string& prefix = {}) {
    ok_ = ok_ && c.passed;
    text_ += "check " + prefix + c.name + (c.passed ? " PASS" : " FAIL") + " margin=" + format_double(c.margin) +
             " witness_x=" + format_double(c.witness_x) + " witness_t=" + format_double(c.witness_t) +
             " value=" + format_double(c.value);
    if (!c.detail.empty()) text_ += " | " + c.detail;
    text_ += '\n';
  }
  void assumption(const AssumptionCheck& a) {
    text_ += "assumption " + a.name + (a.passed ? " PASS" : " FAIL") + " margin=" + format_double(a.margin);
    if (!a.detail.empty()) text_ += " | " + a.detail;
    text_ += '\n';
  }
  void metric(const std::string& name, double v) { text_ += "metric " + name + " = " + format_double(v) + '\n'; }
  void note(const std::string& line) { text_ += line + '\n'; }
  void warning(const std::string& w) { text_ += "warning " + w + '\n'; }
  void fail() { ok_ = false; }
  bool ok() const { return ok_; }
  std::string finish(int code) const {
    return text_ + "status " + (code == exit_code::ok ? "PASS" : "FAIL") + " exit=" + std::to_string(code) + '\n';
  }

 private:
  std::string text_;
  bool ok_ = true;
};

std::string eps_tag(double eps) { return "eps=" + format_double(eps); }

std::string calibration_prefix(const RunConfig& config) {
  return config.model_name + '.' + (config.solver_variant() == Variant::parabolic ? "parabolic" : "integral") + '.';
}

std::optional<Calibration> load_calibration(const RunConfig& config) {
  if (config.calibration_path.empty()) return std::nullopt;
  try {
    return Calibration::load(config.calibration_path);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("calibration file: ") + e.what(), 0);
  }
}

SweepSetup make_setup(const RunConfig& config, const ModelSpec& model, const NutrientRange& range, unsigned jobs) {
  SweepSetup s;
  s.model = model;
  s.variant = config.solver_variant();
  s.grid = config.grid();
  s.eps_list = config.eps_list;
  s.T = config.T;
  s.x0 = config.x0;
  s.I0 = config.I0;
  s.solver = config.solver;
  s.quadrature = config.quadrature_for(model);
  s.range = range;
  s.jobs = jobs;
  return s;
}

std::vector<double> support_times(double T) {
  std::vector<double> ts;
  for (double t : {1.0, 0.5 * T, T})
    if (t > 0.0 && t <= T && std::find(ts.begin(), ts.end(), t) == ts.end()) ts.push_back(t);
  return ts;
}

void write_run(const fs::path& dir, const RunResult& run, double eps, bool with_clamps) {
  fs::create_directories(dir);
  write_file_atomic((dir / "trajectory.csv").string(), trajectory_csv(run.trajectory, with_clamps));
  for (const auto& s : run.snapshots) write_file_atomic((dir / snapshot_file_name(s.t)).string(), snapshot_csv(s, eps));
}

int code_for(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const ConfigError&) {
    return exit_code::config;
  } catch (const InitializationError&) {
    return exit_code::validation;
  } catch (const RangeDerivationError&) {
    return exit_code::validation;
  } catch (const KernelTruncationError&) {
    return exit_code::validation;
  } catch (const SweepMemberError& s) {
    return code_for(s.cause());
  } catch (const std::invalid_argument&) {
    return exit_code::config;
  } catch (...) {
    return exit_code::blow_up;
  }
}

// Validation shared by every command; returns the range or nullopt on failure.
std::optional<NutrientRange> validate_into(const RunConfig& config, const ModelSpec& model, Report& rep,
                                           std::ostream& log) {
  const auto report = validate_assumptions(model, config.solver_variant(), config.grid(), config.validation_tol);
  for (const auto& a : report.checks) rep.assumption(a);
  if (!report.passed()) {
    for (const auto& a : report.checks)
      if (!a.passed) log << "assumption " << a.name << " violated: " << a.detail << '\n';
    return std::nullopt;
  }
  rep.metric("I_m", report.range->I_m);
  rep.metric("I_M", report.range->I_M);
  return report.range;
}

}  // namespace

Field limit_initial_datum(const RunConfig& config, const ModelSpec& model, const std::optional<NutrientRange>& range) {
  Field u = build_initial_data(model, config.grid(), config.eps(), config.I0, config.x0, range).u;
  const double top = u.max();
  for (auto& v : u.values()) v -= top;
  return u;
}

Hamiltonian make_hamiltonian(const RunConfig& config, const ModelSpec& model, const NutrientRange& range) {
  if (config.solver_variant() == Variant::parabolic) return Hamiltonian::eikonal(model, range);
  return Hamiltonian::kernel_integral(model, range, build_kernel_quadrature(model, config.quadrature_for(model)));
}

RunResult run_limit(const RunConfig& config, const ModelSpec& model, const NutrientRange& range) {
  const Grid1D grid = config.grid();
  const double dt = config.hj_dt.value_or(default_hj_dt(grid));
  return run_hj(grid, make_hamiltonian(config, model, range), limit_initial_datum(config, model, range), config.T, dt,
                config.constraint_tol, config.solver.record_every);
}

std::vector<Check> member_checks(const RunConfig& config, const ModelSpec& model, const NutrientRange& range,
                                 const SweepMember& member, const Calibration* calibration) {
  std::vector<Check> out;
  const auto& k = model.constants;
  const auto& run = member.run;
  const bool parabolic = config.solver_variant() == Variant::parabolic;
  const std::string prefix = calibration_prefix(config);

  double c = 0.0;
  std::string c_note = "no frozen constant; c = 0";
  if (parabolic && calibration && calibration->has(prefix + "nutrient_c")) {
    c = calibration->get(prefix + "nutrient_c");
    c_note = "frozen c = " + format_double(c);
  }
  Check ib = check_I_bounds(run.trajectory, range, member.eps, c, config.solver_variant(), config.integral_slack);
  if (parabolic) ib.detail += "; " + c_note;
  out.push_back(ib);

  if (member.initial) {
    const InitialData& init = *member.initial;
    if (parabolic) {
      out.push_back(check_envelope(run.snapshots, init.A, init.x0, init.b0, parabolic_envelope_rate(model, init.A)));
    } else {
      const auto kq = build_kernel_quadrature(model, config.quadrature_for(model));
      const double C = integral_envelope_rate(model, kq, init.A);
      out.push_back(check_envelope(run.snapshots, init.A, init.x0, init.b0, C));
      out.push_back(check_lower_bound(run.snapshots, init.b0, init.A, init.x0, k.K2));
      out.push_back(check_lipschitz_growth(run.snapshots, init.x0, lipschitz_growth_constants(k, C, init.A, init.b0)));
      Check td;
      td.name = "time_derivative";
      td.value = run.diagnostics.max_time_derivative;
      td.margin = run.diagnostics.max_time_derivative - 1.1 * run.diagnostics.time_derivative_bound;
      td.passed = td.margin <= 0.0;
      td.detail = "max |du/dt| on [x0 - 2, x0 + 2] against K2 + b_M (1 + int K exp(S|z|)) with 10% slack";
      out.push_back(td);
    }
  }

  for (double t : support_times(config.T)) {
    const Snapshot& s = nearest_snapshot(run.snapshots, t);
    Check sc = check_support(s.u, member.eps, exp_integral(s.u, member.eps).value, config.support_tol);
    sc.name = "support_t" + format_double(s.t);
    sc.witness_t = s.t;
    out.push_back(sc);
  }

  if (config.T > config.t0) out.push_back(check_bv(run.trajectory, config.t0, config.T));

  if (parabolic && calibration && config.T > 1.0 && calibration->has(prefix + "time_modulus_B")) {
    out.push_back(check_time_modulus(run.snapshots, 1.0, config.T, config.x0, 2.0,
                                     calibration->get(prefix + "time_modulus_B"),
                                     calibration->get(prefix + "time_modulus_eta")));
  }
  return out;
}

void calibrate_from_member(const RunConfig& config, const NutrientRange& range, const SweepMember& member,
                           Calibration& calibration) {
  const std::string prefix = calibration_prefix(config);
  const auto& tr = member.run.trajectory;
  if (config.solver_variant() == Variant::parabolic) {
    double excess = 0.0;
    for (double I : tr.I) excess = std::max({excess, I - range.I_M, range.I_m - I});
    // Twice the observed excess in units of eps^2, and never below 1.
    calibration.set(prefix + "nutrient_c", std::max(2.0 * excess / (member.eps * member.eps), 1.0));
    const ModelSpec model = config.build_model();
    const double D2 = regularizing_height(model.constants, config.T);
    calibration.set(prefix + "regularizing_sup", regularizing_profile(member.run.snapshots, D2, config.t0).sup_excess);
    if (config.T > 1.0) {
      calibration.set(prefix + "time_modulus_B",
                      2.0 * observed_time_rate(member.run.snapshots, 1.0, config.T, config.x0, 2.0));
      calibration.set(prefix + "time_modulus_eta", 0.0);
    }
  }
  calibration.set(prefix + "tv_I", total_variation(tr, config.t0, config.T));
}

namespace {

int do_validate(const RunConfig& config, const fs::path& out, std::ostream& log) {
  Report rep;
  const ModelSpec model = config.build_model();
  const auto range = validate_into(config, model, rep, log);
  const int code = range ? exit_code::ok : exit_code::validation;
  fs::create_directories(out);
  write_file_atomic((out / "report.txt").string(), rep.finish(code));
  return code;
}

int do_simulate(const RunConfig& config, const fs::path& out, std::ostream& log) {
  Report rep;
  const ModelSpec model = config.build_model();
  const auto range = validate_into(config, model, rep, log);
  fs::create_directories(out);
  if (!range) {
    write_file_atomic((out / "report.txt").string(), rep.finish(exit_code::validation));
    return exit_code::validation;
  }
  const auto calibration = load_calibration(config);
  int code = exit_code::ok;
  try {
    const SweepMember member = run_member(make_setup(config, model, *range, 1), config.eps());
    for (const auto& c : member_checks(config, model, *range, member, calibration ? &*calibration : nullptr)) rep.check(c);
    if (config.solver_variant() == Variant::parabolic && config.T > config.t0) {
      const auto prof = regularizing_profile(member.run.snapshots, regularizing_height(model.constants, config.T), config.t0);
      rep.metric("regularizing_sup", prof.sup_excess);
    }
    if (config.T > config.t0) rep.metric("tv_I", total_variation(member.run.trajectory, config.t0, config.T));
    if (!member.run.trajectory.empty()) rep.metric("I_final", member.run.trajectory.I.back());
    rep.metric("clamp_events", static_cast<double>(member.run.diagnostics.clamp_events));
    for (const auto& w : member.run.diagnostics.warnings) rep.warning(w);
    write_run(out, member.run, config.eps(), config.solver_variant() == Variant::integral);
    if (!rep.ok()) code = exit_code::check_failure;
  } catch (const Error& e) {
    log << "run failed: " << e.what() << '\n';
    rep.note(std::string("error ") + e.what());
    code = code_for(std::current_exception());
  }
  write_file_atomic((out / "report.txt").string(), rep.finish(code));
  return code;
}

int do_hj(const RunConfig& config, const fs::path& out, std::ostream& log) {
  Report rep;
  const ModelSpec model = config.build_model();
  const auto range = validate_into(config, model, rep, log);
  fs::create_directories(out);
  if (!range) {
    write_file_atomic((out / "report.txt").string(), rep.finish(exit_code::validation));
    return exit_code::validation;
  }
  int code = exit_code::ok;
  try {
    const RunResult run = run_limit(config, model, *range);
    const double tol = config.constraint_tol;
    Check cons;
    cons.name = "constraint";
    cons.value = run.diagnostics.max_constraint_residual;
    cons.margin = cons.value - tol;
    cons.passed = cons.margin <= 0.0;
    cons.detail = "max over steps of |max u|";
    rep.check(cons);
    Check bis;
    bis.name = "bisection_iterations";
    bis.value = run.diagnostics.max_bisection_iterations;
    bis.margin = bis.value - kMaxBisectionIterations;
    bis.passed = bis.margin <= 0.0;
    rep.check(bis);
    Check ib = check_I_bounds(run.trajectory, *range, 0.0, 0.0, Variant::integral, tol);
    ib.name = "I_bounds";
    rep.check(ib);
    if (!run.trajectory.empty()) {
      rep.metric("I_final", run.trajectory.I.back());
      rep.metric("argmax_final", run.trajectory.argmax_u.back());
    }
    write_run(out, run, config.eps(), false);
    if (!rep.ok()) code = exit_code::check_failure;
  } catch (const Error& e) {
    log << "limit run failed: " << e.what() << '\n';
    rep.note(std::string("error ") + e.what());
    code = code_for(std::current_exception());
  }
  write_file_atomic((out / "report.txt").string(), rep.finish(code));
  return code;
}

int do_sweep(const RunConfig& config, const ScenarioOptions& options, const fs::path& out, std::ostream& log) {
  Report rep;
  const ModelSpec model = config.build_model();
  const auto range = validate_into(config, model, rep, log);
  fs::create_directories(out);
  if (!range) {
    write_file_atomic((out / "report.txt").string(), rep.finish(exit_code::validation));
    return exit_code::validation;
  }
  const auto calibration = load_calibration(config);
  const Calibration* cal = calibration ? &*calibration : nullptr;
  const bool parabolic = config.solver_variant() == Variant::parabolic;
  const std::string prefix = calibration_prefix(config);
  int code = exit_code::ok;
  try {
    const RunResult reference = run_limit(config, model, *range);
    write_run(out / "limit", reference, config.eps(), false);
    std::vector<SweepMember> members = run_members(make_setup(config, model, *range, std::max(1u, options.jobs)));

    ComparisonOptions copts;
    copts.x0 = config.x0;
    copts.T = config.T;
    copts.variant = config.solver_variant();
    const ConvergenceReport conv = compare_to_reference(members, reference, copts);

    std::string table = "eps,e_u,e_I,max_u,width\n";
    for (std::size_t k = 0; k < members.size(); ++k) {
      table += format_double(conv.eps[k]) + ',' + format_double(conv.e_u[k]) + ',' + format_double(conv.e_I[k]) + ',' +
               format_double(conv.max_u[k]) + ',' + format_double(conv.width[k]) + '\n';
    }
    write_file_atomic((out / "sweep.csv").string(), table);
    if (members.size() >= 2) rep.metric("width_slope", conv.width_slope);
    for (const auto& c : conv.checks) rep.check(c);

    std::vector<double> sups;
    std::vector<double> tvs;
    for (const auto& m : members) {
      const std::string tag = eps_tag(m.eps) + ' ';
      for (const auto& c : member_checks(config, model, *range, m, cal)) rep.check(c, tag);
      if (parabolic && config.T > config.t0) {
        sups.push_back(regularizing_profile(m.run.snapshots, regularizing_height(model.constants, config.T), config.t0)
                           .sup_excess);
        rep.metric(tag + "regularizing_sup", sups.back());
      }
      if (config.T > config.t0) {
        tvs.push_back(total_variation(m.run.trajectory, config.t0, config.T));
        rep.metric(tag + "tv_I", tvs.back());
      }
      for (const auto& w : m.run.diagnostics.warnings) rep.warning(tag + w);
      write_run(out / ("eps_" + format_double(m.eps)), m.run, m.eps, !parabolic);
    }
    if (cal && parabolic && !sups.empty() && cal->has(prefix + "regularizing_sup")) {
      rep.check(check_uniform_band("regularizing_band", sups, cal->get(prefix + "regularizing_sup"), 0.25));
    }
    if (cal && !tvs.empty() && cal->has(prefix + "tv_I")) {
      rep.check(check_bounded_by("bv_band", tvs, cal->get(prefix + "tv_I"), 1.5));
    }

    if (options.write_calibration) {
      Calibration fresh;
      if (fs::exists(*options.write_calibration)) fresh = Calibration::load(*options.write_calibration);
      const auto pilot = std::find_if(members.begin(), members.end(), [](const SweepMember& m) { return m.eps == 0.1; });
      calibrate_from_member(config, *range, pilot == members.end() ? members.front() : *pilot, fresh);
      fresh.save(*options.write_calibration);
      log << "calibration written to " << *options.write_calibration << '\n';
    }
    if (!rep.ok()) code = exit_code::check_failure;
  } catch (const Error& e) {
    log << "sweep failed: " << e.what() << '\n';
    rep.note(std::string("error ") + e.what());
    code = code_for(std::current_exception());
  }
  write_file_atomic((out / "report.txt").string(), rep.finish(code));
  return code;
}

}  // namespace

int report_status(const std::string& out_dir, std::ostream& log) {
  const fs::path path = fs::path(out_dir) / "report.txt";
  std::string text;
  try {
    text = read_file(path.string());
  } catch (const std::exception& e) {
    log << e.what() << '\n';
    return exit_code::config;
  }
  log << text;
  return text.find("\nstatus PASS") != std::string::npos || text.rfind("status PASS", 0) == 0 ? exit_code::ok
                                                                                             : exit_code::check_failure;
}

int run_scenario(const RunConfig& config, const ScenarioOptions& options, std::ostream& log) {
  const fs::path out = options.out_dir.value_or(config.output_dir);
  try {
    switch (options.command) {
      case Command::validate: return do_validate(config, out, log);
      case Command::simulate:
        if (config.variant == RunVariant::hj_eikonal || config.variant == RunVariant::hj_integral)
          return do_hj(config, out, log);
        return do_simulate(config, out, log);
      case Command::hj: return do_hj(config, out, log);
      case Command::sweep: return do_sweep(config, options, out, log);
      case Command::report: return report_status(out.string(), log);
    }
  } catch (const ConfigError& e) {
    log << "configuration error: " << e.what() << '\n';
    return exit_code::config;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return code_for(std::current_exception());
  }
  return exit_code::config;
}

int run_config_file(const std::string& path, const std::vector<std::string>& overrides, const ScenarioOptions& options,
                    std::ostream& log) {
  RunConfig config;
  try {
    config = parse_config(read_file(path), overrides);
  } catch (const ConfigError& e) {
    log << "configuration error: " << e.what() << '\n';
    return exit_code::config;
  } catch (const std::exception& e) {
    log << "configuration error: " << e.what() << '\n';
    return exit_code::config;
  }
  return run_scenario(config, options, log);
}

}  // namespace selmut
