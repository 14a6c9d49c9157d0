#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "selmut/integral_solver.hpp"
#include "selmut/model.hpp"
#include "selmut/numerics.hpp"
#include "selmut/parabolic_solver.hpp"

namespace selmut {

enum class RunVariant { parabolic, integral, hj_eikonal, hj_integral };

/// Typed run configuration. Every field has a documented default except the
/// required keys model.name, variant, solver.T and one of solver.eps /
/// solver.eps_list.
struct RunConfig {
  // model.*
  std::string model_name;
  std::optional<double> kernel_sigma;             ///< model.kernel_sigma (alias model.kernel.sigma)
  std::optional<std::string> birth;               ///< model.birth (alias model.b.kind) = constant | x_dependent
  std::map<std::string, double> constant_overrides;  ///< model.A, model.K1, ...

  RunVariant variant = RunVariant::parabolic;

  // grid.*
  double x_min = -4.0;
  double x_max = 4.0;
  std::size_t n_nodes = 801;

  // solver.*
  std::vector<double> eps_list;  ///< solver.eps gives a one-element list
  double T = 0.0;
  SolverConfig solver;           ///< cfl_*, dt_max, record_every, flux; eps/T filled per run

  // init.*
  double x0 = 1.0;
  double I0 = 1.5;

  // quadrature.*
  KernelQuadratureOptions quadrature;
  bool quadrature_slope_set = false;  ///< otherwise slope = 3 A

  // hj.*
  std::optional<double> hj_dt;  ///< default h / 10
  double constraint_tol = 1e-10;

  // checks.*
  double validation_tol = 1e-9;
  double support_tol = 1e-3;
  double integral_slack = 0.02;
  double t0 = 0.1;
  std::string calibration_path;  ///< empty: no frozen constants available

  // output.*
  std::string output_dir = "out";

  ModelSpec build_model() const;
  Grid1D grid() const { return Grid1D(x_min, x_max, n_nodes); }
  double eps() const { return eps_list.front(); }
  Variant solver_variant() const;
  KernelQuadratureOptions quadrature_for(const ModelSpec& model) const;
};

/// Parses flat "key = value" text (one pair per line, # comments), then
/// applies overrides ("key=value" strings, replacing file values). Unknown,
/// duplicate, unparsable and missing required keys throw ConfigError naming
/// the line (line 0 for overrides and missing keys).
RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {});

std::string to_string(RunVariant v);

}  // namespace selmut
