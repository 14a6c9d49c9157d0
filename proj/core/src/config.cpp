#include "selmut/config.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

#include "selmut/errors.hpp"

namespace selmut {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

struct Entry {
  std::string value;
  int line;  ///< 0 for command-line overrides
};

std::string where(int line) { return line > 0 ? "line " + std::to_string(line) : "override"; }

double to_double(const std::string& key, const Entry& e) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(e.value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (e.value.empty() || used != e.value.size()) {
    throw ConfigError(where(e.line) + ": cannot parse '" + e.value + "' as a number for " + key, e.line);
  }
  return v;
}

std::size_t to_count(const std::string& key, const Entry& e) {
  const bool digits = !e.value.empty() && std::all_of(e.value.begin(), e.value.end(), [](char c) { return c >= '0' && c <= '9'; });
  if (!digits) throw ConfigError(where(e.line) + ": cannot parse '" + e.value + "' as a count for " + key, e.line);
  try {
    return static_cast<std::size_t>(std::stoull(e.value));
  } catch (const std::exception&) {
    throw ConfigError(where(e.line) + ": count out of range for " + key, e.line);
  }
}

std::vector<double> to_list(const std::string& key, const Entry& e) {
  std::vector<double> out;
  std::stringstream ss(e.value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, Entry{trim(item), e.line}));
  if (out.empty()) throw ConfigError(where(e.line) + ": empty list for " + key, e.line);
  return out;
}

const std::set<std::string> kConstantKeys = {"A", "B", "K1", "K2", "K3", "K4", "L1", "L2", "b_m", "b_M", "psi_m", "psi_M"};

void split_pair(const std::string& raw, int line, std::string& key, std::string& value) {
  const auto eq = raw.find('=');
  if (eq == std::string::npos) throw ConfigError(where(line) + ": expected key = value, got '" + trim(raw) + "'", line);
  key = trim(raw.substr(0, eq));
  value = trim(raw.substr(eq + 1));
  if (key.empty()) throw ConfigError(where(line) + ": empty key", line);
}

}  // namespace

std::string to_string(RunVariant v) {
  switch (v) {
    case RunVariant::parabolic: return "parabolic";
    case RunVariant::integral: return "integral";
    case RunVariant::hj_eikonal: return "hj_eikonal";
    case RunVariant::hj_integral: return "hj_integral";
  }
  return "?";
}

Variant RunConfig::solver_variant() const {
  return variant == RunVariant::parabolic || variant == RunVariant::hj_eikonal ? Variant::parabolic
                                                                                : Variant::integral;
}

ModelSpec RunConfig::build_model() const {
  CatalogOptions opts;
  if (kernel_sigma) opts.kernel_sigma = *kernel_sigma;
  opts.birth_kind = birth;
  ModelSpec m;
  try {
    m = make_catalog_model(model_name, opts);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what(), 0);
  }
  auto& k = m.constants;
  const std::map<std::string, double*> slots = {{"A", &k.A},     {"B", &k.B},         {"K1", &k.K1},     {"K2", &k.K2},
                                                {"K3", &k.K3},   {"K4", &k.K4},       {"L1", &k.L1},     {"L2", &k.L2},
                                                {"b_m", &k.b_m}, {"b_M", &k.b_M},     {"psi_m", &k.psi_m}, {"psi_M", &k.psi_M}};
  for (const auto& [name, v] : constant_overrides) *slots.at(name) = v;
  return m;
}

KernelQuadratureOptions RunConfig::quadrature_for(const ModelSpec& model) const {
  KernelQuadratureOptions q = quadrature;
  if (!quadrature_slope_set) q.slope = 3.0 * model.constants.A;
  return q;
}

RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
  std::map<std::string, Entry> entries;
  {
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      const auto hash = raw.find('#');
      if (hash != std::string::npos) raw.erase(hash);
      if (trim(raw).empty()) continue;
      std::string key, value;
      split_pair(raw, line, key, value);
      if (entries.count(key)) {
        throw ConfigError("line " + std::to_string(line) + ": duplicate key " + key + " (first set on line " +
                              std::to_string(entries[key].line) + ")",
                          line);
      }
      entries[key] = Entry{value, line};
    }
  }
  for (const auto& o : overrides) {
    std::string key, value;
    split_pair(o, 0, key, value);
    if (key == "solver.eps") entries.erase("solver.eps_list");
    if (key == "solver.eps_list") entries.erase("solver.eps");
    entries[key] = Entry{value, 0};
  }

  RunConfig c;
  using Handler = std::function<void(const std::string&, const Entry&)>;
  auto number = [](double& slot) { return Handler([&slot](const std::string& k, const Entry& e) { slot = to_double(k, e); }); };
  auto text_value = [](std::string& slot) { return Handler([&slot](const std::string&, const Entry& e) { slot = e.value; }); };
  bool has_eps = false;
  bool has_T = false;
  // model.kernel.sigma and model.b.kind are accepted as spellings of
  // model.kernel_sigma and model.birth; setting both spellings is an error.
  auto kernel_sigma = Handler([&](const std::string& k, const Entry& e) {
    if (c.kernel_sigma) throw ConfigError(where(e.line) + ": kernel sigma set twice", e.line);
    c.kernel_sigma = to_double(k, e);
  });
  auto birth_kind = Handler([&](const std::string& k, const Entry& e) {
    if (c.birth) throw ConfigError(where(e.line) + ": birth-rate kind set twice", e.line);
    if (e.value != "constant" && e.value != "x_dependent")
      throw ConfigError(where(e.line) + ": " + k + " must be constant or x_dependent", e.line);
    c.birth = e.value;
  });

  std::map<std::string, Handler> handlers = {
      {"model.name", text_value(c.model_name)},
      {"model.kernel_sigma", kernel_sigma},
      {"model.kernel.sigma", kernel_sigma},
      {"model.birth", birth_kind},
      {"model.b.kind", birth_kind},
      {"variant",
       [&](const std::string&, const Entry& e) {
         const std::map<std::string, RunVariant> names = {{"parabolic", RunVariant::parabolic},
                                                          {"integral", RunVariant::integral},
                                                          {"hj_eikonal", RunVariant::hj_eikonal},
                                                          {"hj_integral", RunVariant::hj_integral}};
         const auto it = names.find(e.value);
         if (it == names.end()) throw ConfigError(where(e.line) + ": unknown variant '" + e.value + "'", e.line);
         c.variant = it->second;
       }},
      {"grid.x_min", number(c.x_min)},
      {"grid.x_max", number(c.x_max)},
      {"grid.n_nodes", [&](const std::string& k, const Entry& e) { c.n_nodes = to_count(k, e); }},
      {"solver.eps",
       [&](const std::string& k, const Entry& e) {
         if (has_eps) throw ConfigError(where(e.line) + ": set only one of solver.eps and solver.eps_list", e.line);
         c.eps_list = {to_double(k, e)};
         has_eps = true;
       }},
      {"solver.eps_list",
       [&](const std::string& k, const Entry& e) {
         if (has_eps) throw ConfigError(where(e.line) + ": set only one of solver.eps and solver.eps_list", e.line);
         c.eps_list = to_list(k, e);
         has_eps = true;
       }},
      {"solver.T",
       [&](const std::string& k, const Entry& e) {
         c.T = to_double(k, e);
         has_T = true;
       }},
      {"solver.cfl_diffusion", number(c.solver.cfl_diffusion)},
      {"solver.cfl_advection", number(c.solver.cfl_advection)},
      {"solver.cfl_integral", number(c.solver.cfl_integral)},
      {"solver.dt_max", number(c.solver.dt_max)},
      {"solver.record_every", number(c.solver.record_every)},
      {"solver.flux",
       [&](const std::string&, const Entry& e) {
         if (e.value == "godunov") c.solver.flux = HamiltonianFlux::godunov;
         else if (e.value == "lax_friedrichs") c.solver.flux = HamiltonianFlux::lax_friedrichs;
         else throw ConfigError(where(e.line) + ": solver.flux must be godunov or lax_friedrichs", e.line);
       }},
      {"init.x0", number(c.x0)},
      {"init.I0", number(c.I0)},
      {"quadrature.tol", number(c.quadrature.tol)},
      {"quadrature.slope",
       [&](const std::string& k, const Entry& e) {
         c.quadrature.slope = to_double(k, e);
         c.quadrature_slope_set = true;
       }},
      {"quadrature.max_radius", number(c.quadrature.max_radius)},
      {"quadrature.spacing_fraction", number(c.quadrature.spacing_fraction)},
      {"hj.dt", [&](const std::string& k, const Entry& e) { c.hj_dt = to_double(k, e); }},
      {"hj.constraint_tol", number(c.constraint_tol)},
      {"checks.validation_tol", number(c.validation_tol)},
      {"checks.support_tol", number(c.support_tol)},
      {"checks.integral_slack", number(c.integral_slack)},
      {"checks.t0", number(c.t0)},
      {"checks.calibration", text_value(c.calibration_path)},
      {"output.dir", text_value(c.output_dir)},
  };

  // eps and eps_list are mutually exclusive: handle whichever appears first in
  // file order so the error names the later line.
  std::vector<std::pair<std::string, Entry>> ordered(entries.begin(), entries.end());
  std::stable_sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    const int la = a.second.line == 0 ? 1 << 30 : a.second.line;
    const int lb = b.second.line == 0 ? 1 << 30 : b.second.line;
    return la < lb;
  });
  for (const auto& [key, entry] : ordered) {
    if (key.rfind("model.", 0) == 0 && kConstantKeys.count(key.substr(6))) {
      c.constant_overrides[key.substr(6)] = to_double(key, entry);
      continue;
    }
    const auto it = handlers.find(key);
    if (it == handlers.end()) throw ConfigError(where(entry.line) + ": unknown key " + key, entry.line);
    it->second(key, entry);
  }

  if (c.model_name.empty()) throw ConfigError("missing required key model.name", 0);
  if (!entries.count("variant")) throw ConfigError("missing required key variant", 0);
  if (!has_T) throw ConfigError("missing required key solver.T", 0);
  if (!has_eps) throw ConfigError("missing required key solver.eps or solver.eps_list", 0);

  auto line_of = [&](const char* key) { return entries.count(key) ? entries.at(key).line : 0; };
  for (std::size_t k = 0; k < c.eps_list.size(); ++k) {
    if (!(c.eps_list[k] > 0.0)) throw ConfigError(where(line_of("solver.eps_list")) + ": eps must be positive", line_of("solver.eps_list"));
    if (k > 0 && !(c.eps_list[k] < c.eps_list[k - 1])) {
      throw ConfigError(where(line_of("solver.eps_list")) + ": solver.eps_list must be strictly decreasing",
                        line_of("solver.eps_list"));
    }
  }
  if (!(c.T >= 0.0)) throw ConfigError(where(line_of("solver.T")) + ": solver.T must be non-negative", line_of("solver.T"));
  if (c.n_nodes < 3) throw ConfigError(where(line_of("grid.n_nodes")) + ": grid.n_nodes must be at least 3", line_of("grid.n_nodes"));
  if (!(c.x_max > c.x_min)) throw ConfigError(where(line_of("grid.x_max")) + ": grid.x_max must exceed grid.x_min", line_of("grid.x_max"));
  const auto names = catalog_names();
  if (std::find(names.begin(), names.end(), c.model_name) == names.end()) {
    throw ConfigError(where(line_of("model.name")) + ": unknown catalog model " + c.model_name, line_of("model.name"));
  }
  try {
    SolverConfig probe = c.solver;
    probe.eps = c.eps_list.front();
    probe.T = c.T;
    probe.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("solver settings: ") + e.what(), 0);
  }
  return c;
}

}  // namespace selmut
