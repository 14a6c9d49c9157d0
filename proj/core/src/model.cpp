#include "selmut/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "selmut/errors.hpp"

namespace selmut {

namespace {

double checked(double value, const char* what, double x, double I) {
  if (!std::isfinite(value)) {
    std::ostringstream os;
    os << what << " is not finite at (x = " << x << ", I = " << I << ")";
    throw ModelEvaluationError(os.str(), x, I);
  }
  return value;
}

double fd_step(double at) { return 1e-5 * std::max(1.0, std::abs(at)); }

double rate_dI(const ModelSpec& m, double x, double I) {
  if (m.rate_dI) return m.rate_dI(x, I);
  const double d = fd_step(I);
  return (m.rate(x, I + d) - m.rate(x, I - d)) / (2.0 * d);
}

double birth_dI(const ModelSpec& m, double x, double I) {
  if (m.birth_dI) return m.birth_dI(x, I);
  const double d = fd_step(I);
  return (m.birth(x, I + d) - m.birth(x, I - d)) / (2.0 * d);
}

template <class F>
double d_dx(F&& f, double x) {
  const double d = 1e-4 * std::max(1.0, std::abs(x));
  return (f(x + d) - f(x - d)) / (2.0 * d);
}

template <class F>
double d2_dx2(F&& f, double x) {
  const double d = 1e-4 * std::max(1.0, std::abs(x));
  return (f(x + d) - 2.0 * f(x) + f(x - d)) / (d * d);
}

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

// Tracks the worst sample of a "bound - measured >= 0" family.
struct Worst {
  double margin = std::numeric_limits<double>::infinity();
  double x = 0.0;
  double I = 0.0;
  void update(double m, double at_x, double at_I) {
    if (m < margin) {
      margin = m;
      x = at_x;
      I = at_I;
    }
  }
};

AssumptionCheck make_check(std::string name, const Worst& w, double tol, std::string detail) {
  AssumptionCheck c;
  c.name = std::move(name);
  c.margin = w.margin;
  c.worst_x = w.x;
  c.worst_I = w.I;
  c.passed = w.margin >= -tol;
  c.detail = std::move(detail);
  return c;
}

std::pair<double, double> rate_extrema(const ModelSpec& model, Variant variant,
                                       const std::vector<double>& xs, double I) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double x : xs) {
    const double r = eval_rate(model, x, I, variant);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  return {lo, hi};
}

// Finds I in [lo, hi] with f(I) = 0 for decreasing f.
double bisect_decreasing(const std::function<double(double)>& f, double lo, double hi, double tol,
                         const char* which) {
  const double f_lo = f(lo);
  const double f_hi = f(hi);
  if (!(f_lo >= 0.0 && f_hi <= 0.0)) {
    std::ostringstream os;
    os << "nutrient bracket [" << lo << ", " << hi << "] does not straddle a sign change of the "
       << which << " rate (values " << f_lo << ", " << f_hi << ")";
    throw RangeDerivationError(os.str());
  }
  if (std::abs(f_lo) <= tol) return lo;
  if (std::abs(f_hi) <= tol) return hi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double v = f(mid);
    if (std::abs(v) <= tol || mid == lo || mid == hi) return mid;
    (v > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::optional<NutrientRange> try_range(const ModelSpec& model, Variant variant, const Grid1D& grid,
                                       double tol, std::string& why) {
  double hi = 1.0;
  const auto xs = grid.nodes();
  while (hi < 1e6 && rate_extrema(model, variant, xs, hi).second > 0.0) hi *= 2.0;
  try {
    return derive_nutrient_range(model, variant, grid, {1e-8, hi}, tol);
  } catch (const RangeDerivationError& e) {
    why = e.what();
    return std::nullopt;
  }
}

}  // namespace

double eval_rate(const ModelSpec& model, double x, double I, Variant variant) {
  const double r = checked(model.rate(x, I), "growth rate", x, I);
  if (variant == Variant::parabolic) return r;
  return checked(r + model.birth(x, I), "combined rate", x, I);
}

NutrientRange derive_nutrient_range(const ModelSpec& model, Variant variant, const Grid1D& x_grid,
                                    std::pair<double, double> I_bracket, double tol) {
  const auto xs = x_grid.nodes();
  auto min_rate = [&](double I) { return rate_extrema(model, variant, xs, I).first; };
  auto max_rate = [&](double I) { return rate_extrema(model, variant, xs, I).second; };
  NutrientRange r{};
  r.I_m = bisect_decreasing(min_rate, I_bracket.first, I_bracket.second, tol, "minimal");
  r.I_M = bisect_decreasing(max_rate, I_bracket.first, I_bracket.second, tol, "maximal");
  return r;
}

bool ValidationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const AssumptionCheck& c) { return c.passed; });
}

const AssumptionCheck* ValidationReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

ValidationReport validate_assumptions(const ModelSpec& model, Variant variant, const Grid1D& grid,
                                      double tol) {
  ValidationReport report{grid, variant, std::nullopt, {}};
  const auto& k = model.constants;
  const auto xs = grid.nodes();

  {
    Worst w;
    w.update(std::min(k.A, k.B), 0.0, 0.0);
    report.checks.push_back(make_check("initial_envelope_constants", w, 0.0, "A > 0 and B > 0"));
    if (w.margin <= 0.0) report.checks.back().passed = false;
  }

  if (variant == Variant::integral && !model.has_kernel()) {
    AssumptionCheck c;
    c.name = "kernel_present";
    c.passed = false;
    c.margin = -1.0;
    c.detail = "integral variant needs a mutation kernel and a birth rate";
    report.checks.push_back(c);
    return report;
  }

  std::string why;
  report.range = try_range(model, variant, grid, tol * 1e-3, why);
  {
    AssumptionCheck c;
    c.name = variant == Variant::parabolic ? "nutrient_range" : "combined_nutrient_range";
    if (report.range && report.range->I_m < report.range->I_M) {
      c.margin = report.range->I_M - report.range->I_m;
      std::ostringstream os;
      os.precision(10);
      os << "I_m = " << report.range->I_m << ", I_M = " << report.range->I_M
         << " (extrema over grid nodes in [" << grid.x_min() << ", " << grid.x_max() << "])";
      c.detail = os.str();
    } else {
      c.passed = false;
      c.margin = -1.0;
      c.detail = report.range ? "I_m >= I_M" : why;
    }
    report.checks.push_back(c);
  }

  const double I_lo = report.range ? 0.5 * report.range->I_m : 0.01;
  const double I_hi = report.range ? 2.0 * report.range->I_M : 10.0;
  const auto Is = linspace(I_lo, I_hi, 33);

  // Regularity of R in x, shared by both variants.
  {
    Worst w;
    for (double I : Is) {
      auto R = [&](double x) { return model.rate(x, I); };
      for (double x : xs) {
        const double worst = std::max({std::abs(R(x)), std::abs(d_dx(R, x)), std::abs(d2_dx2(R, x))});
        w.update(k.K2 - worst, x, I);
      }
    }
    report.checks.push_back(make_check("rate_regularity", w, tol,
                                       "|R|, |dR/dx|, |d2R/dx2| <= K2 for I in [I_m/2, 2 I_M]"));
  }

  if (variant == Variant::parabolic) {
    {
      Worst w;
      for (double x : xs) {
        const double p = model.psi(x);
        w.update(std::min(p - k.psi_m, k.psi_M - p), x, 0.0);
      }
      report.checks.push_back(make_check("psi_bounds", w, tol, "psi_m <= psi <= psi_M"));
    }
    {
      Worst w;
      for (double I : Is)
        for (double x : xs) {
          const double d = rate_dI(model, x, I);
          w.update(std::min(d + k.K1, -1.0 / k.K1 - d), x, I);
        }
      report.checks.push_back(
          make_check("rate_decreasing_in_I", w, tol, "-K1 <= dR/dI <= -1/K1"));
    }
    return report;
  }

  // Kernel: non-negative, unit mass, finite Gaussian moment.
  {
    const double scale = model.kernel_scale;
    const double radius = std::min(model.kernel_radius, 50.0 * scale);
    const double dz = scale / 200.0;
    const auto n = static_cast<std::size_t>(std::ceil(2.0 * radius / dz)) + 1;
    const auto zs = linspace(-radius, radius, n);
    const double step = zs[1] - zs[0];
    Worst nonneg;
    double mass = 0.0;
    double moment_full = 0.0;
    double moment_half = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double kz = model.kernel(zs[i]);
      nonneg.update(kz, zs[i], 0.0);
      const double wt = (i == 0 || i == n - 1) ? 0.5 * step : step;
      mass += wt * kz;
      const double g = kz * std::exp(zs[i] * zs[i]);
      moment_full += wt * g;
      if (std::abs(zs[i]) <= 0.5 * radius) moment_half += wt * g;
    }
    report.checks.push_back(make_check("kernel_nonnegative", nonneg, 0.0, "K(z) >= 0"));
    Worst unit;
    unit.update(std::max(tol, 1e-9) - std::abs(mass - 1.0), 0.0, 0.0);
    {
      std::ostringstream os;
      os.precision(12);
      os << "int K dz = " << mass;
      report.checks.push_back(make_check("kernel_unit_mass", unit, 0.0, os.str()));
    }
    AssumptionCheck mom;
    mom.name = "kernel_gaussian_moment";
    // A compactly supported kernel has every moment once the integral over its
    // support is finite; otherwise the tail beyond half the scan must vanish.
    const bool compact = model.kernel_radius <= 50.0 * scale;
    const bool finite = std::isfinite(moment_full) &&
                        (compact || std::abs(moment_full - moment_half) <= 1e-6 * std::abs(moment_full));
    mom.passed = finite;
    mom.margin = finite ? 1.0 : -1.0;
    mom.measured = moment_full;
    std::ostringstream os;
    os.precision(12);
    os << "int K(z) exp(z^2) dz = " << moment_full;
    mom.detail = os.str();
    report.checks.push_back(mom);
  }

  {
    Worst bounds, grad, lip;
    for (double I : Is)
      for (double x : xs) {
        const double b = model.birth(x, I);
        bounds.update(std::min(b - k.b_m, k.b_M - b), x, I);
        auto bx = [&](double y) { return model.birth(y, I); };
        grad.update(k.L1 * b - std::abs(d_dx(bx, x)), x, I);
        lip.update(k.L2 - std::abs(birth_dI(model, x, I)), x, I);
      }
    report.checks.push_back(make_check("birth_rate_bounds", bounds, tol, "b_m <= b <= b_M"));
    report.checks.push_back(make_check("birth_rate_gradient", grad, tol, "|db/dx| <= L1 b"));
    report.checks.push_back(make_check("birth_rate_lipschitz_in_I", lip, tol, "|db/dI| <= L2"));
  }

  {
    Worst lip, mono;
    for (double I : Is)
      for (double x : xs) {
        const double dr = rate_dI(model, x, I);
        lip.update(k.K3 - std::abs(dr), x, I);
        const double d = dr + birth_dI(model, x, I);
        mono.update(std::min(d + k.K4, -1.0 / k.K4 - d), x, I);
      }
    report.checks.push_back(make_check("rate_lipschitz_in_I", lip, tol, "|dR/dI| <= K3"));
    report.checks.push_back(
        make_check("combined_rate_decreasing_in_I", mono, tol, "-K4 <= d(R+b)/dI <= -1/K4"));
  }
  return report;
}

ModelSpec::TraitFn truncated_gaussian_kernel(double sigma, double radius_sigmas) {
  if (!(sigma > 0.0)) throw std::invalid_argument("kernel sigma must be positive");
  const double mass = std::erf(radius_sigmas / std::numbers::sqrt2);
  const double radius = radius_sigmas * sigma;
  const double norm = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi) * mass);
  return [=](double z) {
    if (std::abs(z) > radius) return 0.0;
    const double s = z / sigma;
    return norm * std::exp(-0.5 * s * s);
  };
}

namespace {

double catalog_a(double x) { return 2.0 - x * x / (1.0 + x * x); }

void set_birth(ModelSpec& m, const std::string& kind) {
  if (kind == "constant") {
    m.birth = [](double, double) { return 1.0; };
    m.constants.b_m = 1.0;
    m.constants.b_M = 1.0;
    m.constants.L1 = 0.1;
  } else if (kind == "x_dependent") {
    m.birth = [](double x, double) { return 1.0 + 0.5 / (1.0 + x * x); };
    m.constants.b_m = 1.0;
    m.constants.b_M = 1.5;
    m.constants.L1 = 0.5;
  } else {
    throw std::invalid_argument("unknown birth-rate kind '" + kind + "' (constant, x_dependent)");
  }
  m.birth_dI = [](double, double) { return 0.0; };
  m.birth_depends_on_I = false;
  m.constants.L2 = 0.1;
}

}  // namespace

std::vector<std::string> catalog_names() { return {"M1", "M2", "M2x"}; }

ModelSpec make_catalog_model(const std::string& name, const CatalogOptions& options) {
  ModelSpec m;
  m.name = name;
  m.psi = [](double) { return 1.0; };
  m.psi_is_unit = true;
  m.constants.A = 1.0;
  m.constants.B = 1.0;
  m.constants.K1 = 1.0;
  m.constants.K2 = 7.0;

  if (name == "M1") {
    if (options.birth_kind) throw std::invalid_argument("model M1 has no mutation birth rate");
    m.rate = [](double x, double I) { return catalog_a(x) - I; };
    m.rate_dI = [](double, double) { return -1.0; };
    return m;
  }
  if (name != "M2" && name != "M2x") {
    throw std::invalid_argument("unknown catalog model '" + name + "' (M1, M2, M2x)");
  }
  m.rate = [](double x, double I) { return catalog_a(x) - 1.0 - I; };
  m.rate_dI = [](double, double) { return -1.0; };
  m.kernel = truncated_gaussian_kernel(options.kernel_sigma, kCatalogKernelRadiusSigmas);
  m.kernel_scale = options.kernel_sigma;
  m.kernel_radius = kCatalogKernelRadiusSigmas * options.kernel_sigma;
  m.constants.K3 = 1.5;
  m.constants.K4 = 1.5;
  set_birth(m, options.birth_kind.value_or(name == "M2" ? "constant" : "x_dependent"));
  return m;
}

}  // namespace selmut
