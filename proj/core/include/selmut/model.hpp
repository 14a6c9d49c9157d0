#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "selmut/numerics.hpp"

namespace selmut {

/// Which population equation a quantity refers to: Laplacian mutations
/// (rate R) or kernel mutations (combined rate R + b).
enum class Variant { parabolic, integral };

/// Constants of the standing assumptions. All strictly positive.
struct ModelConstants {
  double A = 1.0;  ///< slope of the initial envelope -A|x| + B
  double B = 1.0;  ///< height cap of the initial envelope
  double K1 = 1.0;
  double K2 = 1.0;
  double K3 = 1.0;
  double K4 = 1.0;
  double L1 = 1.0;
  double L2 = 1.0;
  double b_m = 1.0;
  double b_M = 1.0;
  double psi_m = 1.0;
  double psi_M = 1.0;
};

/// A problem instance (R, psi, K, b) plus its assumption constants.
/// Treated as immutable once built; copies share nothing mutable.
struct ModelSpec {
  using RateFn = std::function<double(double x, double I)>;
  using TraitFn = std::function<double(double x)>;

  std::string name;
  RateFn rate;        ///< growth rate R(x, I)
  TraitFn psi;        ///< consumption weight
  TraitFn kernel;     ///< mutation density K(z); empty for Laplacian-only models
  RateFn birth;       ///< mutation birth rate b(x, I); empty for Laplacian-only models

  /// Exact dR/dI; replaces the finite-difference estimate when present.
  RateFn rate_dI;
  /// Exact db/dI, same role as rate_dI.
  RateFn birth_dI;

  double kernel_scale = 1.0;  ///< characteristic width of K (sets quadrature spacing)
  double kernel_radius = std::numeric_limits<double>::infinity();  ///< support of K
  bool birth_depends_on_I = true;
  bool psi_is_unit = false;  ///< psi == 1 identically

  ModelConstants constants;

  bool has_kernel() const noexcept { return static_cast<bool>(kernel) && static_cast<bool>(birth); }
};

struct NutrientRange {
  double I_m;
  double I_M;
};

/// R(x, I) for the parabolic variant, R(x, I) + b(x, I) for the integral one.
/// Throws ModelEvaluationError when the result is not finite.
double eval_rate(const ModelSpec& model, double x, double I, Variant variant);

/// Bisection on I for min_x rate(x, I_m) = 0 and max_x rate(x, I_M) = 0, with
/// min/max taken over the grid nodes. Throws RangeDerivationError when the
/// bracket does not straddle a sign change.
NutrientRange derive_nutrient_range(const ModelSpec& model, Variant variant, const Grid1D& x_grid,
                                    std::pair<double, double> I_bracket, double tol);

struct AssumptionCheck {
  std::string name;
  bool passed = true;
  double margin = 0.0;  ///< worst (bound - measured); negative means violated
  double worst_x = 0.0;
  double worst_I = 0.0;
  double measured = std::numeric_limits<double>::quiet_NaN();  ///< headline value, if any
  std::string detail;
};

struct ValidationReport {
  Grid1D grid;
  Variant variant;
  std::optional<NutrientRange> range;
  std::vector<AssumptionCheck> checks;

  bool passed() const;
  const AssumptionCheck* find(const std::string& name) const;
};

/// Samples every standing assumption relevant to the variant on the grid.
/// Failures are reported as data, never thrown.
ValidationReport validate_assumptions(const ModelSpec& model, Variant variant, const Grid1D& grid,
                                      double tol);

/// Catalog of built-in models. Names: "M1", "M2", "M2x".
struct CatalogOptions {
  double kernel_sigma = 0.5;
  std::optional<std::string> birth_kind;  ///< "constant" or "x_dependent"
};

ModelSpec make_catalog_model(const std::string& name, const CatalogOptions& options = {});
std::vector<std::string> catalog_names();

/// Gaussian density of standard deviation sigma truncated to |z| <= radius_sigmas * sigma
/// and renormalized to unit mass.
ModelSpec::TraitFn truncated_gaussian_kernel(double sigma, double radius_sigmas);

/// Truncation radius, in units of sigma, of the catalog Gaussian kernels.
inline constexpr double kCatalogKernelRadiusSigmas = 8.0;

}  // namespace selmut
