#include <cmath>
#include <vector>

#include <doctest.h>

#include "oracles.hpp"
#include "selmut/analysis.hpp"
#include "selmut/errors.hpp"
#include "selmut/integral_solver.hpp"

using namespace selmut;

namespace {

SolverConfig config_for(double eps, double T) {
  SolverConfig c;
  c.eps = eps;
  c.T = T;
  return c;
}

KernelQuadratureOptions with_slope(double s) {
  KernelQuadratureOptions o;
  o.slope = s;
  return o;
}

// Two-sided exponentially weighted tail of the catalog kernel beyond Z.
double kernel_tail(double sigma, double S, double Z) {
  const double R = kCatalogKernelRadiusSigmas * sigma;
  if (Z >= R) return 0.0;
  const double mass = oracle::integral([&](double z) { return oracle::gaussian(z, 0.0, sigma); }, -R, R);
  const auto g = [&](double z) { return 2.0 * oracle::gaussian(z, 0.0, sigma) / mass * std::cosh(S * z); };
  return oracle::integral(g, Z, R, 1e-15);
}

}  // namespace

TEST_SUITE("integral") {
  TEST_CASE("quadrature radius for an unweighted Gaussian tail") {
    const ModelSpec m = make_catalog_model("M2");
    const KernelQuadrature kq = build_kernel_quadrature(m, with_slope(0.0));
    const double sigma = 0.5;
    CHECK(kq.radius / sigma > 6.0);
    CHECK(kq.radius / sigma < 7.0);
    CHECK(kernel_tail(sigma, 0.0, kq.radius) <= 1e-10);
    // Not wastefully wide: a quarter sigma inside, the tail is above tolerance.
    CHECK(kernel_tail(sigma, 0.0, kq.radius - 0.25 * sigma) > 1e-10);
  }

  TEST_CASE("quadrature invariants at the working slope") {
    const ModelSpec m = make_catalog_model("M2");
    const KernelQuadrature kq = build_kernel_quadrature(m, with_slope(3.0));
    double mass = 0.0;
    for (std::size_t j = 0; j < kq.size(); ++j) mass += kq.mass_weight(j);
    CHECK(std::abs(mass - 1.0) <= 1e-12);
    CHECK(kq.tail_mass <= 1e-10);
    CHECK(std::abs(kq.raw_mass - 1.0) <= 1e-10);
    CHECK(kernel_tail(0.5, 3.0, kq.radius) <= 1e-10);
    CHECK(kq.spacing <= 0.5 / 20.0 + 1e-15);
    for (double w : kq.weights) CHECK(w > 0.0);
  }

  TEST_CASE("symmetric kernel gives symmetric nodes and vanishing odd moments") {
    const KernelQuadrature kq = build_kernel_quadrature(make_catalog_model("M2"));
    const std::size_t J = kq.size();
    for (std::size_t j = 0; j < J; ++j) {
      CHECK(kq.nodes[j] == -kq.nodes[J - 1 - j]);
      CHECK(kq.kernel_values[j] == kq.kernel_values[J - 1 - j]);
    }
    CHECK(std::abs(kq.integrate([](double z) { return z; })) < 1e-12);
    CHECK(std::abs(kq.integrate([](double z) { return z * z * z; })) < 1e-12);
  }

  TEST_CASE("unreachable tail tolerance raises a truncation error") {
    KernelQuadratureOptions o;
    o.max_radius = 0.1;
    CHECK_THROWS_AS(build_kernel_quadrature(make_catalog_model("M2"), o), KernelTruncationError);
    CHECK_THROWS_AS(build_kernel_quadrature(make_catalog_model("M1")), KernelTruncationError);
  }

  TEST_CASE("mutation term of constant data is the kernel mass") {
    const ModelSpec m = make_catalog_model("M2");
    const KernelQuadrature kq = build_kernel_quadrature(m);
    const Grid1D g(-4.0, 4.0, 401);
    const Field u(g, -0.7);
    for (std::size_t i : {0u, 57u, 200u, 400u}) CHECK(mutation_term(u, i, 1.5, m, kq, 0.1) == doctest::Approx(1.0).epsilon(1e-14));
  }

  TEST_CASE("mutation term of linear data is the moment-generating function") {
    const ModelSpec m = make_catalog_model("M2");
    const KernelQuadrature kq = build_kernel_quadrature(m);
    const Grid1D g(-4.0, 4.0, 801);
    const double sigma = 0.5;
    for (double p : {-2.0, -0.5, 1.0, 2.0}) {
      const Field u = Field::sample(g, [p](double x) { return p * x; });
      const double R = kCatalogKernelRadiusSigmas * sigma;
      const double mass = oracle::integral([&](double z) { return oracle::gaussian(z, 0.0, sigma); }, -R, R);
      const double ref =
          oracle::integral([&](double z) { return oracle::gaussian(z, 0.0, sigma) * std::exp(p * z); }, -R, R) / mass;
      CHECK(ref == doctest::Approx(std::exp(p * p * sigma * sigma / 2.0)).epsilon(1e-9));
      CHECK(mutation_term(u, g.nearest(0.0), 1.5, m, kq, 0.1) == doctest::Approx(ref).epsilon(1e-10));
    }
  }

  TEST_CASE("mutation term of constant data averages the birth rate over the kernel") {
    const ModelSpec m = make_catalog_model("M2x");
    const KernelQuadrature kq = build_kernel_quadrature(m);
    const Grid1D g(-4.0, 4.0, 401);
    const double eps = 0.1;
    const std::size_t i = g.nearest(0.3);
    double ref = 0.0;
    for (std::size_t j = 0; j < kq.size(); ++j) {
      const double y = g.x(i) + eps * kq.nodes[j];
      ref += kq.weights[j] * kq.kernel_values[j] * (1.0 + 0.5 / (1.0 + y * y));
    }
    CHECK(mutation_term(Field(g, 0.0), i, 1.5, m, kq, eps) == doctest::Approx(ref).epsilon(1e-14));
  }

  TEST_CASE("exponent clamp is counted") {
    const ModelSpec m = make_catalog_model("M2");
    const KernelQuadrature kq = build_kernel_quadrature(m);
    const Grid1D g(-4.0, 4.0, 401);
    // A node 100 eps below its neighbours: every off-centre exponent exceeds 80.
    Field u(g, 0.0);
    const std::size_t i = 200;
    u[i] = -10.0;
    ClampCounter counter;
    mutation_term(u, i, 1.5, m, kq, 0.1, &counter);
    CHECK(counter.evaluations == kq.size());
    CHECK(counter.clamped > 0);
    CHECK(counter.clamped < counter.evaluations);
  }

  TEST_CASE("fast right-hand side agrees with the generic mutation term") {
    const ModelSpec m = make_catalog_model("M2x");
    const KernelQuadrature kq = build_kernel_quadrature(m);
    const Grid1D g(-4.0, 4.0, 401);
    const double eps = 0.05;
    const IntegralSolver s(m, g, config_for(eps, 1.0), kq);
    const Field u = Field::sample(g, [](double x) { return -std::abs(x - 0.7) + 0.1 * std::cos(3 * x); });
    std::vector<double> out;
    ClampCounter c;
    s.rhs(u, 1.8, out, c);
    for (std::size_t i = 0; i < g.size(); i += 7) {
      const double ref = eval_rate(m, g.x(i), 1.8, Variant::parabolic) + mutation_term(u, i, 1.8, m, kq, eps);
      CHECK(out[i] == doctest::Approx(ref).epsilon(1e-12));
    }
  }

  TEST_CASE("one step from constant data under a constant rate") {
    ModelSpec m = make_catalog_model("M2");
    const double r = -0.4, c = 0.25, dt = 1e-3;
    m.rate = [r](double, double) { return r; };
    const Grid1D g(-2.0, 2.0, 201);
    const IntegralSolver s(m, g, config_for(0.1, 1.0), build_kernel_quadrature(m));
    const SimState next = s.step(SimState{0.0, Field(g, c), 1.0, 0}, dt);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(next.u[i] == doctest::Approx(c + dt * (r + 1.0)).epsilon(1e-14));
  }

  TEST_CASE("step size follows the mutation bound") {
    const ModelSpec m = make_catalog_model("M2");
    const IntegralSolver s(m, Grid1D(-4.0, 4.0, 101), config_for(0.1, 1.0), build_kernel_quadrature(m));
    CHECK(s.stable_dt(3.0) == doctest::Approx(0.45 * 0.1 / (3.0 + 7.0)).epsilon(1e-15));
    CHECK(s.stable_dt(0.0) == doctest::Approx(std::min(1e-2, 0.45 * 0.1 / 7.0)).epsilon(1e-15));
  }

  TEST_CASE("comparison principle with a frozen nutrient path") {
    const ModelSpec m = make_catalog_model("M2x");
    const Grid1D g(-4.0, 4.0, 401);
    const double eps = 0.1;
    const IntegralSolver s(m, g, config_for(eps, 0.5), build_kernel_quadrature(m));
    const auto I_path = [](double t) { return 1.8 + 0.2 * std::cos(5.0 * t); };
    const InitialData d = build_initial_data(m, g, eps, 1.5, 1.0);
    Field upper = d.u;
    for (std::size_t i = 0; i < g.size(); ++i) upper[i] += 0.02 * (1.0 + std::sin(7.0 * g.x(i)));
    SimState lo{0.0, d.u, I_path(0.0), 0};
    SimState hi{0.0, upper, I_path(0.0), 0};
    std::vector<double> f;
    double worst = 1e300;
    while (lo.t < 0.5) {
      ClampCounter c1, c2;
      const double m1 = s.rhs(lo.u, lo.I, f, c1);
      const double m2 = s.rhs(hi.u, hi.I, f, c2);
      const double dt = std::min(s.stable_dt(std::max(m1, m2)), 0.5 - lo.t);
      lo = s.step(lo, dt);
      hi = s.step(hi, dt);
      lo.I = hi.I = I_path(lo.t);
      for (std::size_t i = 0; i < g.size(); ++i) worst = std::min(worst, hi.u[i] - lo.u[i]);
    }
    CHECK(worst >= -1e-12);
  }

  TEST_CASE("kernel benchmark with x-dependent birth rate runs cleanly") {
    const ModelSpec m = make_catalog_model("M2x");
    const Grid1D g(-4.0, 4.0, 801);
    const double eps = 0.1;
    const NutrientRange r = derive_nutrient_range(m, Variant::integral, g, {1e-3, 10.0}, 1e-12);
    const KernelQuadrature kq = build_kernel_quadrature(m);
    const InitialData d = build_initial_data(m, g, eps, 1.5, 1.0, r);
    IntegralSolver s(m, g, config_for(eps, 5.0), kq, r);
    s.set_monitor_window(d.x0, 2.0);
    const RunResult run = s.run(d.u);
    CHECK(run.diagnostics.clamp_warning_steps == 0);
    CHECK(run.diagnostics.clamp_events == 0);
    CHECK(run.snapshots.back().t == 5.0);

    const double C = integral_envelope_rate(m, kq, d.A);
    CHECK(C == doctest::Approx(m.constants.b_M * kq.integrate([](double z) { return std::exp(std::abs(z)); }) +
                               m.constants.K2));
    const Check env = check_envelope(run.snapshots, d.A, d.x0, d.b0, C);
    CHECK(env.passed);
    const Check low = check_lower_bound(run.snapshots, d.b0, d.A, d.x0, m.constants.K2);
    CHECK(low.passed);
    const Check lip = check_lipschitz_growth(run.snapshots, d.x0, lipschitz_growth_constants(m.constants, C, d.A, d.b0));
    CHECK(lip.passed);
    CHECK(run.diagnostics.max_time_derivative <= 1.1 * run.diagnostics.time_derivative_bound);
    const Check ib = check_I_bounds(run.trajectory, r, eps, 0.0, Variant::integral, 0.02);
    CHECK(ib.passed);
  }

  TEST_CASE("massive clamping is a stability error") {
    const ModelSpec m = make_catalog_model("M2");
    const Grid1D g(-4.0, 4.0, 401);
    const IntegralSolver s(m, g, config_for(0.01, 1.0), build_kernel_quadrature(m));
    // Saw-tooth of amplitude 1000 eps: nearly every off-centre exponent at the
    // low nodes clamps, about half of all evaluations.
    Field u = Field::sample(g, [](double) { return 0.0; });
    for (std::size_t i = 0; i < g.size(); i += 2) u[i] = -10.0;
    CHECK_THROWS_AS(s.step(SimState{0.0, u, 1.5, 0}, 1e-6), StabilityError);
  }
}
