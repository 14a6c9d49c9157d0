#include <cmath>
#include <array>
#include <exception>
#include <filesystem>
#include <vector>

#include <doctest.h>

#include "oracles.hpp"
#include "selmut/analysis.hpp"
#include "selmut/errors.hpp"
#include "selmut/io.hpp"

using namespace selmut;

namespace {

Trajectory path(const std::vector<double>& ts, const std::vector<double>& Is) {
  Trajectory tr;
  for (std::size_t k = 0; k < ts.size(); ++k) tr.append(ts[k], Is[k], 0.0, 0.0, Is[k]);
  tr.finalize();
  return tr;
}

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k) v[k] = a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1);
  return v;
}

// u = eps ln n for a sum of Gaussian densities (mean, sd, mass).
Field gaussian_mixture(const Grid1D& g, double eps, const std::vector<std::array<double, 3>>& parts) {
  return Field::sample(g, [&](double x) {
    // log-sum-exp over the components keeps far tails finite.
    double top = -1e300;
    std::vector<double> logs;
    for (const auto& p : parts) {
      const double z = (x - p[0]) / p[1];
      logs.push_back(std::log(p[2] / (p[1] * std::sqrt(2.0 * M_PI))) - 0.5 * z * z);
      top = std::max(top, logs.back());
    }
    double s = 0.0;
    for (double l : logs) s += std::exp(l - top);
    return eps * (top + std::log(s));
  });
}

}  // namespace

TEST_SUITE("analysis") {
  TEST_CASE("nutrient bounds on synthetic paths") {
    const NutrientRange r{1.0, 2.0};
    const Trajectory flat = path({0.0, 1.0, 2.0}, {1.5, 1.5, 1.5});
    CHECK(check_I_bounds(flat, r, 0.1, 10.0, Variant::parabolic).passed);
    const Trajectory high = path({0.0, 1.0, 2.0}, {1.5, 2.5, 1.8});
    const Check c = check_I_bounds(high, r, 0.1, 10.0, Variant::parabolic);
    CHECK_FALSE(c.passed);
    CHECK(c.margin == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(c.witness_t == 1.0);
    const Check ci = check_I_bounds(path({0.0, 1.0}, {0.985, 2.015}), r, 0.1, 0.0, Variant::integral, 0.02);
    CHECK(ci.passed);
    CHECK(ci.margin == doctest::Approx(-0.005).epsilon(1e-9));
  }

  TEST_CASE("envelope check margins") {
    const Grid1D g(-4.0, 4.0, 801);
    const double A = 1.0, x0 = 1.0, b0 = 0.2;
    const Field env = Field::sample(g, [&](double x) { return -A * std::abs(x - x0) + b0; });
    const Check exact = check_envelope({{0.0, env}}, A, x0, b0, 8.0);
    CHECK(exact.passed);
    CHECK(exact.margin == 0.0);
    Field up = env;
    for (auto& v : up.values()) v += 0.1;
    const Check shifted = check_envelope({{0.0, up}}, A, x0, b0, 8.0);
    CHECK_FALSE(shifted.passed);
    CHECK(shifted.margin == doctest::Approx(0.1).epsilon(1e-12));
    // At t = 1 the envelope has risen by C = 8: the shifted datum is far below.
    CHECK(check_envelope({{1.0, up}}, A, x0, b0, 8.0).margin == doctest::Approx(-7.9).epsilon(1e-12));
  }

  TEST_CASE("lower bound check") {
    const Grid1D g(-2.0, 2.0, 401);
    const Field u0 = Field::sample(g, [](double x) { return -std::abs(x); });
    CHECK(check_lower_bound({{0.0, u0}}, 0.0, 1.0, 0.0, 7.0).passed);
    Field low = u0;
    low[100] -= 0.5;
    const Check c = check_lower_bound({{0.0, low}}, 0.0, 1.0, 0.0, 7.0);
    CHECK_FALSE(c.passed);
    CHECK(c.margin == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(c.witness_x == doctest::Approx(g.x(100)));
  }

  TEST_CASE("slope-growth constants and check") {
    ModelConstants k;
    k.K2 = 7.0;
    k.L1 = 0.5;
    k.b_M = 1.5;
    k.B = 1.0;
    const LipschitzGrowth g = lipschitz_growth_constants(k, 9.0, 1.0, 0.2);
    const double C1 = 7.0 * 1.5 + 0.5 * 1.5 * std::exp(1.0);
    CHECK(g.C1 == doctest::Approx(C1));
    CHECK(g.C2 == doctest::Approx(C1 + 0.5 * 9.0 + 0.5 * 7.0));
    CHECK(g.C3 == doctest::Approx(0.5));
    CHECK(g.C4 == doctest::Approx(1.0 + 0.5 - 0.1));
    const Grid1D grid(-2.0, 2.0, 401);
    const Field u = Field::sample(grid, [](double x) { return -std::abs(x); });
    CHECK(check_lipschitz_growth({{0.0, u}}, 0.0, g).passed);
    const Field steep = Field::sample(grid, [](double x) { return -3.0 * std::abs(x); });
    CHECK_FALSE(check_lipschitz_growth({{0.0, steep}}, 0.0, g).passed);
  }

  TEST_CASE("regularizing profile of flat data") {
    const Grid1D g(-2.0, 2.0, 201);
    std::vector<Snapshot> snaps;
    for (double t : {0.0, 0.1, 0.5, 1.0}) snaps.push_back({t, Field(g, 0.0)});
    const RegularizingProfile p = regularizing_profile(snaps, regularizing_height(ModelConstants{}, 1.0), 0.1);
    for (double m : p.max_slope) CHECK(m == 0.0);
    CHECK(p.sup_excess == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(p.witness_t == 1.0);
  }

  TEST_CASE("regularizing profile at the critical slope") {
    const Grid1D g(-1.0, 1.0, 201);
    const double D2 = 10.0;
    std::vector<Snapshot> snaps;
    for (double t : {0.1, 0.2, 0.5, 1.0, 2.0}) {
      snaps.push_back({t, Field::sample(g, [&](double x) {
                         const double v = 3.0 + x / (2.0 * std::sqrt(t));
                         return 2.0 * D2 - v * v;
                       })});
    }
    const RegularizingProfile p = regularizing_profile(snaps, D2, 0.1);
    CHECK(std::abs(p.sup_excess) < 1e-9);
  }

  TEST_CASE("regularizing profile domain error") {
    const Grid1D g(-1.0, 1.0, 11);
    CHECK_THROWS_AS(regularizing_profile({{0.5, Field(g, 30.0)}}, 10.0, 0.1), DomainError);
    CHECK(regularizing_height(ModelConstants{}, 2.0) == doctest::Approx(1.0 + 2.0 * 2.0));
  }

  TEST_CASE("pilot bands") {
    CHECK(check_uniform_band("r", {1.0, 1.2, 0.8}, 1.0, 0.25).passed);
    const Check c = check_uniform_band("r", {1.0, 1.3}, 1.0, 0.25);
    CHECK_FALSE(c.passed);
    CHECK(c.margin == doctest::Approx(0.05));
    CHECK(check_uniform_band("neg", {-0.17, -0.2}, -0.18, 0.25).passed);
    CHECK(check_bounded_by("tv", {0.4, 0.59}, 0.4, 1.5).passed);
    CHECK_FALSE(check_bounded_by("tv", {0.61}, 0.4, 1.5).passed);
  }

  TEST_CASE("total variation of simple paths") {
    const auto ts = linspace(0.0, 5.0, 501);
    std::vector<double> up(ts.size()), flat(ts.size(), 1.5), wave(ts.size());
    for (std::size_t k = 0; k < ts.size(); ++k) {
      up[k] = 1.0 + ts[k] / 5.0;
      wave[k] = 1.5 + 0.1 * std::sin(2.0 * M_PI * ts[k]);
    }
    CHECK(total_variation(path(ts, up), 0.0, 5.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(total_variation(path(ts, flat), 0.1, 5.0) == 0.0);
    CHECK(total_variation(path(ts, wave), 0.0, 5.0) == doctest::Approx(2.0).epsilon(1e-3));
    CHECK(check_bv(path(ts, up), 0.1, 5.0).passed);
    CHECK(check_bv(path(ts, flat), 0.1, 5.0).passed);
    const Trajectory tr = path(ts, wave);
    for (std::size_t k = 0; k + 1 < tr.size(); ++k) CHECK(tr.tv_I_cum[k] <= tr.tv_I_cum[k + 1]);
  }

  TEST_CASE("undersampled oscillation fails the sampling check") {
    const auto ts = linspace(0.0, 5.0, 21);
    std::vector<double> saw(ts.size());
    for (std::size_t k = 0; k < ts.size(); ++k) saw[k] = k % 2 == 0 ? 1.0 : 2.0;
    CHECK_FALSE(check_bv(path(ts, saw), 0.0, 5.0).passed);
  }

  TEST_CASE("one Gaussian concentration") {
    const Grid1D g(-4.0, 4.0, 801);
    const double eps = 0.01;
    const Field u = gaussian_mixture(g, eps, {{1.0, 0.1, 1.5}});
    const double I = exp_integral(u, eps).value;
    CHECK(I == doctest::Approx(1.5).epsilon(1e-9));
    const ConcentrationReport rep = detect_concentrations(u, eps, 20.0 * eps, I);
    REQUIRE(rep.peaks.size() == 1);
    CHECK_FALSE(rep.degenerate);
    CHECK(std::abs(rep.peaks[0].location - 1.0) <= 0.01);
    CHECK(std::abs(rep.peaks[0].mass - 1.5) <= 0.01);
    CHECK(std::abs(rep.peaks[0].width - 0.1) <= 0.005);
    CHECK(std::abs(rep.residual_mass) <= 1e-6 * I);
    CHECK(rep.dominant() == &rep.peaks[0]);
  }

  TEST_CASE("two separated Gaussian concentrations") {
    const Grid1D g(-4.0, 4.0, 801);
    const double eps = 0.01;
    const Field u = gaussian_mixture(g, eps, {{-1.5, 0.1, 1.0}, {1.5, 0.1, 0.5}});
    const double I = exp_integral(u, eps).value;
    const ConcentrationReport rep = detect_concentrations(u, eps, 20.0 * eps, I);
    REQUIRE(rep.peaks.size() == 2);
    CHECK(rep.peaks[0].location == doctest::Approx(-1.5).epsilon(0.01));
    CHECK(rep.peaks[1].location == doctest::Approx(1.5).epsilon(0.01));
    CHECK(std::abs(rep.peaks[0].mass - 1.0) <= 0.01);
    CHECK(std::abs(rep.peaks[1].mass - 0.5) <= 0.01);
    CHECK(std::abs(rep.residual_mass) <= 1e-6 * I);
    CHECK(rep.dominant()->location == doctest::Approx(-1.5).epsilon(0.01));
    for (const auto& p : rep.peaks) CHECK(p.width > 0.0);
  }

  TEST_CASE("flat data are a degenerate plateau") {
    const Grid1D g(-4.0, 4.0, 81);
    const ConcentrationReport rep = detect_concentrations(Field(g, 0.0), 0.1, 2.0, 8.0);
    CHECK(rep.degenerate);
    REQUIRE(rep.peaks.size() == 1);
    CHECK(rep.peaks[0].location == doctest::Approx(0.0).epsilon(1e-12));
  }

  TEST_CASE("support of a concentrated Gaussian") {
    const Grid1D g(-4.0, 4.0, 801);
    const double eps = 0.01;
    const Field u = gaussian_mixture(g, eps, {{1.0, 0.1, 1.5}});
    const double I = exp_integral(u, eps).value;
    const Check c = check_support(u, eps, I, 1e-3);
    CHECK(c.passed);
    // The nodes counted lie beyond |x - 1| = cut, where n = exp(-20); a nodal
    // sum of the decaying Gaussian tail is bracketed by the exact tail mass
    // beyond cut + h and beyond cut - h.
    const double sd = 0.1;
    const double cut = sd * std::sqrt(2.0 * (20.0 + std::log(1.5 / (sd * std::sqrt(2.0 * M_PI)))));
    auto tail = [&](double r) { return 1.5 * std::erfc(r / (sd * std::sqrt(2.0))); };
    CHECK(c.value >= tail(cut + g.spacing()));
    CHECK(c.value <= tail(cut - g.spacing()));
  }

  TEST_CASE("support of a uniform density") {
    const Grid1D g(-4.0, 4.0, 801);
    const double eps = 0.1;
    const Field u(g, eps * std::log(0.5));
    const Check c = check_support(u, eps, 4.0, 1e-3);
    CHECK(c.passed);
    CHECK(c.value == 0.0);
  }

  TEST_CASE("suppressed side bump fails the support check") {
    // A side bump sitting 10 delta below the main plateau and carrying 5% of the
    // mass. With delta = 20 eps such a bump would be e^-200 times lower than
    // the plateau and could carry no mass, so the construction uses delta = eps / 10.
    const Grid1D g(-4.0, 4.0, 801);
    const double eps = 0.05;
    const double delta = eps / 10.0;
    Field u(g, -50.0);
    for (std::size_t i = 390; i <= 410; ++i) u[i] = 0.0;
    for (std::size_t i = 600; i <= 602; ++i) u[i] = -10.0 * delta;
    const double I = exp_integral(u, eps).value;
    const double bump = 3 * g.spacing() * std::exp(-1.0);
    CHECK(bump / I == doctest::Approx(0.05).epsilon(0.02));
    const Check c = check_support(u, eps, I, 1e-3, delta);
    CHECK_FALSE(c.passed);
    CHECK(c.value == doctest::Approx(bump).epsilon(1e-12));
    CHECK(c.witness_x == doctest::Approx(2.0).epsilon(0.02));
    // The default threshold does not see the bump at all.
    CHECK(check_support(u, eps, I, 1e-3).passed);
  }

  TEST_CASE("time modulus") {
    const Grid1D g(-2.0, 4.0, 121);
    const Field base = Field::sample(g, [](double x) { return -std::abs(x - 1.0); });
    std::vector<Snapshot> still, drift, fast;
    for (int k = 0; k <= 40; ++k) {
      const double t = 1.0 + 0.1 * k;
      still.push_back({t, base});
      Field d = base, f = base;
      for (auto& v : d.values()) v += 0.7 * t;
      for (auto& v : f.values()) v += 1.2 * t;
      drift.push_back({t, d});
      fast.push_back({t, f});
    }
    const Check s = check_time_modulus(still, 1.0, 5.0, 1.0, 2.0, 1.0, 0.0);
    CHECK(s.passed);
    CHECK(s.margin <= 0.0);
    CHECK(check_time_modulus(drift, 1.0, 5.0, 1.0, 2.0, 1.0, 0.0).passed);
    const Check f = check_time_modulus(fast, 1.0, 5.0, 1.0, 2.0, 1.0, 0.0);
    CHECK_FALSE(f.passed);
    CHECK(f.margin == doctest::Approx(0.2 * 4.0).epsilon(1e-9));
    CHECK(observed_time_rate(drift, 1.0, 5.0, 1.0, 2.0) == doctest::Approx(0.7).epsilon(1e-9));
    std::vector<Snapshot> sparse = {{1.0, base}, {3.0, base}, {5.0, base}};
    CHECK_THROWS_AS(check_time_modulus(sparse, 1.0, 5.0, 1.0, 2.0, 1.0, 0.0), std::invalid_argument);
  }

  TEST_CASE("sweep comparison against stub members") {
    const Grid1D g(-4.0, 4.0, 801);
    const double T = 2.0;
    RunResult ref;
    for (int k = 0; k <= 20; ++k) {
      const double t = 0.1 * k;
      ref.trajectory.append(t, 2.0 - std::exp(-t), 0.0, 0.0, std::nan(""));
      if (k % 5 == 0 || k == 20)
        ref.snapshots.push_back({t, Field::sample(g, [t](double x) { return -(1.0 + t) * (x - 1.0) * (x - 1.0); })});
    }
    ref.trajectory.finalize();

    ComparisonOptions opts;
    opts.x0 = 1.0;
    opts.T = T;

    SUBCASE("identical runs give zero errors") {
      const ConvergenceReport rep = compare_to_reference({SweepMember{0.1, ref, std::nullopt}}, ref, opts);
      CHECK(rep.e_u[0] == 0.0);
      CHECK(rep.e_I[0] == 0.0);
      CHECK(rep.max_u[0] == 0.0);
      CHECK(rep.checks.empty());
    }

    SUBCASE("constant offset eps gives e_u = eps") {
      std::vector<SweepMember> members;
      for (double eps : {0.1, 0.05, 0.025}) {
        RunResult r = ref;
        for (auto& s : r.snapshots)
          for (auto& v : s.u.values()) v += eps;
        members.push_back({eps, r, std::nullopt});
      }
      const ConvergenceReport rep = compare_to_reference(members, ref, opts);
      for (std::size_t k = 0; k < 3; ++k) CHECK(rep.e_u[k] == doctest::Approx(members[k].eps).epsilon(1e-12));
      const Check* c = rep.find("e_u_nonincreasing");
      REQUIRE(c != nullptr);
      CHECK(c->passed);
      CHECK(rep.find("width_slope") != nullptr);
    }

    SUBCASE("eps list must decrease") {
      CHECK_THROWS_AS(compare_to_reference({SweepMember{0.05, ref, std::nullopt}, SweepMember{0.1, ref, std::nullopt}},
                                           ref, opts),
                      std::invalid_argument);
    }
  }

  TEST_CASE("sweep member failures name the offending eps") {
    SweepSetup setup;
    setup.model = make_catalog_model("M1");
    setup.grid = Grid1D(-4.0, 4.0, 201);
    setup.eps_list = {0.1, 0.05};
    setup.T = 0.1;
    setup.range = NutrientRange{1.0588235294117647, 2.0};
    setup.I0 = 5.0;
    try {
      run_members(setup);
      FAIL("expected a member failure");
    } catch (const SweepMemberError& e) {
      CHECK(e.eps() == 0.1);
      CHECK_THROWS_AS(std::rethrow_exception(e.cause()), InitializationError);
    }
  }

  TEST_CASE("parallel members reproduce sequential members exactly") {
    SweepSetup setup;
    setup.model = make_catalog_model("M1");
    setup.grid = Grid1D(-4.0, 4.0, 201);
    setup.eps_list = {0.1, 0.07, 0.05};
    setup.T = 0.3;
    const auto seq = run_members(setup);
    setup.jobs = 3;
    const auto par = run_members(setup);
    REQUIRE(seq.size() == par.size());
    for (std::size_t k = 0; k < seq.size(); ++k) {
      CHECK(seq[k].eps == par[k].eps);
      CHECK(trajectory_csv(seq[k].run.trajectory, false) == trajectory_csv(par[k].run.trajectory, false));
    }
  }

  TEST_CASE("calibration round trip") {
    Calibration c;
    c.set("M1.parabolic.nutrient_c", 1.0);
    c.set("M1.parabolic.regularizing_sup", -0.17316853624070097);
    const Calibration back = Calibration::parse(c.serialize());
    CHECK(back.values() == c.values());
    CHECK(back.get("M1.parabolic.regularizing_sup") == -0.17316853624070097);
    CHECK_THROWS_AS(back.get("missing"), ConfigError);
    CHECK_THROWS_AS(Calibration::parse("a = 1\na = 2\n"), ConfigError);
    CHECK_THROWS_AS(Calibration::parse("a = one\n"), ConfigError);
    CHECK(Calibration::parse("# only a comment\n\n").values().empty());

    const auto dir = std::filesystem::temp_directory_path() / "selmut_calibration_test";
    std::filesystem::create_directories(dir);
    const std::string file = (dir / "cal.txt").string();
    c.save(file);
    CHECK(Calibration::load(file).values() == c.values());
    CHECK_FALSE(std::filesystem::exists(file + ".tmp"));
    std::filesystem::remove_all(dir);
  }
}
