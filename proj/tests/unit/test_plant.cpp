#include <doctest.h>

#include <cmath>
#include <random>

#include "extrudesim/plant.hpp"

using namespace extrude;

TEST_CASE("reference signals") {
  SUBCASE("constant has zero derivative") {
    const auto s = ReferenceSignal::constant(5.0).eval(12.0);
    CHECK(s.value == 5.0);
    CHECK(s.derivative == 0.0);
  }
  SUBCASE("ramp before the hold") {
    const auto s = ReferenceSignal::ramp_to_hold(0.0, 2.0, 3.0).eval(1.0);
    CHECK(s.value == doctest::Approx(2.0));
    CHECK(s.derivative == doctest::Approx(2.0));
  }
  SUBCASE("ramp after the hold") {
    const auto s = ReferenceSignal::ramp_to_hold(1.0, 2.0, 3.0).eval(5.0);
    CHECK(s.value == doctest::Approx(7.0));
    CHECK(s.derivative == 0.0);
  }
  SUBCASE("sinusoid at t = 0") {
    const auto s = ReferenceSignal::sinusoid(1.0, 0.5, 2.0).eval(0.0);
    CHECK(s.value == doctest::Approx(2.0));
    CHECK(s.derivative == doctest::Approx(0.5));
  }
  SUBCASE("piecewise-linear takes the right-hand slope at a knot") {
    const auto r = ReferenceSignal::piecewise_linear({{0.0, 0.0}, {1.0, 2.0}, {3.0, 2.0}});
    CHECK(r.eval(0.5).value == doctest::Approx(1.0));
    CHECK(r.eval(1.0).derivative == 0.0);
    CHECK(r.eval(0.999).derivative == doctest::Approx(2.0));
    CHECK(r.eval(10.0).value == doctest::Approx(2.0));
    CHECK(r.eval(10.0).derivative == 0.0);
  }
  SUBCASE("unsorted knots are rejected") {
    CHECK_THROWS_AS(ReferenceSignal::piecewise_linear({{1.0, 0.0}, {0.5, 1.0}}),
                    std::invalid_argument);
  }
}

TEST_CASE("reference derivative matches a central difference away from breakpoints") {
  const std::vector<ReferenceSignal> refs = {
      ReferenceSignal::ramp_to_hold(0.3, -0.7, 4.0),
      ReferenceSignal::sinusoid(1.3, 2.1, -0.4, 0.25),
      ReferenceSignal::piecewise_linear({{0.0, 1.0}, {2.0, -1.0}, {5.0, 3.0}}),
  };
  const std::vector<double> breaks = {0.0, 2.0, 4.0, 5.0};
  const double h = 1e-6;
  for (const auto& r : refs) {
    for (double t = 0.01; t < 8.0; t += 0.0731) {
      bool near_break = false;
      for (double b : breaks) near_break = near_break || std::abs(t - b) < 2 * h;
      if (near_break) continue;
      const double fd = (r.eval(t + h).value - r.eval(t - h).value) / (2 * h);
      const double d = r.eval(t).derivative;
      CHECK(std::abs(fd - d) <= 1e-6 * (1.0 + std::abs(d)));
    }
  }
}

TEST_CASE("quadratic pulse") {
  const auto d = DisturbanceProfile::quadratic_pulse(1.0, 30.0, 60.0);
  CHECK(d.eval(45.0) == doctest::Approx(1.0));
  CHECK(d.eval(30.0) == 0.0);
  CHECK(d.eval(60.0) == 0.0);
  CHECK(d.eval(20.0) == 0.0);
  CHECK(d.onset() == 30.0);
  CHECK_THROWS_AS(DisturbanceProfile::quadratic_pulse(1.0, 60.0, 30.0), std::invalid_argument);
}

TEST_CASE("quadratic pulse peak equals the amplitude on a fine grid") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    const double amp = -3.0 + 6.0 * u(rng);
    const double t0 = 10.0 * u(rng);
    const double t1 = t0 + 0.5 + 20.0 * u(rng);
    const auto d = DisturbanceProfile::quadratic_pulse(amp, t0, t1);
    const int n = 10000;
    const double step = (t1 - t0) / n;
    double best = 0.0, t_best = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double t = t0 + step * i;
      if (std::abs(d.eval(t)) > best) best = std::abs(d.eval(t)), t_best = t;
    }
    CHECK(best == doctest::Approx(std::abs(amp)).epsilon(1e-6));
    CHECK(std::abs(t_best - 0.5 * (t0 + t1)) <= step);
  }
}

TEST_CASE("custom samples interpolate and vanish outside their span") {
  const auto d = DisturbanceProfile::custom_samples({1.0, 2.0, 4.0}, {0.0, 1.0, -1.0});
  CHECK(d.eval(0.5) == 0.0);
  CHECK(d.eval(1.5) == doctest::Approx(0.5));
  CHECK(d.eval(3.0) == doctest::Approx(0.0));
  CHECK(d.eval(4.0) == doctest::Approx(-1.0));
  CHECK(d.eval(4.5) == 0.0);
  CHECK(d.onset() == 1.0);
  CHECK_FALSE(DisturbanceProfile::zero().onset().has_value());
}

TEST_CASE("plant derivatives") {
  const PlantParams p{-1.0, 1.0, -1.0, 1.0, 1.0};
  const auto z = plant_derivatives(p, 0, 0, 0, 0, 0, 0);
  CHECK(z.dx1 == 0.0);
  CHECK(z.dx2 == 0.0);
  const auto r = plant_derivatives(p, 2, 1, 3, -1, 0.5, 0);
  CHECK(r.dx1 == doctest::Approx(1.5));
  CHECK(r.dx2 == doctest::Approx(0.0));
  const PlantParams q{-2.0, 4.0, -1.0, 0.0, 1.0};
  CHECK(plant_derivatives(q, 1, 0, 0.5, 0, 0, 0).dx1 == 0.0);
}

TEST_CASE("plant derivatives are linear in state, inputs and disturbances") {
  std::mt19937_64 rng(11);
  // Dyadic values keep every product and sum exact in binary floating point.
  std::uniform_int_distribution<int> ui(-64, 64);
  auto dy = [&] { return ui(rng) / 8.0; };
  for (int k = 0; k < 200; ++k) {
    const PlantParams p{-std::abs(dy()) - 0.125, std::abs(dy()) + 0.125, -std::abs(dy()) - 0.125,
                        dy(), std::abs(dy()) + 0.125};
    double v[6], w[6];
    for (int i = 0; i < 6; ++i) v[i] = dy(), w[i] = dy();
    const double alpha = 2.0;
    auto f = [&](const double* x) { return plant_derivatives(p, x[0], x[1], x[2], x[3], x[4], x[5]); };
    double av[6], vw[6];
    for (int i = 0; i < 6; ++i) av[i] = alpha * v[i], vw[i] = v[i] + w[i];
    CHECK(f(av).dx1 == alpha * f(v).dx1);
    CHECK(f(av).dx2 == alpha * f(v).dx2);
    CHECK(f(vw).dx1 == f(v).dx1 + f(w).dx1);
    CHECK(f(vw).dx2 == f(v).dx2 + f(w).dx2);
  }
}

TEST_CASE("plant invariants") {
  CHECK(PlantParams{-1, 1, -1, 0, 1}.valid());
  CHECK_FALSE(PlantParams{1, 1, -1, 0, 1}.valid());
  CHECK_FALSE(PlantParams{-1, 1, 0, 0, 1}.valid());
  CHECK_FALSE(PlantParams{-1, 0, -1, 0, 1}.valid());
  CHECK_FALSE(PlantParams{-1, 1, -1, 0, -1}.valid());
  CHECK_FALSE(PlantParams{-1, 1, -1, NAN, 1}.valid());
  CHECK_THROWS_AS(PlantParams({1, 1, -1, 0, 1}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(BoundsSpec({-1, 0, 0, 0, 0, 0}).validate(), std::invalid_argument);
}

namespace {

std::vector<Violation> check(const BoundsSpec& b, const ReferenceSignal& x1r,
                             const DisturbanceProfile& eta1) {
  const auto x2r = ReferenceSignal::constant(0.0);
  const auto zero = DisturbanceProfile::zero();
  return validate_scenario({-1, 1, -1, 0, 1}, b, SignalSet{x1r, x2r, eta1, zero}, 90.0, 1e-3);
}

}  // namespace

TEST_CASE("scenario validation") {
  BoundsSpec b{2.0, 0.0, 3.0, 1.0, 0.0, 0.0};
  SUBCASE("pulse inside its bound") {
    CHECK(check(b, ReferenceSignal::constant(1.0), DisturbanceProfile::quadratic_pulse(1, 30, 60))
              .empty());
  }
  SUBCASE("pulse at exactly its bound is accepted") {
    CHECK(check(b, ReferenceSignal::constant(1.0), DisturbanceProfile::quadratic_pulse(2, 30, 60))
              .empty());
  }
  SUBCASE("constant reference above its bound violates from t = 0") {
    const auto v = check(b, ReferenceSignal::constant(5.0), DisturbanceProfile::zero());
    REQUIRE(v.size() == 1);
    CHECK(v[0].signal == "x1r");
    CHECK(v[0].t_first == 0.0);
    CHECK(v[0].t_last == doctest::Approx(90.0));
    CHECK(v[0].worst == 5.0);
  }
  SUBCASE("ramp slope above the derivative bound") {
    const auto v = check(b, ReferenceSignal::ramp_to_hold(0.0, 2.0, 1.0), DisturbanceProfile::zero());
    REQUIRE(v.size() == 1);
    CHECK(v[0].signal == "x1r_dot");
    CHECK(v[0].t_last < 1.0);
  }
  SUBCASE("separate excursions are reported as separate runs") {
    const auto d = DisturbanceProfile::custom_samples({10, 11, 12, 20, 21, 22}, {0, 3, 0, 0, 3, 0});
    const auto v = check(b, ReferenceSignal::constant(0.0), d);
    REQUIRE(v.size() == 2);
    CHECK(v[0].t_first < 12.0);
    CHECK(v[1].t_first > 20.0);
  }
  SUBCASE("declared per-signal bounds are enforced too") {
    const ReferenceSignal r(ReferenceSignal::Constant{1.0}, DeclaredBounds{0.5, 0.0});
    const auto v = check(b, r, DisturbanceProfile::zero());
    REQUIRE(v.size() == 1);
    CHECK(v[0].signal == "x1r(declared)");
  }
  SUBCASE("invalid plant is a config violation, not an exception") {
    const auto r = ReferenceSignal::constant(0.0);
    const auto z = DisturbanceProfile::zero();
    const auto v = validate_scenario({1, 1, -1, 0, 1}, b, SignalSet{r, r, z, z}, 10.0, 0.01);
    REQUIRE(v.size() == 1);
    CHECK(v[0].signal == "config");
  }
}

TEST_CASE("plant sampling") {
  const PlantParams nominal{-1.0, 2.0, -0.5, 0.3, 1.5};
  SUBCASE("no distribution returns copies") {
    const auto s = sample_plant(UncertaintySampler{}, nominal, 3);
    REQUIRE(s.size() == 3);
    for (const auto& p : s) CHECK(p == nominal);
  }
  SUBCASE("uniform stays within its support") {
    UncertaintySampler u;
    u.a1 = {ParamDistribution::Kind::uniform, 0.1};
    for (const auto& p : sample_plant(u, nominal, 500)) {
      CHECK(p.a1 >= -1.1);
      CHECK(p.a1 <= -0.9);
      CHECK(p.b1 == nominal.b1);
    }
  }
  SUBCASE("rejection keeps the invariants under a wide gaussian") {
    UncertaintySampler g;
    g.a1 = {ParamDistribution::Kind::gaussian, 5.0};
    const PlantParams edge{-0.01, 1, -1, 0, 1};
    try {
      for (const auto& p : sample_plant(g, edge, 200)) CHECK(p.a1 < 0.0);
    } catch (const ResampleCapExceeded&) {
      // Also an accepted outcome.
    }
  }
  SUBCASE("unreachable invariants hit the resample cap") {
    UncertaintySampler u;
    u.a2 = {ParamDistribution::Kind::uniform, 0.5};
    // a2 = +1 perturbed by at most 50% never turns negative.
    CHECK_THROWS_AS(sample_plant(u, PlantParams{-1, 1, 1, 0, 1}, 1), ResampleCapExceeded);
  }
  SUBCASE("same seed, same sequence") {
    const auto u = UncertaintySampler::all({ParamDistribution::Kind::gaussian, 0.2}, 42);
    const auto a = sample_plant(u, nominal, 50);
    const auto b = sample_plant(u, nominal, 50);
    CHECK(a == b);
    auto v = u;
    v.seed = 43;
    CHECK(sample_plant(v, nominal, 50) != a);
  }
}
