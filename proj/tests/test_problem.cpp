#include <doctest.h>

#include <cmath>

#include "xfrac/driver.hpp"
#include "xfrac/errors.hpp"
#include "xfrac/problem.hpp"

using namespace xfrac;

TEST_CASE("exact bar solution") {
  const double l0 = 1.0 / 80.0;
  CHECK(std::abs(exact_bar_solution(-1.0, l0).u) <= 1e-16);
  CHECK(std::abs(exact_bar_solution(1.0, l0).u) <= 1e-16);
  CHECK(exact_bar_solution(0.0, l0).phi == 1.0);
  // displacement jump across the crack
  const double jump =
      exact_bar_solution(0.0, l0).u - exact_bar_solution(-1e-300, l0).u;
  CHECK(jump == doctest::Approx(2.0 / M_PI).epsilon(1e-12));
}

TEST_CASE("relative l2 metric") {
  std::vector<double> exact(201), pred(201);
  for (int i = 0; i < 201; ++i) {
    const double x = -1.0 + 0.01 * i;
    exact[i] = std::sin(3.0 * x) + 0.2;
    pred[i] = exact[i];
  }
  CHECK(relative_l2(pred, exact) == 0.0);
  for (int i = 0; i < 201; ++i) pred[i] = 1.01 * exact[i];
  CHECK(relative_l2(pred, exact) == doctest::Approx(1.0).epsilon(1e-12));

  // constant-offset cross-check against a direct sum
  const double c = 0.05;
  for (int i = 0; i < 201; ++i) pred[i] = exact[i] + c;
  double nn = 0.0, dd = 0.0;
  for (int i = 0; i < 201; ++i) {
    nn += c * c;
    dd += exact[i] * exact[i];
  }
  CHECK(relative_l2(pred, exact) ==
        doctest::Approx(100.0 * std::sqrt(nn / dd)).epsilon(1e-12));

  std::vector<double> zeros(201, 0.0);
  CHECK_THROWS_AS(relative_l2(pred, zeros), NumericalError);
}

TEST_CASE("preset invariants") {
  const ProblemSpec bar = make_preset(Preset::kBar1d, 4);
  CHECK(bar.material.ell_0 == doctest::Approx(1.0 / 80.0));
  CHECK(bar.network_layers == std::vector<int>{1, 10, 10, 10, 2});
  CHECK(bar.activation == Activation::kTanh);
  CHECK(bar.n_steps == 1);
  bar.validate();

  const ProblemSpec sen = make_preset(Preset::kSenTension, 4);
  CHECK(sen.material.g_c == doctest::Approx(2.7e-3));
  CHECK(sen.material.ell_0 == doctest::Approx(0.0125));
  CHECK(sen.gauss_per_axis == 2);
  CHECK(sen.interface_points == std::vector<int>(4, 1600));
  sen.validate();

  const ProblemSpec hole = make_preset(Preset::kEccentricHole, 8);
  CHECK(hole.activation == Activation::kSwish);
  CHECK(hole.hole.has_value());
  CHECK(hole.material.ell_0 == doctest::Approx(0.02));
  hole.validate();
}

TEST_CASE("body force is the bar's sinusoidal load only") {
  const ProblemSpec bar = make_preset(Preset::kBar1d, 2);
  CHECK(bar.body_force({0.5, 0.0})[0] == doctest::Approx(std::sin(M_PI * 0.5)));
  const ProblemSpec sen = make_preset(Preset::kSenTension, 4);
  CHECK(sen.body_force({0.5, 0.5})[0] == 0.0);
  CHECK(sen.body_force({0.5, 0.5})[1] == 0.0);
}

TEST_CASE("initial history seeds the crack geometry") {
  const ProblemSpec bar = make_preset(Preset::kBar1d, 2);
  CHECK(bar.initial_history({0.0, 0.0}) == 1000.0);
  CHECK(bar.initial_history({bar.material.ell_0 * 0.999, 0.0}) == 1000.0);
  CHECK(bar.initial_history({0.5, 0.0}) == 0.0);

  const ProblemSpec sen = make_preset(Preset::kSenTension, 4);
  // on the seeded segment
  const double peak = sen.history_b * sen.material.g_c / (2.0 * sen.material.ell_0);
  CHECK(sen.initial_history({0.25, 0.5}) == doctest::Approx(peak));
  // past the tip the ramp decays with distance to the tip
  CHECK(sen.initial_history({0.5 + sen.material.ell_0 / 4.0, 0.5}) ==
        doctest::Approx(peak * 0.5));
  CHECK(sen.initial_history({0.9, 0.9}) == 0.0);

  const ProblemSpec hole = make_preset(Preset::kEccentricHole, 4);
  CHECK(hole.initial_history({0.3, 0.3}) == 0.0);
}

TEST_CASE("zero steps yield an empty run") {
  ProblemSpec spec = make_preset(Preset::kSenTension, 4);
  spec.n_steps = 0;
  spec.elements_per_subdomain.assign(4, 2);
  spec.interface_points.assign(4, 8);
  spec.network_layers = {2, 4, 4, 3};
  Solver solver(spec);
  const RunResult r = solver.run();
  CHECK(r.steps.empty());
  CHECK(!r.aborted);
}

TEST_CASE("reaction force contracts") {
  ProblemSpec spec = make_preset(Preset::kSenTension, 4);
  spec.elements_per_subdomain.assign(4, 3);
  spec.interface_points.assign(4, 8);
  spec.network_layers = {2, 4, 4, 3};
  Mesh mesh = build_mesh(mesh_spec(spec));
  std::vector<NetworkParams> nets;
  for (int s = 0; s < 4; ++s)
    nets.push_back(init_xavier(spec.network_layers, spec.activation, spec.scale_c, s + 1));
  BodyForceFn<2> body = [](const std::array<double, 2>&) {
    return std::array<double, 2>{0.0, 0.0};
  };
  EnergySystem<2> sys(&mesh, std::move(nets), spec.material, spec.ansatz(), body);

  SUBCASE("zero displacement means zero force") {
    std::vector<double> flat(sys.num_params(), 0.0);
    sys.scatter_params(flat);
    sys.set_applied_displacement(0.0);
    const double f = reaction_force(sys, {0.0, 1.0}, {1.0, 1.0});
    CHECK(std::abs(f) <= 1e-14);
  }

  SUBCASE("uniform uniaxial stretch matches the closed form") {
    // v = y * ubar through the ansatz with zero networks: eps_yy = ubar,
    // sigma_yy = (lambda + 2 mu) ubar on the whole edge
    std::vector<double> flat(sys.num_params(), 0.0);
    sys.scatter_params(flat);
    const double ubar = 1e-3;
    sys.set_applied_displacement(ubar);
    const double f = reaction_force(sys, {0.0, 1.0}, {1.0, 1.0});
    const double expected = (spec.material.lambda + 2.0 * spec.material.mu) * ubar * 1.0;
    CHECK(f == doctest::Approx(expected).epsilon(1e-8));
  }

  SUBCASE("an edge off the boundary is rejected") {
    CHECK_THROWS_AS(reaction_force(sys, {0.0, 0.5}, {1.0, 0.5}), GeometryError);
    CHECK_THROWS_AS(reaction_force(sys, {0.2, 0.2}, {0.8, 0.9}), GeometryError);
  }
}

TEST_CASE("validation rejects bad specs") {
  ProblemSpec spec = make_preset(Preset::kSenTension, 4);
  spec.delta_u = 0.0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);

  spec = make_preset(Preset::kBar1d, 4);
  spec.n_steps = 3;
  CHECK_THROWS_AS(spec.validate(), ConfigError);

  spec = make_preset(Preset::kBar1d, 4);
  spec.network_layers = {1, 10, 3};  // wrong output width
  CHECK_THROWS_AS(spec.validate(), ConfigError);
}
