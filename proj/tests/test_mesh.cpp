#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "xfrac/errors.hpp"
#include "xfrac/mesh.hpp"
#include "xfrac/problem.hpp"

using namespace xfrac;

namespace {

MeshSpec unit_square_spec(int per_axis = 4, int gauss = 2) {
  MeshSpec s;
  s.dim = 2;
  s.domain = {{0.0, 0.0}, {1.0, 1.0}};
  s.boxes = {{{0.0, 0.0}, {0.5, 0.5}},
             {{0.5, 0.0}, {1.0, 0.5}},
             {{0.0, 0.5}, {0.5, 1.0}},
             {{0.5, 0.5}, {1.0, 1.0}}};
  s.elements_per_axis = {per_axis, per_axis, per_axis, per_axis};
  s.gauss_per_axis = gauss;
  s.interface_points_per_subdomain = {160, 160, 160, 160};
  return s;
}

double total_weight(const Mesh& mesh) {
  double w = 0.0;
  for (const auto& sub : mesh.subdomains)
    for (const auto& e : sub.elements)
      for (const auto& q : e.points) w += q.w;
  return w;
}

}  // namespace

TEST_CASE("gauss-legendre two-point rule") {
  std::vector<double> n, w;
  gauss_legendre(2, n, w);
  CHECK(n[0] == doctest::Approx(-1.0 / std::sqrt(3.0)).epsilon(1e-15));
  CHECK(n[1] == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-15));
  CHECK(w[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(w[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("gauss rules integrate their exactness degree") {
  // n-point rule integrates monomials up to degree 2n-1 exactly
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int n = 2; n <= 4; ++n) {
    for (int trial = 0; trial < 5; ++trial) {
      double a = u(rng), b = a + std::abs(u(rng)) + 0.3;
      Box box{{a, 0.0}, {b, 0.0}};
      std::uint64_t next_id = 0;
      const auto pts = gauss_points(box, 1, n, std::nullopt, next_id);
      for (int deg = 0; deg <= 2 * n - 1; ++deg) {
        double quad = 0.0;
        for (const auto& q : pts) quad += q.w * std::pow(q.x[0], deg);
        const double exact =
            (std::pow(b, deg + 1) - std::pow(a, deg + 1)) / (deg + 1);
        CHECK(std::abs(quad - exact) <= 1e-12 * (1.0 + std::abs(exact)));
      }
    }
  }
}

TEST_CASE("weights sum to the element measure") {
  std::uint64_t id = 0;
  const auto pts1 = gauss_points({{0.0, 0.0}, {1.0, 0.0}}, 1, 3, std::nullopt, id);
  double w = 0.0;
  for (const auto& q : pts1) w += q.w;
  CHECK(w == doctest::Approx(1.0).epsilon(1e-14));

  const auto pts2 = gauss_points({{0.2, 0.1}, {0.7, 0.9}}, 2, 2, std::nullopt, id);
  w = 0.0;
  for (const auto& q : pts2) w += q.w;
  CHECK(w == doctest::Approx(0.5 * 0.8).epsilon(1e-14));
}

TEST_CASE("bar partitions expose the expected interfaces") {
  const ProblemSpec two = make_preset(Preset::kBar1d, 2);
  const Mesh m2 = build_mesh(mesh_spec(two));
  REQUIRE(m2.interfaces.size() == 1);
  CHECK(m2.interfaces[0].p0[0] == doctest::Approx(0.0));
  CHECK(m2.interfaces[0].points.size() == 1);

  const ProblemSpec four = make_preset(Preset::kBar1d, 4);
  const Mesh m4 = build_mesh(mesh_spec(four));
  CHECK(m4.interfaces.size() == 3);
  // initial quadrature totals follow the published schedule
  CHECK(m4.subdomain_points(0) == 100);
  CHECK(m4.subdomain_points(1) == 250);
  CHECK(m4.subdomain_points(2) == 250);
  CHECK(m4.subdomain_points(3) == 100);
}

TEST_CASE("unit square 2x2 partition has four interior interface segments") {
  const Mesh mesh = build_mesh(unit_square_spec());
  CHECK(mesh.interfaces.size() == 4);
  // every segment touches the center point
  for (const auto& seg : mesh.interfaces) {
    const bool touches_center =
        (std::abs(seg.p0[0] - 0.5) < 1e-12 && std::abs(seg.p0[1] - 0.5) < 1e-12) ||
        (std::abs(seg.p1[0] - 0.5) < 1e-12 && std::abs(seg.p1[1] - 0.5) < 1e-12);
    CHECK(touches_center);
    CHECK(seg.points.size() == 80);  // 160 per subdomain over 2 interfaces
  }
}

TEST_CASE("twelve-subdomain preset uses the published element counts") {
  const ProblemSpec s = make_preset(Preset::kSenTension, 12);
  const Mesh mesh = build_mesh(mesh_spec(s));
  std::multiset<std::size_t> counts;
  for (const auto& sub : mesh.subdomains) counts.insert(sub.elements.size());
  CHECK(counts.count(36) == 4);   // 6^2
  CHECK(counts.count(64) == 4);   // 8^2
  CHECK(counts.count(196) == 4);  // 14^2
}

TEST_CASE("gapped or overlapping boxes are rejected") {
  MeshSpec s = unit_square_spec();
  s.boxes[3] = {{0.5, 0.5}, {0.9, 1.0}};  // gap
  CHECK_THROWS_AS(build_mesh(s), GeometryError);
  s = unit_square_spec();
  s.boxes[3] = {{0.4, 0.5}, {1.0, 1.0}};  // overlap
  CHECK_THROWS_AS(build_mesh(s), GeometryError);
}

TEST_CASE("hole masking zeroes weights and tracks the masked measure") {
  const ProblemSpec s = make_preset(Preset::kEccentricHole, 4);
  const Mesh mesh = build_mesh(mesh_spec(s));

  // Monte-Carlo oracle for the masked area
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n_mc = 4000000;
  int inside = 0;
  for (int i = 0; i < n_mc; ++i)
    if (!s.hole->contains({u(rng), u(rng)})) ++inside;
  const double mc_measure = static_cast<double>(inside) / n_mc;

  const double quad_measure = total_weight(mesh);
  CHECK(quad_measure ==
        doctest::Approx(mc_measure).epsilon(0.02));  // quadrature-mask resolution

  for (const auto& sub : mesh.subdomains)
    for (const auto& e : sub.elements)
      for (const auto& q : e.points)
        if (s.hole->contains(q.x)) {
          CHECK(!q.inside_domain);
          CHECK(q.w == 0.0);
        }
}

TEST_CASE("no-hole coverage is exact") {
  const Mesh mesh = build_mesh(unit_square_spec());
  CHECK(total_weight(mesh) == doctest::Approx(1.0).epsilon(1e-10));
}

namespace {

RefineOptions default_opts() { return {0.2, 25.0, 4}; }

StressField zero_stress() {
  return [](const std::array<double, 2>&) { return std::array<double, 3>{0, 0, 0}; };
}

ScalarField zero_field() {
  return [](const std::array<double, 2>&) { return 0.0; };
}

}  // namespace

TEST_CASE("no refinement triggers on a clean state") {
  Mesh mesh = build_mesh(unit_square_spec());
  const auto before = mesh.total_points();
  const RefineReport rep =
      refine(mesh, zero_field(), zero_stress(), zero_field(), default_opts());
  CHECK(rep.refined.empty());
  CHECK(mesh.total_points() == before);
}

TEST_CASE("phase-driven refinement stays local to the crack profile") {
  const ProblemSpec s = make_preset(Preset::kBar1d, 4);
  Mesh mesh = build_mesh(mesh_spec(s));
  const double l0 = s.material.ell_0;
  ScalarField phi = [l0](const std::array<double, 2>& x) {
    return std::exp(-std::abs(x[0]) / l0);
  };

  const auto before = mesh.total_points();
  const RefineReport rep = refine(mesh, phi, zero_stress(), zero_field(), default_opts());
  CHECK(!rep.refined.empty());
  CHECK(mesh.total_points() > before);

  const double support = l0 * std::log(1.0 / 0.2);
  for (const auto& r : rep.refined) {
    CHECK(r.phi_triggered);
    // refined element must intersect the superthreshold band
    CHECK(r.parent_box.lo[0] <= support + 1e-12);
    CHECK(r.parent_box.hi[0] >= -support - 1e-12);
    CHECK((r.subdomain == 1 || r.subdomain == 2));
  }

  // children tile the parent and bump the level by one
  for (const auto& r : rep.refined) {
    CHECK(r.child_ids.size() == 2);
    double child_measure = 0.0;
    for (const auto& sub : mesh.subdomains) {
      for (const auto& e : sub.elements) {
        for (auto cid : r.child_ids) {
          if (e.id == cid) {
            CHECK(e.level == r.parent_level + 1);
            CHECK(e.box.lo[0] >= r.parent_box.lo[0] - 1e-15);
            CHECK(e.box.hi[0] <= r.parent_box.hi[0] + 1e-15);
            child_measure += e.box.measure(1);
          }
        }
      }
    }
    CHECK(child_measure == doctest::Approx(r.parent_box.measure(1)).epsilon(1e-12));
  }
}

TEST_CASE("refinement respects the maximum level and never loses points") {
  const ProblemSpec s = make_preset(Preset::kBar1d, 4);
  Mesh mesh = build_mesh(mesh_spec(s));
  ScalarField phi = [&](const std::array<double, 2>& x) {
    return std::exp(-std::abs(x[0]) / s.material.ell_0);
  };
  RefineOptions opts{0.2, 25.0, 2};
  std::size_t prev = mesh.total_points();
  for (int pass = 0; pass < 5; ++pass) {
    refine(mesh, phi, zero_stress(), zero_field(), opts);
    CHECK(mesh.total_points() >= prev);
    prev = mesh.total_points();
  }
  for (const auto& sub : mesh.subdomains)
    for (const auto& e : sub.elements) CHECK(e.level <= 2);
}

TEST_CASE("new points inherit history from the rule") {
  const ProblemSpec s = make_preset(Preset::kBar1d, 4);
  Mesh mesh = build_mesh(mesh_spec(s));
  ScalarField phi = [&](const std::array<double, 2>& x) {
    return std::exp(-std::abs(x[0]) / s.material.ell_0);
  };
  ScalarField rule = [&](const std::array<double, 2>& x) {
    return s.initial_history(x);
  };
  const RefineReport rep = refine(mesh, phi, zero_stress(), rule, default_opts());
  REQUIRE(!rep.refined.empty());
  for (const auto& r : rep.refined) {
    for (const auto& sub : mesh.subdomains) {
      for (const auto& e : sub.elements) {
        for (auto cid : r.child_ids) {
          if (e.id != cid) continue;
          for (const auto& q : e.points)
            CHECK(q.history == rule(q.x));
        }
      }
    }
  }
}

TEST_CASE("recovery indicator") {
  const Mesh base = build_mesh(unit_square_spec(5, 2));

  SUBCASE("uniform stress recovers exactly") {
    Mesh mesh = base;
    StressField uniform = [](const std::array<double, 2>&) {
      return std::array<double, 3>{2.0, 0.5, -1.0};
    };
    for (const auto& ind : recovery_error_indicator(mesh, uniform))
      CHECK(ind.value <= 1e-20);
  }

  SUBCASE("linear stress recovers exactly on interior patches") {
    Mesh mesh = base;
    StressField linear = [](const std::array<double, 2>& x) {
      return std::array<double, 3>{1.0 + 2.0 * x[0] - x[1], 0.3 * x[0], x[1]};
    };
    for (const auto& ind : recovery_error_indicator(mesh, linear))
      CHECK(ind.value <= 1e-10);
  }

  SUBCASE("a stress jump dominates the indicator field") {
    Mesh mesh = base;
    StressField jumpy = [](const std::array<double, 2>& x) {
      // jump across x = 0.31 inside subdomain 0
      return std::array<double, 3>{x[0] > 0.31 ? 5.0 : 0.0, 0.0, 0.0};
    };
    const auto ind = recovery_error_indicator(mesh, jumpy);
    // brute force: find the max and check it sits on an element crossing
    // the jump line
    double best = -1.0;
    std::uint64_t best_id = 0;
    int best_sub = -1;
    for (const auto& i : ind) {
      if (i.value > best) {
        best = i.value;
        best_id = i.element;
        best_sub = i.subdomain;
      }
    }
    REQUIRE(best > 0.0);
    for (const auto& sub : mesh.subdomains) {
      if (sub.id != best_sub) continue;
      for (const auto& e : sub.elements) {
        if (e.id != best_id) continue;
        CHECK(e.box.lo[0] < 0.31);
        CHECK(e.box.hi[0] > 0.31);
      }
    }
  }
}

TEST_CASE("error-driven refinement picks the top contributors") {
  Mesh mesh = build_mesh(unit_square_spec(5, 2));
  StressField jumpy = [](const std::array<double, 2>& x) {
    return std::array<double, 3>{x[0] > 0.31 ? 5.0 : 0.0, 0.0, 0.0};
  };
  const RefineReport rep =
      refine(mesh, zero_field(), jumpy, zero_field(), {0.2, 25.0, 4});
  CHECK(!rep.refined.empty());
  bool straddles = false;
  for (const auto& r : rep.refined) {
    CHECK(r.error_triggered);
    CHECK(!r.phi_triggered);
    // the indicator spreads one patch wide at most
    CHECK(r.parent_box.lo[0] < 0.31 + 0.1 + 1e-12);
    CHECK(r.parent_box.hi[0] > 0.31 - 0.1 - 1e-12);
    if (r.parent_box.lo[0] < 0.31 && r.parent_box.hi[0] > 0.31) straddles = true;
  }
  CHECK(straddles);
}
