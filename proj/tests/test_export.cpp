#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "xfrac/export.hpp"
#include "xfrac/problem.hpp"

using namespace xfrac;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::size_t count_data_rows(const std::string& text) {
  std::size_t rows = 0;
  bool header = true;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (!line.empty()) ++rows;
  }
  return rows;
}

ProblemSpec tiny_bar() {
  ProblemSpec spec = make_preset(Preset::kBar1d, 2);
  spec.elements_per_subdomain = {4, 4};
  spec.gauss_per_axis = 3;
  spec.network_layers = {1, 4, 4, 2};
  spec.refine_cycles = 0;
  spec.optimizer.warmup_steps = 5;
  spec.optimizer.lbfgs_max_iters = 5;
  return spec;
}

}  // namespace

TEST_CASE("exact bar export has the contract grid") {
  const std::string path = "/tmp/xfrac_exact_test.csv";
  write_exact_bar_csv(path, 2001, 1.0 / 80.0);
  const std::string text = slurp(path);
  CHECK(count_data_rows(text) == 2001);
  CHECK(text.rfind("x,u,phi\n", 0) == 0);
  std::remove(path.c_str());
}

TEST_CASE("field export covers the grid and reruns byte-identically") {
  const fs::path dir = "/tmp/xfrac_export_test";
  fs::create_directories(dir);

  Solver solver(tiny_bar());
  solver.run();
  const std::string f1 = (dir / "fields_a.csv").string();
  const std::string f2 = (dir / "fields_b.csv").string();
  write_fields_csv(f1, solver, 101);
  write_fields_csv(f2, solver, 101);
  CHECK(slurp(f1) == slurp(f2));
  CHECK(count_data_rows(slurp(f1)) == 101);
  CHECK(slurp(f1).rfind("x,u,phi\n", 0) == 0);

  write_mesh_csv((dir / "mesh.csv").string(), solver.mesh());
  const std::string mesh_text = slurp((dir / "mesh.csv").string());
  CHECK(mesh_text.rfind("element_id,subdomain_id,level,", 0) == 0);
  CHECK(count_data_rows(mesh_text) == 8);  // 4 + 4 elements, no refinement

  fs::remove_all(dir);
}

TEST_CASE("load-displacement export is schedule-ordered") {
  std::vector<StepResult> steps(4);
  for (int i = 0; i < 4; ++i) {
    steps[i].step = i + 1;
    steps[i].u_applied = 1e-3 * (i + 1);
    steps[i].reaction_force = 0.1 * (i + 1);
  }
  const std::string path = "/tmp/xfrac_ld_test.csv";
  write_load_disp_csv(path, steps);
  const std::string text = slurp(path);
  CHECK(text.rfind("step,u_applied,force\n", 0) == 0);
  CHECK(count_data_rows(text) == 4);

  // u_applied strictly increases by delta_u
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  double prev = 0.0;
  while (std::getline(in, line)) {
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    const double u = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
    CHECK(u == doctest::Approx(prev + 1e-3).epsilon(1e-12));
    prev = u;
  }
  std::remove(path.c_str());
}
