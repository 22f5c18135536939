#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "xfrac/elasticity.hpp"
#include "xfrac/mesh.hpp"
#include "xfrac/network.hpp"

namespace xfrac {

enum class Preset { kBar1d, kSenTension, kEccentricHole };

Preset preset_from_string(const std::string& s);
std::string to_string(Preset p);

struct OptimizerConfig {
  std::string warmup = "adam";  // adam | sgd
  int warmup_steps = 2000;
  double warmup_lr = 1e-3;
  int warmup_steps_later = -1;  // steps for later stages (-1: same as warmup_steps)
  int lbfgs_max_iters = 2000;
  int lbfgs_memory = 20;
  double grad_tol = 1e-9;
  double loss_tol = 1e-12;
};

// Everything needed to reproduce one experiment. Built by make_preset and
// optionally overridden from a config file.
struct ProblemSpec {
  Preset preset = Preset::kBar1d;
  int dim = 1;
  MaterialModel material;
  double history_b = 1000.0;  // B of the seeding ramp (2D presets)

  Box domain;
  std::vector<Box> subdomain_boxes;
  std::vector<int> elements_per_subdomain;  // per axis
  int gauss_per_axis = 2;
  std::vector<int> interface_points;  // per subdomain
  std::optional<Hole> hole;

  bool has_crack = false;
  std::array<double, 2> crack_p0{0.0, 0.0};
  std::array<double, 2> crack_p1{0.0, 0.0};
  double crack_band = 0.0;  // bar1d history support halfwidth; 0 = l0

  double delta_u = 0.0;  // displacement increment per step (mm)
  int n_steps = 1;

  double phi_threshold = 0.2;
  double rho_percent = 25.0;
  int max_level = 3;
  int refine_cycles = 1;  // refine-retrain cycles per load step (0..3)

  double w1 = 1.0;
  double w2 = 1.0;
  double l2_reg = 0.0;

  std::vector<int> network_layers;
  Activation activation = Activation::kTanh;
  double scale_c = 10.0;
  bool adaptive_slopes = true;  // false: slopes frozen at 1/c (fixed activation)
  std::uint64_t seed = 1234;

  OptimizerConfig optimizer;

  int layout() const { return static_cast<int>(subdomain_boxes.size()); }
  BcAnsatz ansatz() const;
  void validate() const;
  double crack_distance(const std::array<double, 2>& x) const;
  double initial_history(const std::array<double, 2>& x) const;
  std::array<double, 2> body_force(const std::array<double, 2>& x) const;
};

// Benchmark presets with the published subdomain layouts and settings.
// layout: bar1d in {2,4}; sen_tension in {4,8,12}; eccentric_hole in {4,8}.
ProblemSpec make_preset(Preset preset, int layout);

MeshSpec mesh_spec(const ProblemSpec& spec);

// Closed-form fields of the cracked-bar benchmark.
struct BarSolution {
  double u;
  double phi;
};
BarSolution exact_bar_solution(double x, double ell_0);

// 100 * ||pred - exact||_2 / ||exact||_2 over matching sample vectors.
double relative_l2(std::span<const double> predicted, std::span<const double> exact);

// The fixed 1D evaluation grid (part of the error-metric contract).
inline constexpr int kBarGridPoints = 2001;

}  // namespace xfrac
