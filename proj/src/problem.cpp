#include "xfrac/problem.hpp"

#include <cmath>

#include "xfrac/errors.hpp"
#include "xfrac/phase_energy.hpp"

namespace xfrac {

Preset preset_from_string(const std::string& s) {
  if (s == "bar1d") return Preset::kBar1d;
  if (s == "sen_tension") return Preset::kSenTension;
  if (s == "eccentric_hole") return Preset::kEccentricHole;
  throw ConfigError("unknown preset: " + s);
}

std::string to_string(Preset p) {
  switch (p) {
    case Preset::kBar1d: return "bar1d";
    case Preset::kSenTension: return "sen_tension";
    case Preset::kEccentricHole: return "eccentric_hole";
  }
  return "bar1d";
}

BcAnsatz ProblemSpec::ansatz() const {
  BcAnsatz a;
  switch (preset) {
    case Preset::kBar1d: a.kind = AnsatzKind::kBar1d; break;
    case Preset::kSenTension: a.kind = AnsatzKind::kSenTension; break;
    case Preset::kEccentricHole: a.kind = AnsatzKind::kEccentricHole; break;
  }
  return a;
}

void ProblemSpec::validate() const {
  material.validate(dim);
  if (dim == 2 && delta_u <= 0.0)
    throw ConfigError("delta_u must be positive for 2D presets");
  if (preset == Preset::kBar1d && n_steps != 1)
    throw ConfigError("bar1d is a single static step (n_steps must be 1)");
  if (n_steps < 0) throw ConfigError("n_steps must be nonnegative");
  if (subdomain_boxes.empty()) throw ConfigError("no subdomain layout");
  if (elements_per_subdomain.size() != subdomain_boxes.size())
    throw ConfigError("elements_per_subdomain must match the subdomain count");
  if (gauss_per_axis < 1) throw ConfigError("gauss_per_axis must be >= 1");
  if (phi_threshold <= 0.0 || phi_threshold >= 1.0)
    throw ConfigError("phi_threshold must be in (0, 1)");
  if (rho_percent <= 0.0 || rho_percent > 100.0)
    throw ConfigError("rho_percent must be in (0, 100]");
  if (max_level < 0) throw ConfigError("max_level must be nonnegative");
  if (refine_cycles < 0 || refine_cycles > 3)
    throw ConfigError("refine_cycles must be in [0, 3]");
  if (crack_band < 0.0) throw ConfigError("crack_band must be nonnegative");
  if (w1 <= 0.0 || w2 <= 0.0) throw ConfigError("penalty weights must be positive");
  if (l2_reg < 0.0) throw ConfigError("l2_reg must be nonnegative");
  if (network_layers.size() < 3) throw ConfigError("network needs at least 3 layers");
  if (network_layers.front() != dim)
    throw ConfigError("network input layer must equal the spatial dimension");
  if (network_layers.back() != dim + 1)
    throw ConfigError("network output layer must equal dim + 1 (displacements + phase)");
  if (scale_c < 1.0 || scale_c > 10.0)
    throw ConfigError("scale_c must lie in [1, 10]");
  if (optimizer.warmup != "adam" && optimizer.warmup != "sgd")
    throw ConfigError("optimizer.warmup must be adam or sgd");
  if (optimizer.warmup_steps < 0 || optimizer.lbfgs_max_iters < 0)
    throw ConfigError("optimizer iteration counts must be nonnegative");
  if (optimizer.warmup_lr <= 0.0) throw ConfigError("warmup_lr must be positive");
  if (optimizer.grad_tol <= 0.0 || optimizer.loss_tol <= 0.0)
    throw ConfigError("optimizer tolerances must be positive");
}

double ProblemSpec::crack_distance(const std::array<double, 2>& x) const {
  if (!has_crack) return std::numeric_limits<double>::infinity();
  if (dim == 1) return std::abs(x[0] - crack_p0[0]);
  const double vx = crack_p1[0] - crack_p0[0];
  const double vy = crack_p1[1] - crack_p0[1];
  const double wx = x[0] - crack_p0[0];
  const double wy = x[1] - crack_p0[1];
  const double vv = vx * vx + vy * vy;
  double t = vv > 0.0 ? (wx * vx + wy * vy) / vv : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = wx - t * vx;
  const double dy = wy - t * vy;
  return std::sqrt(dx * dx + dy * dy);
}

double ProblemSpec::initial_history(const std::array<double, 2>& x) const {
  if (!has_crack) return 0.0;
  const double d = crack_distance(x);
  if (preset == Preset::kBar1d) return history_init_bar1d(d, material, crack_band);
  return history_init_ramp(d, history_b, material);
}

std::array<double, 2> ProblemSpec::body_force(const std::array<double, 2>& x) const {
  if (preset == Preset::kBar1d) return {std::sin(M_PI * x[0]), 0.0};
  return {0.0, 0.0};
}

namespace {

std::vector<Box> grid_boxes(const Box& domain, int cols, int rows) {
  std::vector<Box> boxes;
  boxes.reserve(static_cast<std::size_t>(cols) * rows);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      Box b;
      b.lo[0] = domain.lo[0] + (domain.hi[0] - domain.lo[0]) * c / cols;
      b.hi[0] = domain.lo[0] + (domain.hi[0] - domain.lo[0]) * (c + 1) / cols;
      b.lo[1] = domain.lo[1] + (domain.hi[1] - domain.lo[1]) * r / rows;
      b.hi[1] = domain.lo[1] + (domain.hi[1] - domain.lo[1]) * (r + 1) / rows;
      boxes.push_back(b);
    }
  }
  return boxes;
}

// Per-row element counts: finer rows next to the crack plane.
std::vector<int> counts_by_row(int cols, const std::vector<int>& row_counts) {
  std::vector<int> out;
  for (int n : row_counts)
    for (int c = 0; c < cols; ++c) out.push_back(n);
  return out;
}

}  // namespace

ProblemSpec make_preset(Preset preset, int layout) {
  ProblemSpec s;
  s.preset = preset;
  switch (preset) {
    case Preset::kBar1d: {
      if (layout != 2 && layout != 4)
        throw ConfigError("bar1d supports 2 or 4 subdomains");
      s.dim = 1;
      s.domain = {{-1.0, 0.0}, {1.0, 0.0}};
      // E = 1 via lambda = 0, mu = 1/2; sigma = (1-phi)^2 eps for eps >= 0.
      // The toughness keeps the seeded crack fully developed (the history
      // pin must dominate G_c for the closed-form comparison regime).
      s.material = {0.0, 0.5, 0.01, 1.0 / 80.0, 4};
      if (layout == 2) {
        s.subdomain_boxes = {{{-1.0, 0.0}, {0.0, 0.0}}, {{0.0, 0.0}, {1.0, 0.0}}};
        s.elements_per_subdomain = {160, 160};  // 800 points per subdomain
      } else {
        s.subdomain_boxes = {{{-1.0, 0.0}, {-0.5, 0.0}},
                             {{-0.5, 0.0}, {0.0, 0.0}},
                             {{0.0, 0.0}, {0.5, 0.0}},
                             {{0.5, 0.0}, {1.0, 0.0}}};
        s.elements_per_subdomain = {20, 50, 50, 20};  // 100-250-250-100 points
      }
      s.gauss_per_axis = 5;
      s.interface_points.assign(s.subdomain_boxes.size(), 1);
      s.has_crack = true;
      s.crack_p0 = s.crack_p1 = {0.0, 0.0};
      s.delta_u = 0.0;
      s.n_steps = 1;
      s.max_level = 3;
      s.refine_cycles = 3;
      s.network_layers = {1, 10, 10, 10, 2};
      s.activation = Activation::kTanh;
      s.optimizer.warmup_steps = 2000;
      s.optimizer.lbfgs_max_iters = 3000;
      break;
    }
    case Preset::kSenTension: {
      s.dim = 2;
      s.domain = {{0.0, 0.0}, {1.0, 1.0}};
      s.material = {121.15, 80.77, 2.7e-3, 0.0125, 4};
      if (layout == 4) {
        s.subdomain_boxes = grid_boxes(s.domain, 2, 2);
        s.elements_per_subdomain = {11, 11, 11, 11};
        s.interface_points.assign(4, 1600);
      } else if (layout == 8) {
        s.subdomain_boxes = grid_boxes(s.domain, 2, 4);
        s.elements_per_subdomain = counts_by_row(2, {9, 16, 16, 9});
        s.interface_points.assign(8, 1000);
      } else if (layout == 12) {
        s.subdomain_boxes = grid_boxes(s.domain, 2, 6);
        s.elements_per_subdomain = counts_by_row(2, {6, 8, 14, 14, 8, 6});
        s.interface_points.assign(12, 800);
      } else {
        throw ConfigError("sen_tension supports 4, 8 or 12 subdomains");
      }
      s.gauss_per_axis = 2;  // 4 integration points per element
      s.has_crack = true;
      s.crack_p0 = {0.0, 0.5};
      s.crack_p1 = {0.5, 0.5};
      s.delta_u = 1e-3;
      s.n_steps = 10;
      s.max_level = 2;
      s.refine_cycles = 1;
      s.network_layers = {2, 50, 50, 50, 50, 3};
      s.activation = Activation::kTanh;
      s.l2_reg = 1e-6;
      s.optimizer.warmup_steps = 1000;
      s.optimizer.lbfgs_max_iters = 600;
      break;
    }
    case Preset::kEccentricHole: {
      s.dim = 2;
      s.domain = {{0.0, 0.0}, {1.0, 1.0}};
      s.material = {121.154, 80.77, 2.7e-3, 0.02, 4};
      if (layout == 4) {
        s.subdomain_boxes = grid_boxes(s.domain, 2, 2);
        s.elements_per_subdomain = {12, 12, 12, 12};
        s.interface_points.assign(4, 1600);
      } else if (layout == 8) {
        s.subdomain_boxes = grid_boxes(s.domain, 2, 4);
        s.elements_per_subdomain = counts_by_row(2, {8, 8, 14, 14});
        s.interface_points.assign(8, 1000);
      } else {
        throw ConfigError("eccentric_hole supports 4 or 8 subdomains");
      }
      s.gauss_per_axis = 2;
      s.hole = Hole{{0.6, 0.7}, 0.15};
      s.has_crack = false;
      s.delta_u = 1e-3;
      s.n_steps = 10;
      s.max_level = 2;
      s.refine_cycles = 1;
      s.network_layers = {2, 50, 50, 50, 3};
      s.activation = Activation::kSwish;
      s.l2_reg = 1e-6;
      s.optimizer.warmup_steps = 1000;
      s.optimizer.lbfgs_max_iters = 600;
      break;
    }
  }
  return s;
}

MeshSpec mesh_spec(const ProblemSpec& spec) {
  MeshSpec m;
  m.dim = spec.dim;
  m.domain = spec.domain;
  m.boxes = spec.subdomain_boxes;
  m.elements_per_axis = spec.elements_per_subdomain;
  m.gauss_per_axis = spec.gauss_per_axis;
  m.hole = spec.hole;
  m.interface_points_per_subdomain = spec.interface_points;
  return m;
}

BarSolution exact_bar_solution(double x, double ell_0) {
  BarSolution s;
  const double sin_term = std::sin(M_PI * x) / (M_PI * M_PI);
  if (x < 0.0)
    s.u = sin_term - (1.0 + x) / M_PI;
  else
    s.u = sin_term + (1.0 - x) / M_PI;
  s.phi = std::exp(-std::abs(x) / ell_0);
  return s;
}

double relative_l2(std::span<const double> predicted, std::span<const double> exact) {
  if (predicted.size() != exact.size())
    throw ConfigError("relative_l2: sample vectors differ in length");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    const double d = predicted[i] - exact[i];
    num += d * d;
    den += exact[i] * exact[i];
  }
  if (den == 0.0) throw NumericalError("relative_l2 undefined: exact norm is zero");
  return 100.0 * std::sqrt(num / den);
}

}  // namespace xfrac
