#pragma once

#include <algorithm>
#include <array>
#include <span>

#include "xfrac/elasticity.hpp"
#include "xfrac/jet.hpp"

namespace xfrac {

// Crack density integrand Gamma_n(phi, grad phi, lap phi):
//   n=2: (1/(2 l0)) (phi^2 + l0^2 |grad phi|^2)
//   n=4: adds (l0^4/16) |lap phi|^2 inside the bracket.
// The second-order bracket integrates the optimal profile exp(-|x|/l0)
// to exactly one unit of crack surface. The Laplacian argument is
// ignored for n=2.
template <int D>
double crack_density(double phi, const std::array<double, D>& grad_phi,
                     double lap_phi, const MaterialModel& m);

// Partials of the crack density with respect to its arguments.
template <int D>
struct CrackDensityGrad {
  double d_phi = 0.0;
  std::array<double, D> d_grad{};
  double d_lap = 0.0;  // zero for n=2
};
template <int D>
CrackDensityGrad<D> crack_density_grad(double phi, const std::array<double, D>& grad_phi,
                                       double lap_phi, const MaterialModel& m);

// Initial strain-history seeding a crack at distance d from the crack set.
// General presets use the ramp B*Gc/(2 l0) (1 - 2d/l0) supported on
// d <= l0/2; the 1D bar preset uses the step 1000 on d <= l0.
double history_init_ramp(double dist, double b_scale, const MaterialModel& m);
// band <= 0 selects the default support d <= l0.
double history_init_bar1d(double dist, const MaterialModel& m, double band = 0.0);

// Irreversibility: pointwise running maximum of the tensile energy.
inline double history_update(double h_prev, double psi_plus_current) {
  return std::max(h_prev, psi_plus_current);
}

// Interior energy density at one quadrature point, with cotangents.
//
//   e = g(phi) psi+ + psi- + Gc Gamma_n + g(phi) H - f . u
//
// fields = [u_0 .. u_{D-1}, phi] jets from the constrained forward pass.
// The returned cotangents are with respect to those jets (hess slots are
// used only for the phase Laplacian in the fourth-order model).
template <int D>
struct EnergyDensityResult {
  double value = 0.0;
  std::array<Jet<D>, D + 1> cotangent{};  // per field
  double psi_plus = 0.0;                  // for history updates
};

template <int D>
EnergyDensityResult<D> energy_density(std::span<const Jet<D>> fields, double history,
                                      const std::array<double, D>& body_force,
                                      const MaterialModel& m);

}  // namespace xfrac
