#pragma once

#include <array>

#include "xfrac/jet.hpp"

namespace xfrac {

// Isotropic linear-elastic material with phase-field fracture constants.
// Units follow the benchmark presets: lambda, mu in kN/mm^2, g_c in kN/mm,
// ell_0 in mm. `order` selects the second- or fourth-order crack density.
struct MaterialModel {
  double lambda = 0.0;
  double mu = 0.0;
  double g_c = 0.0;
  double ell_0 = 0.0;
  int order = 4;  // 2 or 4

  void validate(int dim) const;
};

// Symmetric D x D matrix, packed: D=1 -> [xx]; D=2 -> [xx, xy, yy].
template <int D>
struct SymMat {
  std::array<double, D*(D + 1) / 2> v{};

  double trace() const {
    if constexpr (D == 1) return v[0];
    else return v[0] + v[2];
  }
  double operator()(int i, int j) const {
    if constexpr (D == 1) { (void)i; (void)j; return v[0]; }
    else return v[i + j];
  }
};

struct SplitEnergy {
  double psi_plus = 0.0;
  double psi_minus = 0.0;
};

// Small-strain tensor from a displacement gradient.
template <int D>
SymMat<D> strain(const std::array<std::array<double, D>, D>& grad_u);

// Undegraded energy density Psi0 = lambda/2 tr(eps)^2 + mu tr(eps^2).
template <int D>
double elastic_energy(const SymMat<D>& eps, const MaterialModel& m);

// Spectral tension/compression split of Psi0. psi_plus + psi_minus
// reproduces elastic_energy and both parts are nonnegative.
template <int D>
SplitEnergy split_energy(const SymMat<D>& eps, const MaterialModel& m);

// d(psi_plus)/d(eps) and d(psi_minus)/d(eps); their sum is the undegraded
// stress lambda tr(eps) I + 2 mu eps.
template <int D>
void split_stress(const SymMat<D>& eps, const MaterialModel& m,
                  SymMat<D>& sigma_plus, SymMat<D>& sigma_minus);

// Stress degradation g(phi) = (1-phi)^2 and its derivative.
struct Degradation {
  double g;
  double dg;
};
inline Degradation degradation(double phi) {
  const double r = 1.0 - phi;
  return {r * r, -2.0 * r};
}

// Cauchy stress with the tensile part degraded:
// sigma = g(phi) d(psi+)/d(eps) + d(psi-)/d(eps).
template <int D>
SymMat<D> degraded_stress(const SymMat<D>& eps, double phi, const MaterialModel& m);

}  // namespace xfrac
