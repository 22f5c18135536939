#include "xfrac/phase_energy.hpp"

namespace xfrac {

template <int D>
double crack_density(double phi, const std::array<double, D>& grad_phi,
                     double lap_phi, const MaterialModel& m) {
  const double l = m.ell_0;
  double g2 = 0.0;
  for (int k = 0; k < D; ++k) g2 += grad_phi[k] * grad_phi[k];
  double bracket = phi * phi + l * l * g2;
  if (m.order == 4) bracket += (l * l * l * l / 16.0) * lap_phi * lap_phi;
  return bracket / (2.0 * l);
}

template <int D>
CrackDensityGrad<D> crack_density_grad(double phi, const std::array<double, D>& grad_phi,
                                       double lap_phi, const MaterialModel& m) {
  const double l = m.ell_0;
  CrackDensityGrad<D> g;
  g.d_phi = phi / l;
  for (int k = 0; k < D; ++k) g.d_grad[k] = l * grad_phi[k];
  if (m.order == 4) g.d_lap = (l * l * l / 16.0) * lap_phi;
  return g;
}

double history_init_ramp(double dist, double b_scale, const MaterialModel& m) {
  if (dist > 0.5 * m.ell_0) return 0.0;
  return (b_scale * m.g_c / (2.0 * m.ell_0)) * (1.0 - 2.0 * dist / m.ell_0);
}

double history_init_bar1d(double dist, const MaterialModel& m, double band) {
  if (band <= 0.0) band = m.ell_0;
  return dist <= band ? 1000.0 : 0.0;
}

template <int D>
EnergyDensityResult<D> energy_density(std::span<const Jet<D>> fields, double history,
                                      const std::array<double, D>& body_force,
                                      const MaterialModel& m) {
  EnergyDensityResult<D> r;
  const Jet<D>& phi_jet = fields[D];

  std::array<std::array<double, D>, D> grad_u;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) grad_u[i][j] = fields[i].grad[j];

  const SymMat<D> eps = strain<D>(grad_u);
  const SplitEnergy split = split_energy<D>(eps, m);
  const Degradation deg = degradation(phi_jet.value);

  std::array<double, D> grad_phi;
  for (int k = 0; k < D; ++k) grad_phi[k] = phi_jet.grad[k];
  const double lap_phi = m.order == 4 ? phi_jet.laplacian() : 0.0;
  const double gamma = crack_density<D>(phi_jet.value, grad_phi, lap_phi, m);

  double fdotu = 0.0;
  for (int i = 0; i < D; ++i) fdotu += body_force[i] * fields[i].value;

  r.psi_plus = split.psi_plus;
  r.value = deg.g * split.psi_plus + split.psi_minus + m.g_c * gamma +
            deg.g * history - fdotu;

  // displacement cotangents: d e / d(grad u)_ij = degraded stress entry
  SymMat<D> sp, sm;
  split_stress<D>(eps, m, sp, sm);
  for (int i = 0; i < D; ++i) {
    for (int j = 0; j < D; ++j)
      r.cotangent[i].grad[j] = deg.g * sp(i, j) + sm(i, j);
    r.cotangent[i].value = -body_force[i];
  }

  // phase cotangents
  const CrackDensityGrad<D> cg =
      crack_density_grad<D>(phi_jet.value, grad_phi, lap_phi, m);
  r.cotangent[D].value = deg.dg * (split.psi_plus + history) + m.g_c * cg.d_phi;
  for (int k = 0; k < D; ++k) r.cotangent[D].grad[k] = m.g_c * cg.d_grad[k];
  if (m.order == 4) {
    // laplacian = sum of diagonal Hessian slots
    if constexpr (D == 1) {
      r.cotangent[D].hess[0] = m.g_c * cg.d_lap;
    } else {
      r.cotangent[D].hess[0] = m.g_c * cg.d_lap;
      r.cotangent[D].hess[2] = m.g_c * cg.d_lap;
    }
  }
  return r;
}

template double crack_density<1>(double, const std::array<double, 1>&, double, const MaterialModel&);
template double crack_density<2>(double, const std::array<double, 2>&, double, const MaterialModel&);
template CrackDensityGrad<1> crack_density_grad<1>(double, const std::array<double, 1>&, double, const MaterialModel&);
template CrackDensityGrad<2> crack_density_grad<2>(double, const std::array<double, 2>&, double, const MaterialModel&);
template EnergyDensityResult<1> energy_density<1>(std::span<const Jet<1>>, double, const std::array<double, 1>&, const MaterialModel&);
template EnergyDensityResult<2> energy_density<2>(std::span<const Jet<2>>, double, const std::array<double, 2>&, const MaterialModel&);

}  // namespace xfrac
