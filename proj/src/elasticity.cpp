#include "xfrac/elasticity.hpp"

#include <cmath>

#include "xfrac/errors.hpp"

namespace xfrac {
namespace {

inline double pos(double a) { return a > 0.0 ? a : 0.0; }
inline double neg(double a) { return a < 0.0 ? a : 0.0; }

// Eigen-decomposition of a symmetric 2x2 matrix. Near-coincident
// eigenvalues fall back to the coordinate axes; the split depends only on
// eigenvalues there, so any orthonormal pair is valid.
struct Eig2 {
  double e1, e2;        // eigenvalues
  double c, s;          // first eigenvector (c, s); second is (-s, c)
};

inline Eig2 eig_sym2(const SymMat<2>& a) {
  const double mean = 0.5 * (a.v[0] + a.v[2]);
  const double diff = 0.5 * (a.v[0] - a.v[2]);
  const double rad = std::sqrt(diff * diff + a.v[1] * a.v[1]);
  Eig2 r;
  r.e1 = mean + rad;
  r.e2 = mean - rad;
  if (rad < 1e-14 * (1.0 + std::abs(mean))) {
    r.c = 1.0;
    r.s = 0.0;
    return r;
  }
  // (e1 - a22, a12) is an eigenvector of e1 unless it degenerates
  double vx = r.e1 - a.v[2];
  double vy = a.v[1];
  double n = std::hypot(vx, vy);
  if (n < 1e-300) {
    vx = a.v[1];
    vy = r.e1 - a.v[0];
    n = std::hypot(vx, vy);
  }
  r.c = vx / n;
  r.s = vy / n;
  return r;
}

}  // namespace

void MaterialModel::validate(int dim) const {
  if (mu <= 0.0) throw ConfigError("material: mu must be positive");
  if (lambda <= -2.0 / dim * mu)
    throw ConfigError("material: lambda must exceed -(2/d) mu");
  if (g_c <= 0.0) throw ConfigError("material: g_c must be positive");
  if (ell_0 <= 0.0) throw ConfigError("material: ell_0 must be positive");
  if (order != 2 && order != 4)
    throw ConfigError("material: phase-field order must be 2 or 4");
}

template <int D>
SymMat<D> strain(const std::array<std::array<double, D>, D>& grad_u) {
  SymMat<D> e;
  if constexpr (D == 1) {
    e.v[0] = grad_u[0][0];
  } else {
    e.v[0] = grad_u[0][0];
    e.v[1] = 0.5 * (grad_u[0][1] + grad_u[1][0]);
    e.v[2] = grad_u[1][1];
  }
  return e;
}

template <int D>
double elastic_energy(const SymMat<D>& eps, const MaterialModel& m) {
  const double tr = eps.trace();
  double tr2;  // tr(eps^2)
  if constexpr (D == 1) {
    tr2 = eps.v[0] * eps.v[0];
  } else {
    tr2 = eps.v[0] * eps.v[0] + 2.0 * eps.v[1] * eps.v[1] + eps.v[2] * eps.v[2];
  }
  return 0.5 * m.lambda * tr * tr + m.mu * tr2;
}

template <int D>
SplitEnergy split_energy(const SymMat<D>& eps, const MaterialModel& m) {
  SplitEnergy s;
  const double tr = eps.trace();
  if constexpr (D == 1) {
    const double e = eps.v[0];
    s.psi_plus = 0.5 * m.lambda * pos(tr) * pos(tr) + m.mu * pos(e) * pos(e);
    s.psi_minus = 0.5 * m.lambda * neg(tr) * neg(tr) + m.mu * neg(e) * neg(e);
  } else {
    const Eig2 eig = eig_sym2(eps);
    s.psi_plus = 0.5 * m.lambda * pos(tr) * pos(tr) +
                 m.mu * (pos(eig.e1) * pos(eig.e1) + pos(eig.e2) * pos(eig.e2));
    s.psi_minus = 0.5 * m.lambda * neg(tr) * neg(tr) +
                  m.mu * (neg(eig.e1) * neg(eig.e1) + neg(eig.e2) * neg(eig.e2));
  }
  return s;
}

template <int D>
void split_stress(const SymMat<D>& eps, const MaterialModel& m,
                  SymMat<D>& sigma_plus, SymMat<D>& sigma_minus) {
  const double tr = eps.trace();
  if constexpr (D == 1) {
    const double e = eps.v[0];
    sigma_plus.v[0] = m.lambda * pos(tr) + 2.0 * m.mu * pos(e);
    sigma_minus.v[0] = m.lambda * neg(tr) + 2.0 * m.mu * neg(e);
  } else {
    const Eig2 eig = eig_sym2(eps);
    const double c2 = eig.c * eig.c, s2 = eig.s * eig.s, cs = eig.c * eig.s;
    // projectors onto the two principal directions
    const double p1[3] = {c2, cs, s2};
    const double p2[3] = {s2, -cs, c2};
    for (int k = 0; k < 3; ++k) {
      sigma_plus.v[k] = 2.0 * m.mu * (pos(eig.e1) * p1[k] + pos(eig.e2) * p2[k]);
      sigma_minus.v[k] = 2.0 * m.mu * (neg(eig.e1) * p1[k] + neg(eig.e2) * p2[k]);
    }
    sigma_plus.v[0] += m.lambda * pos(tr);
    sigma_plus.v[2] += m.lambda * pos(tr);
    sigma_minus.v[0] += m.lambda * neg(tr);
    sigma_minus.v[2] += m.lambda * neg(tr);
  }
}

template <int D>
SymMat<D> degraded_stress(const SymMat<D>& eps, double phi, const MaterialModel& m) {
  SymMat<D> sp, sm;
  split_stress<D>(eps, m, sp, sm);
  const double g = degradation(phi).g;
  SymMat<D> sigma;
  for (int k = 0; k < D * (D + 1) / 2; ++k) sigma.v[k] = g * sp.v[k] + sm.v[k];
  return sigma;
}

template SymMat<1> strain<1>(const std::array<std::array<double, 1>, 1>&);
template SymMat<2> strain<2>(const std::array<std::array<double, 2>, 2>&);
template double elastic_energy<1>(const SymMat<1>&, const MaterialModel&);
template double elastic_energy<2>(const SymMat<2>&, const MaterialModel&);
template SplitEnergy split_energy<1>(const SymMat<1>&, const MaterialModel&);
template SplitEnergy split_energy<2>(const SymMat<2>&, const MaterialModel&);
template void split_stress<1>(const SymMat<1>&, const MaterialModel&, SymMat<1>&, SymMat<1>&);
template void split_stress<2>(const SymMat<2>&, const MaterialModel&, SymMat<2>&, SymMat<2>&);
template SymMat<1> degraded_stress<1>(const SymMat<1>&, double, const MaterialModel&);
template SymMat<2> degraded_stress<2>(const SymMat<2>&, double, const MaterialModel&);

}  // namespace xfrac
