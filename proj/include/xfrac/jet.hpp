#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace xfrac {

// Spatial dimension of a problem. Only 1 and 2 are supported.
//
// A Jet carries the value of a scalar field together with its spatial
// gradient and (symmetric) Hessian at one point. Jets are propagated
// forward through the network layers; second derivatives of the outputs
// with respect to the inputs fall out of the chain rule below.
template <int D>
struct Jet {
  static_assert(D == 1 || D == 2, "only 1D and 2D jets are supported");

  double value = 0.0;
  std::array<double, D> grad{};
  // Symmetric Hessian, packed: D=1 -> [h]; D=2 -> [hxx, hxy, hyy].
  std::array<double, D*(D + 1) / 2> hess{};

  static constexpr int kHessSize = D * (D + 1) / 2;
  // Flat component count when all second-order data is carried.
  static constexpr int kComps = 1 + D + kHessSize;

  double hessian(int i, int j) const {
    if constexpr (D == 1) {
      (void)i; (void)j;
      return hess[0];
    } else {
      return hess[i + j];  // (0,0)->0, (0,1)/(1,0)->1, (1,1)->2
    }
  }

  double laplacian() const {
    if constexpr (D == 1) return hess[0];
    else return hess[0] + hess[2];
  }

  static Jet constant(double v) {
    Jet j;
    j.value = v;
    return j;
  }

  // Seed jet for input coordinate `axis`: value x, unit gradient entry.
  static Jet variable(double x, int axis) {
    Jet j;
    j.value = x;
    j.grad[axis] = 1.0;
    return j;
  }
};

template <int D>
inline Jet<D> operator+(const Jet<D>& a, const Jet<D>& b) {
  Jet<D> r;
  r.value = a.value + b.value;
  for (int i = 0; i < D; ++i) r.grad[i] = a.grad[i] + b.grad[i];
  for (int i = 0; i < Jet<D>::kHessSize; ++i) r.hess[i] = a.hess[i] + b.hess[i];
  return r;
}

template <int D>
inline Jet<D> operator-(const Jet<D>& a, const Jet<D>& b) {
  Jet<D> r;
  r.value = a.value - b.value;
  for (int i = 0; i < D; ++i) r.grad[i] = a.grad[i] - b.grad[i];
  for (int i = 0; i < Jet<D>::kHessSize; ++i) r.hess[i] = a.hess[i] - b.hess[i];
  return r;
}

template <int D>
inline Jet<D> operator*(const Jet<D>& a, double s) {
  Jet<D> r;
  r.value = a.value * s;
  for (int i = 0; i < D; ++i) r.grad[i] = a.grad[i] * s;
  for (int i = 0; i < Jet<D>::kHessSize; ++i) r.hess[i] = a.hess[i] * s;
  return r;
}

template <int D>
inline Jet<D> operator*(double s, const Jet<D>& a) { return a * s; }

// Leibniz product rule up to second order.
template <int D>
inline Jet<D> operator*(const Jet<D>& a, const Jet<D>& b) {
  Jet<D> r;
  r.value = a.value * b.value;
  for (int i = 0; i < D; ++i)
    r.grad[i] = a.value * b.grad[i] + a.grad[i] * b.value;
  if constexpr (D == 1) {
    r.hess[0] = a.value * b.hess[0] + 2.0 * a.grad[0] * b.grad[0] + a.hess[0] * b.value;
  } else {
    r.hess[0] = a.value * b.hess[0] + 2.0 * a.grad[0] * b.grad[0] + a.hess[0] * b.value;
    r.hess[1] = a.value * b.hess[1] + a.grad[0] * b.grad[1] + a.grad[1] * b.grad[0] + a.hess[1] * b.value;
    r.hess[2] = a.value * b.hess[2] + 2.0 * a.grad[1] * b.grad[1] + a.hess[2] * b.value;
  }
  return r;
}

// Scalar activation with derivatives up to third order, as needed by the
// reverse sweep over second-order jets.
struct ActDerivs {
  double f, f1, f2, f3;
};

enum class Activation { kTanh, kSwish };

inline ActDerivs tanh_derivs(double z) {
  const double t = std::tanh(z);
  const double s = 1.0 - t * t;          // tanh'
  ActDerivs d;
  d.f = t;
  d.f1 = s;
  d.f2 = -2.0 * t * s;
  d.f3 = s * (6.0 * t * t - 2.0);
  return d;
}

inline ActDerivs swish_derivs(double z) {
  const double sg = 1.0 / (1.0 + std::exp(-z));
  const double s1 = sg * (1.0 - sg);
  const double s2 = s1 * (1.0 - 2.0 * sg);
  const double s3 = s2 * (1.0 - 2.0 * sg) - 2.0 * s1 * s1;
  ActDerivs d;
  d.f = z * sg;
  d.f1 = sg + z * s1;
  d.f2 = 2.0 * s1 + z * s2;
  d.f3 = 3.0 * s2 + z * s3;
  return d;
}

inline ActDerivs activation_derivs(Activation kind, double z) {
  return kind == Activation::kTanh ? tanh_derivs(z) : swish_derivs(z);
}

// tau(c*alpha*z) for the adaptive activation; slope alpha is trainable.
inline double adaptive_activation(double z, double scale, double alpha, Activation kind) {
  return activation_derivs(kind, scale * alpha * z).f;
}

}  // namespace xfrac
