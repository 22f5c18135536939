#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "xfrac/jet.hpp"
#include "xfrac/network.hpp"

namespace xfrac {

// Requested derivative order of network outputs w.r.t. spatial inputs.
enum class JetOrder { kValue = 0, kGradient = 1, kHessian = 2 };

inline int jet_comps(int dim, JetOrder order) {
  int c = 1;
  if (order >= JetOrder::kGradient) c += dim;
  if (order >= JetOrder::kHessian) c += dim * (dim + 1) / 2;
  return c;
}

// Per-point forward pass storage plus backward scratch. One trace is
// reused across many points; resize happens only when the network shape
// or the order changes.
template <int D>
struct ForwardTrace {
  JetOrder order = JetOrder::kHessian;
  int comps = 0;
  int num_layers = 0;
  std::vector<int> sizes;
  // a[l]: input jets of affine layer l (a[0] = seeded input coordinates),
  // z[l]: affine output jets of layer l. Flat [neuron*comps + c].
  std::vector<std::vector<double>> a;
  std::vector<std::vector<double>> z;
  // backward scratch
  std::vector<double> zbar, abar, ubar_scratch;

  void prepare(const NetworkParams& params, JetOrder ord);
  std::span<const double> output_comps() const { return z.back(); }
};

// Forward pass propagating jets of the requested order; raw outputs (no
// boundary ansatz) end up in trace.output_comps().
template <int D>
void forward_jets(const NetworkParams& params, const std::array<double, D>& x,
                  JetOrder order, ForwardTrace<D>& trace);

// Reverse sweep: accumulates d(sum_k <cotangent_k, output_k>)/d(params)
// into grad (length = params.values.size()). Cotangents are given per
// output in the same packed component layout as the trace.
template <int D>
void backward_jets(const NetworkParams& params, ForwardTrace<D>& trace,
                   std::span<const double> output_cotangents,
                   std::span<double> grad);

// Packed-component <-> structured jet conversion. Components beyond the
// active order read/write as zero.
template <int D>
void comps_to_jet(std::span<const double> comps, JetOrder order, Jet<D>& jet);
template <int D>
void jet_to_comps(const Jet<D>& jet, JetOrder order, std::span<double> comps);

// Value, spatial gradient and Hessian of every network output at x.
// order 0 or 1 returns the dropped entries zeroed.
template <int D>
std::vector<Jet<D>> eval_jet2(const NetworkParams& params,
                              const std::array<double, D>& x, JetOrder order);

// Constrained forward pass: raw outputs pushed through the Dirichlet
// ansatz (displacements transformed, phase field untouched).
template <int D>
std::vector<Jet<D>> forward_constrained(const NetworkParams& params,
                                        const BcAnsatz& ansatz,
                                        const std::array<double, D>& x,
                                        JetOrder order);

// Adjoint of r = m * y for a constant multiplier jet m: maps a cotangent
// on r back to a cotangent on y. Unused higher-order slots of rbar must be
// zero.
template <int D>
Jet<D> jet_mul_pullback(const Jet<D>& m, const Jet<D>& rbar);

// Per-point loss term: receives the output jets at points[index], returns
// the term value and writes d(term)/d(jet components) into cotangents
// (one Jet per output, same order semantics).
template <int D>
using PointLossFn = std::function<double(std::size_t index,
                                         std::span<const Jet<D>> outputs,
                                         std::span<Jet<D>> cotangents)>;

// Gradient of sum_i term(i) over the point set with respect to every
// network parameter, including paths through spatial derivatives.
// Points are reduced in fixed sequential order. Throws NumericalError on
// a non-finite term, naming the offending point.
template <int D>
double loss_param_gradient(const NetworkParams& params,
                           std::span<const std::array<double, D>> points,
                           JetOrder order, const PointLossFn<D>& term,
                           std::span<double> grad);

// Max over coordinates of |analytic - central FD| / (|analytic| + |FD| + eps).
// Non-finite discrepancies report +inf; an empty vector reports 0.
double fd_check(const std::function<double(std::span<const double>)>& f,
                std::span<const double> x, std::span<const double> analytic_grad,
                double step);

// Convenience overload matching the point-loss interface above.
template <int D>
double fd_check(const NetworkParams& params,
                std::span<const std::array<double, D>> points, JetOrder order,
                const PointLossFn<D>& term, double step);

}  // namespace xfrac
