#include "xfrac/autodiff.hpp"

#include <cfloat>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#include "xfrac/errors.hpp"

namespace xfrac {
namespace {

// Packed component layout: [value, grad..., hess...] with the symmetric
// Hessian stored as (0,0) for D=1 and (0,0),(0,1),(1,1) for D=2.
template <int D>
constexpr std::array<std::array<int, 2>, D*(D + 1) / 2> hess_pairs() {
  if constexpr (D == 1) {
    return {{{0, 0}}};
  } else {
    return {{{0, 0}, {0, 1}, {1, 1}}};
  }
}

template <int C>
void affine_forward(int n_out, int n_in, const double* w, const double* b,
                    const double* a, double* z) {
  for (int i = 0; i < n_out; ++i) {
    double acc[C] = {};
    const double* wrow = w + static_cast<std::size_t>(i) * n_in;
    for (int j = 0; j < n_in; ++j) {
      const double wij = wrow[j];
      const double* aj = a + static_cast<std::size_t>(j) * C;
      for (int c = 0; c < C; ++c) acc[c] += wij * aj[c];
    }
    acc[0] += b[i];
    double* zi = z + static_cast<std::size_t>(i) * C;
    for (int c = 0; c < C; ++c) zi[c] = acc[c];
  }
}

// a = tau(u) with u = s*z, component-wise chain rule up to second order.
template <int D, int O>
void activation_forward(int n, double s, Activation kind, const double* z, double* a) {
  constexpr int C = 1 + (O >= 1 ? D : 0) + (O >= 2 ? D * (D + 1) / 2 : 0);
  constexpr auto pairs = hess_pairs<D>();
  for (int i = 0; i < n; ++i) {
    const double* zi = z + static_cast<std::size_t>(i) * C;
    double* ai = a + static_cast<std::size_t>(i) * C;
    double u[C];
    for (int c = 0; c < C; ++c) u[c] = s * zi[c];
    const ActDerivs d = activation_derivs(kind, u[0]);
    ai[0] = d.f;
    if constexpr (O >= 1) {
      for (int k = 0; k < D; ++k) ai[1 + k] = d.f1 * u[1 + k];
    }
    if constexpr (O >= 2) {
      for (int m = 0; m < D * (D + 1) / 2; ++m) {
        const int gk = 1 + pairs[m][0];
        const int gl = 1 + pairs[m][1];
        ai[1 + D + m] = d.f1 * u[1 + D + m] + d.f2 * u[gk] * u[gl];
      }
    }
  }
}

// Adjoint of activation_forward; consumes abar, produces ubar in place of
// abar's storage slot passed separately, and accumulates the slope
// cotangent (d/d alpha through u = scale*alpha*z).
template <int D, int O>
double activation_backward(int n, double s, double scale, Activation kind,
                           const double* z, const double* abar, double* ubar) {
  constexpr int C = 1 + (O >= 1 ? D : 0) + (O >= 2 ? D * (D + 1) / 2 : 0);
  constexpr auto pairs = hess_pairs<D>();
  double alpha_bar = 0.0;
  for (int i = 0; i < n; ++i) {
    const double* zi = z + static_cast<std::size_t>(i) * C;
    const double* ab = abar + static_cast<std::size_t>(i) * C;
    double* ub = ubar + static_cast<std::size_t>(i) * C;
    double u[C];
    for (int c = 0; c < C; ++c) u[c] = s * zi[c];
    const ActDerivs d = activation_derivs(kind, u[0]);

    double v0 = d.f1 * ab[0];
    if constexpr (O >= 1) {
      for (int k = 0; k < D; ++k) {
        ub[1 + k] = d.f1 * ab[1 + k];
        v0 += d.f2 * u[1 + k] * ab[1 + k];
      }
    }
    if constexpr (O >= 2) {
      for (int m = 0; m < D * (D + 1) / 2; ++m) {
        const int gk = 1 + pairs[m][0];
        const int gl = 1 + pairs[m][1];
        const double hb = ab[1 + D + m];
        ub[1 + D + m] = d.f1 * hb;
        if (gk == gl) {
          ub[gk] += 2.0 * d.f2 * u[gk] * hb;
        } else {
          ub[gk] += d.f2 * u[gl] * hb;
          ub[gl] += d.f2 * u[gk] * hb;
        }
        v0 += (d.f2 * u[1 + D + m] + d.f3 * u[gk] * u[gl]) * hb;
      }
    }
    ub[0] = v0;
    for (int c = 0; c < C; ++c) alpha_bar += ub[c] * scale * zi[c];
  }
  return alpha_bar;
}

template <int C>
void affine_backward(int n_out, int n_in, const double* w, const double* a_in,
                     const double* zbar, double* wbar, double* bbar, double* abar) {
  if (abar) std::memset(abar, 0, sizeof(double) * n_in * C);
  for (int i = 0; i < n_out; ++i) {
    const double* zb = zbar + static_cast<std::size_t>(i) * C;
    const double* wrow = w + static_cast<std::size_t>(i) * n_in;
    double* wbrow = wbar + static_cast<std::size_t>(i) * n_in;
    for (int j = 0; j < n_in; ++j) {
      const double* aj = a_in + static_cast<std::size_t>(j) * C;
      double acc = 0.0;
      for (int c = 0; c < C; ++c) acc += zb[c] * aj[c];
      wbrow[j] += acc;
      if (abar) {
        double* ab = abar + static_cast<std::size_t>(j) * C;
        const double wij = wrow[j];
        for (int c = 0; c < C; ++c) ab[c] += wij * zb[c];
      }
    }
    bbar[i] += zb[0];
  }
}

template <int D, typename F>
auto dispatch_order(JetOrder order, F&& f) {
  switch (order) {
    case JetOrder::kValue: return f(std::integral_constant<int, 0>{});
    case JetOrder::kGradient: return f(std::integral_constant<int, 1>{});
    case JetOrder::kHessian: return f(std::integral_constant<int, 2>{});
  }
  return f(std::integral_constant<int, 2>{});
}

}  // namespace

template <int D>
void ForwardTrace<D>::prepare(const NetworkParams& params, JetOrder ord) {
  const int L = params.num_layers();
  const int c = jet_comps(D, ord);
  if (order == ord && comps == c && sizes == params.layer_sizes) return;
  order = ord;
  comps = c;
  num_layers = L;
  sizes = params.layer_sizes;
  a.assign(L, {});
  z.assign(L, {});
  for (int l = 0; l < L; ++l) {
    a[l].assign(static_cast<std::size_t>(sizes[l]) * c, 0.0);
    z[l].assign(static_cast<std::size_t>(sizes[l + 1]) * c, 0.0);
  }
  const std::size_t wmax = static_cast<std::size_t>(params.max_width()) * c;
  zbar.assign(wmax, 0.0);
  abar.assign(wmax, 0.0);
  ubar_scratch.assign(wmax, 0.0);
}

template <int D>
void forward_jets(const NetworkParams& params, const std::array<double, D>& x,
                  JetOrder order, ForwardTrace<D>& trace) {
  if (params.input_dim() != D)
    throw ConfigError("network input size does not match spatial dimension");
  trace.prepare(params, order);
  const int C = trace.comps;
  const int L = trace.num_layers;

  // seed input jets
  std::fill(trace.a[0].begin(), trace.a[0].end(), 0.0);
  for (int k = 0; k < D; ++k) {
    trace.a[0][static_cast<std::size_t>(k) * C] = x[k];
    if (order >= JetOrder::kGradient) trace.a[0][static_cast<std::size_t>(k) * C + 1 + k] = 1.0;
  }

  dispatch_order<D>(order, [&](auto o) {
    constexpr int O = decltype(o)::value;
    constexpr int CC = 1 + (O >= 1 ? D : 0) + (O >= 2 ? D * (D + 1) / 2 : 0);
    for (int l = 0; l < L; ++l) {
      affine_forward<CC>(trace.sizes[l + 1], trace.sizes[l], params.weights(l),
                         params.biases(l), trace.a[l].data(), trace.z[l].data());
      if (l < L - 1) {
        const double s = params.scale * params.alpha(l);
        activation_forward<D, O>(trace.sizes[l + 1], s, params.kind,
                                 trace.z[l].data(), trace.a[l + 1].data());
      }
    }
  });
}

template <int D>
void backward_jets(const NetworkParams& params, ForwardTrace<D>& trace,
                   std::span<const double> output_cotangents,
                   std::span<double> grad) {
  const int L = trace.num_layers;
  std::copy(output_cotangents.begin(), output_cotangents.end(), trace.zbar.begin());

  dispatch_order<D>(trace.order, [&](auto o) {
    constexpr int O = decltype(o)::value;
    constexpr int CC = 1 + (O >= 1 ? D : 0) + (O >= 2 ? D * (D + 1) / 2 : 0);
    for (int l = L - 1; l >= 0; --l) {
      double* wbar = grad.data() + params.weight_offset(l);
      double* bbar = grad.data() + params.bias_offset(l);
      affine_backward<CC>(trace.sizes[l + 1], trace.sizes[l], params.weights(l),
                          trace.a[l].data(), trace.zbar.data(), wbar, bbar,
                          l > 0 ? trace.abar.data() : nullptr);
      if (l > 0) {
        const double s = params.scale * params.alpha(l - 1);
        const double alpha_bar = activation_backward<D, O>(
            trace.sizes[l], s, params.scale, params.kind, trace.z[l - 1].data(),
            trace.abar.data(), trace.ubar_scratch.data());
        grad[params.alpha_offset(l - 1)] += alpha_bar;
        const std::size_t n = static_cast<std::size_t>(trace.sizes[l]) * CC;
        for (std::size_t i = 0; i < n; ++i) trace.zbar[i] = s * trace.ubar_scratch[i];
      }
    }
  });
}

template <int D>
void comps_to_jet(std::span<const double> comps, JetOrder order, Jet<D>& jet) {
  jet = Jet<D>{};
  jet.value = comps[0];
  if (order >= JetOrder::kGradient)
    for (int k = 0; k < D; ++k) jet.grad[k] = comps[1 + k];
  if (order >= JetOrder::kHessian)
    for (int m = 0; m < Jet<D>::kHessSize; ++m) jet.hess[m] = comps[1 + D + m];
}

template <int D>
void jet_to_comps(const Jet<D>& jet, JetOrder order, std::span<double> comps) {
  comps[0] = jet.value;
  if (order >= JetOrder::kGradient)
    for (int k = 0; k < D; ++k) comps[1 + k] = jet.grad[k];
  if (order >= JetOrder::kHessian)
    for (int m = 0; m < Jet<D>::kHessSize; ++m) comps[1 + D + m] = jet.hess[m];
}

template <int D>
std::vector<Jet<D>> eval_jet2(const NetworkParams& params,
                              const std::array<double, D>& x, JetOrder order) {
  ForwardTrace<D> trace;
  forward_jets<D>(params, x, order, trace);
  const int C = trace.comps;
  std::vector<Jet<D>> out(params.output_dim());
  for (int k = 0; k < params.output_dim(); ++k)
    comps_to_jet<D>(std::span<const double>(trace.output_comps().data() +
                                            static_cast<std::size_t>(k) * C, C),
                    order, out[k]);
  return out;
}

template <int D>
std::vector<Jet<D>> forward_constrained(const NetworkParams& params,
                                        const BcAnsatz& ansatz,
                                        const std::array<double, D>& x,
                                        JetOrder order) {
  std::vector<Jet<D>> out = eval_jet2<D>(params, x, order);
  for (int k = 0; k < static_cast<int>(out.size()); ++k) {
    Jet<D> m, shift;
    ansatz_transform<D>(ansatz, x, k, m, shift);
    out[k] = m * out[k] + shift;
    // keep dropped derivative slots zeroed when a lower order was asked for
    if (order < JetOrder::kHessian) out[k].hess = {};
    if (order < JetOrder::kGradient) out[k].grad = {};
  }
  return out;
}

template <int D>
Jet<D> jet_mul_pullback(const Jet<D>& m, const Jet<D>& rbar) {
  constexpr auto pairs = hess_pairs<D>();
  Jet<D> ybar;
  ybar.value = rbar.value * m.value;
  for (int k = 0; k < D; ++k) ybar.value += rbar.grad[k] * m.grad[k];
  for (int h = 0; h < Jet<D>::kHessSize; ++h) ybar.value += rbar.hess[h] * m.hess[h];
  for (int k = 0; k < D; ++k) ybar.grad[k] = rbar.grad[k] * m.value;
  for (int h = 0; h < Jet<D>::kHessSize; ++h) {
    const int k = pairs[h][0], l = pairs[h][1];
    if (k == l) {
      ybar.grad[k] += 2.0 * m.grad[k] * rbar.hess[h];
    } else {
      ybar.grad[k] += m.grad[l] * rbar.hess[h];
      ybar.grad[l] += m.grad[k] * rbar.hess[h];
    }
    ybar.hess[h] = rbar.hess[h] * m.value;
  }
  return ybar;
}

template Jet<1> jet_mul_pullback<1>(const Jet<1>&, const Jet<1>&);
template Jet<2> jet_mul_pullback<2>(const Jet<2>&, const Jet<2>&);

template <int D>
double loss_param_gradient(const NetworkParams& params,
                           std::span<const std::array<double, D>> points,
                           JetOrder order, const PointLossFn<D>& term,
                           std::span<double> grad) {
  ForwardTrace<D> trace;
  const int n_out = params.output_dim();
  std::vector<Jet<D>> outputs(n_out), cotangents(n_out);
  std::vector<double> cobar;
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    forward_jets<D>(params, points[i], order, trace);
    const int C = trace.comps;
    for (int k = 0; k < n_out; ++k)
      comps_to_jet<D>(std::span<const double>(trace.output_comps().data() +
                                              static_cast<std::size_t>(k) * C, C),
                      order, outputs[k]);
    for (auto& c : cotangents) c = Jet<D>{};
    const double value = term(i, outputs, cotangents);
    if (!std::isfinite(value)) {
      std::ostringstream msg;
      msg << "non-finite loss term at point " << i << " (";
      for (int k = 0; k < D; ++k) msg << (k ? ", " : "") << points[i][k];
      msg << ")";
      throw NumericalError(msg.str());
    }
    total += value;
    cobar.assign(static_cast<std::size_t>(n_out) * C, 0.0);
    for (int k = 0; k < n_out; ++k)
      jet_to_comps<D>(cotangents[k], order,
                      std::span<double>(cobar.data() + static_cast<std::size_t>(k) * C, C));
    backward_jets<D>(params, trace, cobar, grad);
  }
  return total;
}

double fd_check(const std::function<double(std::span<const double>)>& f,
                std::span<const double> x, std::span<const double> analytic_grad,
                double step) {
  std::vector<double> xs(x.begin(), x.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double saved = xs[i];
    xs[i] = saved + step;
    const double fp = f(xs);
    xs[i] = saved - step;
    const double fm = f(xs);
    xs[i] = saved;
    const double fd = (fp - fm) / (2.0 * step);
    const double g = analytic_grad[i];
    double disc;
    if (!std::isfinite(fd) || !std::isfinite(g)) {
      disc = std::numeric_limits<double>::infinity();
    } else {
      disc = std::abs(g - fd) / (std::abs(g) + std::abs(fd) + DBL_EPSILON);
    }
    worst = std::max(worst, disc);
  }
  return worst;
}

template <int D>
double fd_check(const NetworkParams& params,
                std::span<const std::array<double, D>> points, JetOrder order,
                const PointLossFn<D>& term, double step) {
  std::vector<double> grad(params.values.size(), 0.0);
  loss_param_gradient<D>(params, points, order, term, grad);
  NetworkParams probe = params;
  auto f = [&](std::span<const double> v) {
    probe.values.assign(v.begin(), v.end());
    ForwardTrace<D> trace;
    std::vector<Jet<D>> outputs(probe.output_dim()), cot(probe.output_dim());
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      forward_jets<D>(probe, points[i], order, trace);
      const int C = trace.comps;
      for (int k = 0; k < probe.output_dim(); ++k)
        comps_to_jet<D>(std::span<const double>(trace.output_comps().data() +
                                                static_cast<std::size_t>(k) * C, C),
                        order, outputs[k]);
      total += term(i, outputs, cot);
    }
    return total;
  };
  return fd_check(f, params.values, grad, step);
}

template struct ForwardTrace<1>;
template struct ForwardTrace<2>;
template void forward_jets<1>(const NetworkParams&, const std::array<double, 1>&, JetOrder, ForwardTrace<1>&);
template void forward_jets<2>(const NetworkParams&, const std::array<double, 2>&, JetOrder, ForwardTrace<2>&);
template void backward_jets<1>(const NetworkParams&, ForwardTrace<1>&, std::span<const double>, std::span<double>);
template void backward_jets<2>(const NetworkParams&, ForwardTrace<2>&, std::span<const double>, std::span<double>);
template void comps_to_jet<1>(std::span<const double>, JetOrder, Jet<1>&);
template void comps_to_jet<2>(std::span<const double>, JetOrder, Jet<2>&);
template void jet_to_comps<1>(const Jet<1>&, JetOrder, std::span<double>);
template void jet_to_comps<2>(const Jet<2>&, JetOrder, std::span<double>);
template std::vector<Jet<1>> eval_jet2<1>(const NetworkParams&, const std::array<double, 1>&, JetOrder);
template std::vector<Jet<2>> eval_jet2<2>(const NetworkParams&, const std::array<double, 2>&, JetOrder);
template std::vector<Jet<1>> forward_constrained<1>(const NetworkParams&, const BcAnsatz&, const std::array<double, 1>&, JetOrder);
template std::vector<Jet<2>> forward_constrained<2>(const NetworkParams&, const BcAnsatz&, const std::array<double, 2>&, JetOrder);
template double loss_param_gradient<1>(const NetworkParams&, std::span<const std::array<double, 1>>, JetOrder, const PointLossFn<1>&, std::span<double>);
template double loss_param_gradient<2>(const NetworkParams&, std::span<const std::array<double, 2>>, JetOrder, const PointLossFn<2>&, std::span<double>);
template double fd_check<1>(const NetworkParams&, std::span<const std::array<double, 1>>, JetOrder, const PointLossFn<1>&, double);
template double fd_check<2>(const NetworkParams&, std::span<const std::array<double, 2>>, JetOrder, const PointLossFn<2>&, double);

}  // namespace xfrac
