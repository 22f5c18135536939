#include <doctest.h>

#include <cmath>
#include <random>

#include "xfrac/autodiff.hpp"
#include "xfrac/errors.hpp"

using namespace xfrac;

namespace {

double rel_err(double a, double b) {
  return std::abs(a - b) / (std::abs(a) + std::abs(b) + 1e-300);
}

NetworkParams linear_net(double w, double b) {
  NetworkParams p;
  p.layer_sizes = {1, 1};
  p.values = {w, b};
  return p;
}

double value_at(const NetworkParams& p, std::array<double, 1> x, int out = 0) {
  return eval_jet2<1>(p, x, JetOrder::kValue)[out].value;
}
double value_at2(const NetworkParams& p, std::array<double, 2> x, int out) {
  return eval_jet2<2>(p, x, JetOrder::kValue)[out].value;
}

}  // namespace

TEST_CASE("linear layer jet: y = 2x + 1") {
  const NetworkParams p = linear_net(2.0, 1.0);
  const auto f = eval_jet2<1>(p, {0.5}, JetOrder::kHessian);
  CHECK(f[0].value == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(f[0].grad[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(f[0].hess[0] == 0.0);
}

TEST_CASE("unit tanh network jet at zero") {
  NetworkParams p;
  p.layer_sizes = {1, 1, 1};
  p.scale = 1.0;
  p.values = {1.0, 0.0, 1.0, 1.0, 0.0};  // tanh passthrough
  const auto f = eval_jet2<1>(p, {0.0}, JetOrder::kHessian);
  CHECK(f[0].value == 0.0);
  CHECK(f[0].grad[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(f[0].hess[0] == doctest::Approx(0.0));
}

TEST_CASE("order request zeroes the higher slots") {
  const NetworkParams p = init_xavier({1, 6, 6, 2}, Activation::kTanh, 10.0, 21);
  const auto f = eval_jet2<1>(p, {0.3}, JetOrder::kValue);
  CHECK(f[0].grad[0] == 0.0);
  CHECK(f[0].hess[0] == 0.0);
}

TEST_CASE("spatial jets match central differences on a random 3-layer net") {
  const double h = 1e-4;
  SUBCASE("one dimension") {
    const NetworkParams p = init_xavier({1, 8, 8, 2}, Activation::kTanh, 10.0, 77);
    for (double x0 : {-0.6, 0.1, 0.8}) {
      const auto f = eval_jet2<1>(p, {x0}, JetOrder::kHessian);
      for (int k = 0; k < 2; ++k) {
        const double fp = value_at(p, {x0 + h}, k);
        const double fm = value_at(p, {x0 - h}, k);
        const double f0 = value_at(p, {x0}, k);
        CHECK(rel_err(f[k].grad[0], (fp - fm) / (2 * h)) < 1e-5);
        CHECK(rel_err(f[k].hess[0], (fp - 2 * f0 + fm) / (h * h)) < 1e-5);
      }
    }
  }
  SUBCASE("two dimensions with mixed partials") {
    const NetworkParams p = init_xavier({2, 6, 6, 3}, Activation::kSwish, 10.0, 78);
    const double x0 = 0.35, y0 = 0.6;
    const auto f = eval_jet2<2>(p, {x0, y0}, JetOrder::kHessian);
    for (int k = 0; k < 3; ++k) {
      const double fpx = value_at2(p, {x0 + h, y0}, k);
      const double fmx = value_at2(p, {x0 - h, y0}, k);
      const double fpy = value_at2(p, {x0, y0 + h}, k);
      const double fmy = value_at2(p, {x0, y0 - h}, k);
      const double f0 = value_at2(p, {x0, y0}, k);
      CHECK(rel_err(f[k].grad[0], (fpx - fmx) / (2 * h)) < 1e-5);
      CHECK(rel_err(f[k].grad[1], (fpy - fmy) / (2 * h)) < 1e-5);
      CHECK(rel_err(f[k].hess[0], (fpx - 2 * f0 + fmx) / (h * h)) < 1e-5);
      CHECK(rel_err(f[k].hess[2], (fpy - 2 * f0 + fmy) / (h * h)) < 1e-5);
      const double fpp = value_at2(p, {x0 + h, y0 + h}, k);
      const double fpm = value_at2(p, {x0 + h, y0 - h}, k);
      const double fmp = value_at2(p, {x0 - h, y0 + h}, k);
      const double fmm = value_at2(p, {x0 - h, y0 - h}, k);
      CHECK(rel_err(f[k].hess[1], (fpp - fpm - fmp + fmm) / (4 * h * h)) < 1e-5);
    }
  }
}

TEST_CASE("dimension mismatch raises an input-shape error") {
  const NetworkParams p = init_xavier({2, 4, 4, 3}, Activation::kTanh, 10.0, 5);
  CHECK_THROWS_AS(eval_jet2<1>(p, {0.0}, JetOrder::kValue), ConfigError);
}

TEST_CASE("stationary quadratic loss has zero parameter gradient") {
  const NetworkParams p = init_xavier({1, 5, 5, 2}, Activation::kTanh, 10.0, 31);
  const std::array<double, 1> pt{0.42};
  const double target = value_at(p, pt, 0);
  std::vector<std::array<double, 1>> points{pt};
  std::vector<double> grad(p.values.size(), 0.0);
  PointLossFn<1> term = [&](std::size_t, std::span<const Jet<1>> out,
                            std::span<Jet<1>> cot) {
    const double d = out[0].value - target;
    cot[0].value = 2.0 * d;
    return d * d;
  };
  const double loss = loss_param_gradient<1>(p, points, JetOrder::kValue, term, grad);
  CHECK(loss == 0.0);
  for (double g : grad) CHECK(g == 0.0);
}

TEST_CASE("weighted sum over a linear net has the hand-derived gradient") {
  const NetworkParams p = linear_net(1.7, -0.3);
  const std::vector<std::array<double, 1>> points{{0.2}, {-0.5}, {1.1}};
  const std::vector<double> w{2.0, -1.0, 0.5};
  std::vector<double> grad(p.values.size(), 0.0);
  PointLossFn<1> term = [&](std::size_t i, std::span<const Jet<1>> out,
                            std::span<Jet<1>> cot) {
    cot[0].value = w[i];
    return w[i] * out[0].value;
  };
  loss_param_gradient<1>(p, points, JetOrder::kValue, term, grad);
  // d/dW sum w_k (W x_k + b) = sum w_k x_k; d/db = sum w_k
  double swx = 0.0, sw = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    swx += w[i] * points[i][0];
    sw += w[i];
  }
  CHECK(grad[0] == doctest::Approx(swx).epsilon(1e-14));
  CHECK(grad[1] == doctest::Approx(sw).epsilon(1e-14));
}

namespace {

// Gamma_4-shaped test loss: value, gradient-norm and Laplacian-norm terms
// of the last output, the same derivative paths the energy uses.
template <int D>
PointLossFn<D> gamma4_like_loss() {
  return [](std::size_t, std::span<const Jet<D>> out, std::span<Jet<D>> cot) {
    const Jet<D>& phi = out.back();
    double g2 = 0.0;
    for (int k = 0; k < D; ++k) g2 += phi.grad[k] * phi.grad[k];
    const double lap = phi.laplacian();
    const double value = phi.value * phi.value + 0.5 * g2 + 0.25 * lap * lap;
    Jet<D>& c = cot.back();
    c.value = 2.0 * phi.value;
    for (int k = 0; k < D; ++k) c.grad[k] = phi.grad[k];
    if constexpr (D == 1) {
      c.hess[0] = 0.5 * lap;
    } else {
      c.hess[0] = 0.5 * lap;
      c.hess[2] = 0.5 * lap;
    }
    // couple the displacement gradient too
    const Jet<D>& u = out[0];
    double extra = 0.0;
    for (int k = 0; k < D; ++k) {
      extra += 0.3 * u.grad[k] * u.grad[k];
      cot[0].grad[k] = 0.6 * u.grad[k];
    }
    return value + extra;
  };
}

}  // namespace

TEST_CASE("parameter gradients of derivative-bearing losses match finite differences") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> unit(-0.9, 0.9);

  SUBCASE("1D tanh") {
    const NetworkParams p = init_xavier({1, 7, 7, 2}, Activation::kTanh, 10.0, 900);
    std::vector<std::array<double, 1>> pts(5);
    for (auto& x : pts) x = {unit(rng)};
    const double disc = fd_check<1>(p, pts, JetOrder::kHessian, gamma4_like_loss<1>(), 1e-4);
    CHECK(disc < 1e-5);
  }
  SUBCASE("2D swish") {
    const NetworkParams p = init_xavier({2, 6, 6, 6, 3}, Activation::kSwish, 5.0, 901);
    std::vector<std::array<double, 2>> pts(5);
    for (auto& x : pts) x = {unit(rng), unit(rng)};
    const double disc = fd_check<2>(p, pts, JetOrder::kHessian, gamma4_like_loss<2>(), 1e-4);
    CHECK(disc < 1e-5);
  }
}

TEST_CASE("fd_check edge behavior") {
  SUBCASE("linear net, quadratic loss, tight step") {
    const NetworkParams p = linear_net(0.8, 0.1);
    std::vector<std::array<double, 1>> pts{{0.5}, {-0.25}};
    PointLossFn<1> term = [](std::size_t, std::span<const Jet<1>> out,
                             std::span<Jet<1>> cot) {
      cot[0].value = 2.0 * (out[0].value - 1.0);
      return (out[0].value - 1.0) * (out[0].value - 1.0);
    };
    CHECK(fd_check<1>(p, pts, JetOrder::kValue, term, 1e-5) < 1e-9);
  }
  SUBCASE("empty coordinate vector reports zero") {
    auto f = [](std::span<const double>) { return 0.0; };
    CHECK(fd_check(f, {}, {}, 1e-5) == 0.0);
  }
}

TEST_CASE("gradient is linear in the loss") {
  const NetworkParams p = init_xavier({1, 6, 6, 2}, Activation::kTanh, 10.0, 55);
  std::vector<std::array<double, 1>> pts{{0.3}, {-0.7}, {0.9}};

  PointLossFn<1> l1 = [](std::size_t, std::span<const Jet<1>> out, std::span<Jet<1>> cot) {
    cot[0].value = 2.0 * out[0].value;
    return out[0].value * out[0].value;
  };
  PointLossFn<1> l2 = [](std::size_t, std::span<const Jet<1>> out, std::span<Jet<1>> cot) {
    cot[1].grad[0] = 1.0;
    return out[1].grad[0];
  };
  const double a = 2.5, b = -1.25;
  PointLossFn<1> combo = [&](std::size_t i, std::span<const Jet<1>> out,
                             std::span<Jet<1>> cot) {
    std::vector<Jet<1>> c1(out.size()), c2(out.size());
    const double v1 = l1(i, out, c1);
    const double v2 = l2(i, out, c2);
    for (std::size_t k = 0; k < out.size(); ++k) {
      cot[k].value = a * c1[k].value + b * c2[k].value;
      cot[k].grad[0] = a * c1[k].grad[0] + b * c2[k].grad[0];
      cot[k].hess[0] = a * c1[k].hess[0] + b * c2[k].hess[0];
    }
    return a * v1 + b * v2;
  };

  std::vector<double> g1(p.values.size(), 0.0), g2(p.values.size(), 0.0),
      gc(p.values.size(), 0.0);
  loss_param_gradient<1>(p, pts, JetOrder::kGradient, l1, g1);
  loss_param_gradient<1>(p, pts, JetOrder::kGradient, l2, g2);
  loss_param_gradient<1>(p, pts, JetOrder::kGradient, combo, gc);
  for (std::size_t i = 0; i < gc.size(); ++i) {
    const double expect = a * g1[i] + b * g2[i];
    CHECK(std::abs(gc[i] - expect) <= 1e-12 * (1.0 + std::abs(expect)));
  }
}

TEST_CASE("non-finite loss reports the offending point") {
  const NetworkParams p = linear_net(1.0, 0.0);
  std::vector<std::array<double, 1>> pts{{0.1}, {0.2}};
  std::vector<double> grad(p.values.size(), 0.0);
  PointLossFn<1> term = [](std::size_t i, std::span<const Jet<1>>, std::span<Jet<1>>) {
    return i == 1 ? std::numeric_limits<double>::quiet_NaN() : 0.0;
  };
  CHECK_THROWS_AS(loss_param_gradient<1>(p, pts, JetOrder::kValue, term, grad),
                  NumericalError);
}
