#include "xfrac/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace xfrac {
namespace {

double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

void push_trace(std::vector<TraceEntry>* trace, int it, double loss, double ginf,
                const char* stage) {
  if (trace) trace->push_back({it, loss, ginf, stage});
}

OptimizerResult first_order(const Objective& f, std::vector<double>& x,
                            const FirstOrderOptions& opts,
                            std::vector<TraceEntry>* trace, bool adam) {
  const std::size_t n = x.size();
  std::vector<double> grad(n, 0.0), m(n, 0.0), v(n, 0.0), best(x);
  OptimizerResult res;
  double prev_loss = std::numeric_limits<double>::infinity();

  for (int it = 0; it < opts.steps; ++it) {
    const double loss = f(x, grad, true);
    if (!std::isfinite(loss) || !all_finite(grad)) {
      x = best;
      res.termination = "aborted";
      res.final_loss = f(x, grad, false);
      res.iterations = it;
      return res;
    }
    best = x;
    push_trace(trace, it, loss, inf_norm(grad), adam ? "adam" : "sgd");
    if (std::abs(prev_loss - loss) < opts.loss_tol) {
      res.termination = "loss_tol";
      res.final_loss = loss;
      res.iterations = it + 1;
      return res;
    }
    prev_loss = loss;

    if (adam) {
      const double b1t = 1.0 - std::pow(opts.beta1, it + 1);
      const double b2t = 1.0 - std::pow(opts.beta2, it + 1);
      for (std::size_t i = 0; i < n; ++i) {
        m[i] = opts.beta1 * m[i] + (1.0 - opts.beta1) * grad[i];
        v[i] = opts.beta2 * v[i] + (1.0 - opts.beta2) * grad[i] * grad[i];
        const double mhat = m[i] / b1t;
        const double vhat = v[i] / b2t;
        x[i] -= opts.learning_rate * mhat / (std::sqrt(vhat) + opts.epsilon);
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) x[i] -= opts.learning_rate * grad[i];
    }
  }
  res.termination = "max_iters";
  res.final_loss = f(x, grad, false);
  res.iterations = opts.steps;
  return res;
}

}  // namespace

OptimizerResult adam_minimize(const Objective& f, std::vector<double>& x,
                              const FirstOrderOptions& opts,
                              std::vector<TraceEntry>* trace) {
  return first_order(f, x, opts, trace, true);
}

OptimizerResult sgd_minimize(const Objective& f, std::vector<double>& x,
                             const FirstOrderOptions& opts,
                             std::vector<TraceEntry>* trace) {
  return first_order(f, x, opts, trace, false);
}

OptimizerResult lbfgs_minimize(const Objective& f, std::vector<double>& x,
                               const LbfgsOptions& opts,
                               std::vector<TraceEntry>* trace) {
  const std::size_t n = x.size();
  OptimizerResult res;
  std::vector<double> grad(n, 0.0), dir(n, 0.0), x_new(n, 0.0), grad_new(n, 0.0);
  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;

  double loss = f(x, grad, true);
  if (!std::isfinite(loss) || !all_finite(grad)) {
    res.termination = "aborted";
    res.final_loss = loss;
    return res;
  }
  std::vector<double> best_x = x;
  double best_loss = loss;

  for (int it = 0; it < opts.max_iters; ++it) {
    const double ginf = inf_norm(grad);
    push_trace(trace, it, loss, ginf, "lbfgs");
    if (ginf < opts.grad_tol) {
      res.termination = "grad_tol";
      res.final_loss = loss;
      res.iterations = it;
      return res;
    }

    // two-loop recursion
    dir.assign(grad.begin(), grad.end());
    std::vector<double> alpha(s_hist.size(), 0.0);
    for (int k = static_cast<int>(s_hist.size()) - 1; k >= 0; --k) {
      double sd = 0.0;
      for (std::size_t i = 0; i < n; ++i) sd += s_hist[k][i] * dir[i];
      alpha[k] = rho_hist[k] * sd;
      for (std::size_t i = 0; i < n; ++i) dir[i] -= alpha[k] * y_hist[k][i];
    }
    if (!s_hist.empty()) {
      double sy = 0.0, yy = 0.0;
      const auto& s_last = s_hist.back();
      const auto& y_last = y_hist.back();
      for (std::size_t i = 0; i < n; ++i) {
        sy += s_last[i] * y_last[i];
        yy += y_last[i] * y_last[i];
      }
      const double gamma = yy > 0.0 ? sy / yy : 1.0;
      for (std::size_t i = 0; i < n; ++i) dir[i] *= gamma;
    }
    for (int k = 0; k < static_cast<int>(s_hist.size()); ++k) {
      double yd = 0.0;
      for (std::size_t i = 0; i < n; ++i) yd += y_hist[k][i] * dir[i];
      const double beta = rho_hist[k] * yd;
      for (std::size_t i = 0; i < n; ++i) dir[i] += (alpha[k] - beta) * s_hist[k][i];
    }
    for (std::size_t i = 0; i < n; ++i) dir[i] = -dir[i];

    double dg = 0.0;
    for (std::size_t i = 0; i < n; ++i) dg += dir[i] * grad[i];
    if (dg >= 0.0) {
      // not a descent direction; restart from steepest descent
      for (std::size_t i = 0; i < n; ++i) dir[i] = -grad[i];
      dg = 0.0;
      for (std::size_t i = 0; i < n; ++i) dg += dir[i] * grad[i];
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    // backtracking Armijo line search
    double t = 1.0;
    double loss_new = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < opts.max_line_search; ++ls) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + t * dir[i];
      loss_new = f(x_new, {}, false);
      if (std::isfinite(loss_new) && loss_new <= loss + opts.armijo_c * t * dg) {
        accepted = true;
        break;
      }
      t *= opts.shrink;
    }
    if (!accepted) {
      x = best_x;
      res.termination = "line_search";
      res.final_loss = best_loss;
      res.iterations = it;
      return res;
    }

    const double f_new = f(x_new, grad_new, true);
    if (!std::isfinite(f_new) || !all_finite(grad_new)) {
      x = best_x;
      res.termination = "aborted";
      res.final_loss = best_loss;
      res.iterations = it;
      return res;
    }

    double sy = 0.0, ss = 0.0, yy2 = 0.0;
    std::vector<double> s_vec(n), y_vec(n);
    for (std::size_t i = 0; i < n; ++i) {
      s_vec[i] = x_new[i] - x[i];
      y_vec[i] = grad_new[i] - grad[i];
      sy += s_vec[i] * y_vec[i];
      ss += s_vec[i] * s_vec[i];
      yy2 += y_vec[i] * y_vec[i];
    }
    if (sy > 1e-10 * std::sqrt(ss) * std::sqrt(yy2)) {
      s_hist.push_back(std::move(s_vec));
      y_hist.push_back(std::move(y_vec));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opts.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    } else {
      // Armijo-only backtracking cannot guarantee positive curvature;
      // a failed pair means the stored corrections mislead, so restart.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    const double delta = loss - f_new;
    x = x_new;
    loss = f_new;
    grad = grad_new;
    if (loss < best_loss) {
      best_loss = loss;
      best_x = x;
    }
    if (std::abs(delta) < opts.loss_tol) {
      res.termination = "loss_tol";
      res.final_loss = loss;
      res.iterations = it + 1;
      return res;
    }
  }
  res.termination = "max_iters";
  res.final_loss = loss;
  res.iterations = opts.max_iters;
  return res;
}

}  // namespace xfrac
