#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace xfrac {

// Objective callback: returns the loss at x and, when need_grad, fills
// grad (same length as x).
using Objective =
    std::function<double(std::span<const double> x, std::span<double> grad, bool need_grad)>;

struct TraceEntry {
  int iteration = 0;
  double loss = 0.0;
  double grad_inf = 0.0;
  std::string stage;  // "adam" | "sgd" | "lbfgs"
};

struct OptimizerResult {
  double final_loss = 0.0;
  int iterations = 0;
  std::string termination;  // max_iters | loss_tol | grad_tol | line_search | aborted
};

struct FirstOrderOptions {
  int steps = 1000;
  double learning_rate = 1e-3;
  double loss_tol = 1e-12;  // stop when |delta loss| drops below this
  // Adam moment constants
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct LbfgsOptions {
  int max_iters = 1000;
  int memory = 20;
  double grad_tol = 1e-9;   // on the max-norm of the gradient
  double loss_tol = 1e-12;  // on |delta loss| between accepted iterates
  double armijo_c = 1e-4;
  double shrink = 0.5;
  int max_line_search = 50;
};

// Adam with bias correction. Aborts (restoring the last finite iterate)
// if the loss or gradient turns non-finite.
OptimizerResult adam_minimize(const Objective& f, std::vector<double>& x,
                              const FirstOrderOptions& opts,
                              std::vector<TraceEntry>* trace);

// Plain gradient descent, same stopping rules as Adam.
OptimizerResult sgd_minimize(const Objective& f, std::vector<double>& x,
                             const FirstOrderOptions& opts,
                             std::vector<TraceEntry>* trace);

// L-BFGS with two-loop recursion and backtracking Armijo line search.
// Accepted losses never increase; a failed line search returns the best
// iterate found so far.
OptimizerResult lbfgs_minimize(const Objective& f, std::vector<double>& x,
                               const LbfgsOptions& opts,
                               std::vector<TraceEntry>* trace);

}  // namespace xfrac
