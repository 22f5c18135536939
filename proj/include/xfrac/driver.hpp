#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "xfrac/assembly.hpp"
#include "xfrac/optimize.hpp"
#include "xfrac/problem.hpp"

namespace xfrac {

struct StepResult {
  int step = 0;
  double u_applied = 0.0;
  double initial_loss = 0.0;  // loss at the start of the step (warm start)
  double final_loss = 0.0;
  double reaction_force = 0.0;  // kN per unit thickness
  double err_u = -1.0;          // percent; bar1d only
  double err_phi = -1.0;        // percent; bar1d only
  std::vector<TraceEntry> trace;
  std::vector<std::size_t> points_per_subdomain;
  int refined_elements = 0;
  int phi_refined_in_subdomains_mask = 0;  // bit s set when a phi-refine hit s
  std::string termination;
};

struct RunResult {
  std::vector<StepResult> steps;
  bool aborted = false;
  std::string abort_reason;
};

// Traction resultant along a straight boundary edge: integral of
// (sigma . n) . n with n the outward normal of that edge. The segment must
// lie on the domain boundary (GeometryError otherwise).
double reaction_force(EnergySystem<2>& system, const std::array<double, 2>& p0,
                      const std::array<double, 2>& p1);

// Quasi-static displacement-stepping solver. Dimension is chosen by the
// preset; the facade hides the 1D/2D template split.
class Solver {
 public:
  explicit Solver(const ProblemSpec& spec);
  ~Solver();
  Solver(Solver&&) noexcept;
  Solver& operator=(Solver&&) noexcept;

  // Runs all load steps: minimize (warmup + L-BFGS), update history,
  // refine and re-minimize, record. on_step fires after each step.
  RunResult run(const std::function<void(const StepResult&)>& on_step = {});

  // Constrained field values (u, v, phi) at a point; v = 0 in 1D.
  std::array<double, 3> fields(const std::array<double, 2>& x) const;

  const Mesh& mesh() const;
  const ProblemSpec& spec() const;

  // (point id, H) pairs in deterministic mesh order.
  std::vector<std::pair<std::uint64_t, double>> history_snapshot() const;

  // Current total loss at the stored parameters (serial evaluation).
  double current_loss();

  void save_checkpoints(const std::string& dir) const;
  void set_exec(Exec e);

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace xfrac
