#include "xfrac/driver.hpp"

#include <algorithm>
#include <cmath>

#include "xfrac/errors.hpp"
#include "xfrac/phase_energy.hpp"

namespace xfrac {
namespace {

// Composite Gauss rule along one boundary edge, split at subdomain
// boundaries so each span is evaluated under its own network.
constexpr int kEdgeGauss = 24;

}  // namespace

double reaction_force(EnergySystem<2>& system, const std::array<double, 2>& p0,
                      const std::array<double, 2>& p1) {
  const Mesh& mesh = system.mesh();
  const Box& dom = mesh.domain;
  const double tol = 1e-12;
  int axis;       // axis along which the edge runs
  double fixed;   // the constant coordinate
  if (std::abs(p0[1] - p1[1]) < tol &&
      (std::abs(p0[1] - dom.lo[1]) < tol || std::abs(p0[1] - dom.hi[1]) < tol)) {
    axis = 0;
    fixed = p0[1];
  } else if (std::abs(p0[0] - p1[0]) < tol &&
             (std::abs(p0[0] - dom.lo[0]) < tol || std::abs(p0[0] - dom.hi[0]) < tol)) {
    axis = 1;
    fixed = p0[0];
  } else {
    throw GeometryError("reaction edge does not lie on the domain boundary");
  }

  const double a = std::min(p0[axis], p1[axis]);
  const double b = std::max(p0[axis], p1[axis]);

  // split points at subdomain boundaries along the edge
  std::vector<double> cuts{a, b};
  for (const auto& sub : mesh.subdomains) {
    for (double c : {sub.box.lo[axis], sub.box.hi[axis]})
      if (c > a + tol && c < b - tol) cuts.push_back(c);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [&](double x, double y) { return std::abs(x - y) < tol; }),
             cuts.end());

  std::vector<double> gn, gw;
  gauss_legendre(kEdgeGauss, gn, gw);

  double force = 0.0;
  for (std::size_t span = 0; span + 1 < cuts.size(); ++span) {
    const double lo = cuts[span], hi = cuts[span + 1];
    const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
    for (int g = 0; g < kEdgeGauss; ++g) {
      std::array<double, 2> x;
      x[axis] = c + h * gn[g];
      x[1 - axis] = fixed;
      // nudge inside so the subdomain lookup is unambiguous on the edge
      std::array<double, 2> probe = x;
      const double eps = 1e-9;
      probe[1 - axis] += (std::abs(fixed - dom.lo[1 - axis]) < tol ? eps : -eps);
      const int s = system.subdomain_of(probe);
      const auto sig = system.stress_at(s, x);
      // (sigma . n) . n with n along the fixed axis
      const double snn = axis == 0 ? sig[2] : sig[0];
      force += gw[g] * h * snn;
    }
  }
  return force;
}

struct Solver::Impl {
  virtual ~Impl() = default;
  virtual RunResult run(const std::function<void(const StepResult&)>& on_step) = 0;
  virtual std::array<double, 3> fields(const std::array<double, 2>& x) const = 0;
  virtual const Mesh& mesh() const = 0;
  virtual const ProblemSpec& spec() const = 0;
  virtual std::vector<std::pair<std::uint64_t, double>> history_snapshot() const = 0;
  virtual double current_loss() = 0;
  virtual void save_checkpoints(const std::string& dir) const = 0;
  virtual void set_exec(Exec e) = 0;
};

namespace {

template <int D>
struct SolverImpl final : Solver::Impl {
  ProblemSpec spec_;
  Mesh mesh_;
  std::unique_ptr<EnergySystem<D>> system_;
  std::vector<double> flat_;
  std::vector<std::size_t> alpha_indices_;  // frozen slots when not adaptive

  explicit SolverImpl(const ProblemSpec& spec) : spec_(spec) {
    spec_.validate();
    mesh_ = build_mesh(mesh_spec(spec_));
    for (auto& sub : mesh_.subdomains)
      for (auto& e : sub.elements)
        for (auto& q : e.points)
          if (q.inside_domain) q.history = spec_.initial_history(q.x);

    std::vector<NetworkParams> nets;
    const double scale = spec_.adaptive_slopes ? spec_.scale_c : 1.0;
    for (std::size_t s = 0; s < mesh_.subdomains.size(); ++s)
      nets.push_back(init_xavier(spec_.network_layers, spec_.activation, scale,
                                 spec_.seed + s));

    BodyForceFn<D> body = [this](const std::array<double, 2>& x) {
      const auto f = spec_.body_force(x);
      std::array<double, D> out;
      for (int k = 0; k < D; ++k) out[k] = f[k];
      return out;
    };
    system_ = std::make_unique<EnergySystem<D>>(&mesh_, std::move(nets),
                                                spec_.material, spec_.ansatz(), body);
    system_->set_penalties(spec_.w1, spec_.w2, spec_.l2_reg);

    flat_.resize(system_->num_params());
    system_->gather_params(flat_);
    if (!spec_.adaptive_slopes) {
      for (int s = 0; s < system_->num_nets(); ++s) {
        const NetworkParams& net = system_->net(s);
        for (int l = 0; l < net.num_layers() - 1; ++l)
          alpha_indices_.push_back(system_->net_offset(s) + net.alpha_offset(l));
      }
    }
  }

  Objective objective() {
    return [this](std::span<const double> x, std::span<double> grad, bool need_grad) {
      double loss;
      if (need_grad) {
        loss = system_->loss_and_grad(x, grad);
        for (std::size_t i : alpha_indices_) grad[i] = 0.0;
      } else {
        loss = system_->loss_only(x);
      }
      return loss;
    };
  }

  OptimizerResult minimize(bool first_step, std::vector<TraceEntry>& trace,
                           bool warmup_enabled) {
    const OptimizerConfig& oc = spec_.optimizer;
    Objective f = objective();
    OptimizerResult last;
    if (warmup_enabled) {
      FirstOrderOptions fo;
      fo.steps = first_step || oc.warmup_steps_later < 0 ? oc.warmup_steps
                                                         : oc.warmup_steps_later;
      fo.learning_rate = oc.warmup_lr;
      fo.loss_tol = oc.loss_tol;
      if (fo.steps > 0) {
        last = oc.warmup == "sgd" ? sgd_minimize(f, flat_, fo, &trace)
                                  : adam_minimize(f, flat_, fo, &trace);
        if (last.termination == "aborted")
          throw NumericalError("warmup optimizer hit a non-finite loss");
      }
    }
    LbfgsOptions lo;
    lo.max_iters = oc.lbfgs_max_iters;
    lo.memory = oc.lbfgs_memory;
    lo.grad_tol = oc.grad_tol;
    lo.loss_tol = oc.loss_tol;
    last = lbfgs_minimize(f, flat_, lo, &trace);
    if (last.termination == "aborted")
      throw NumericalError("L-BFGS hit a non-finite loss");
    system_->scatter_params(flat_);
    return last;
  }

  void update_history() {
    if (spec_.preset == Preset::kBar1d) return;  // fixed step-function seed
    for (auto& sub : mesh_.subdomains)
      for (auto& e : sub.elements)
        for (auto& q : e.points)
          if (q.inside_domain)
            q.history = history_update(q.history, system_->psi_plus_at(sub.id, q.x));
  }

  ScalarField phi_field() {
    return [this](const std::array<double, 2>& x) {
      const int s = system_->subdomain_of(x);
      return system_->fields_at(s, x, JetOrder::kValue)[D].value;
    };
  }

  StressField stress_field() {
    return [this](const std::array<double, 2>& x) {
      return system_->stress_at(system_->subdomain_of(x), x);
    };
  }

  ScalarField history_rule() {
    return [this](const std::array<double, 2>& x) {
      const double h0 = spec_.initial_history(x);
      if (spec_.preset == Preset::kBar1d) return h0;
      return std::max(h0, system_->psi_plus_at(system_->subdomain_of(x), x));
    };
  }

  double step_reaction_force() {
    if constexpr (D == 2) {
      return reaction_force(*system_, {mesh_.domain.lo[0], mesh_.domain.hi[1]},
                            {mesh_.domain.hi[0], mesh_.domain.hi[1]});
    } else {
      // end traction of the bar at x = +1
      const int s = system_->subdomain_of({mesh_.domain.hi[0], 0.0});
      return system_->stress_at(s, {mesh_.domain.hi[0], 0.0})[0];
    }
  }

  void bar_errors(StepResult& r) {
    if (spec_.preset != Preset::kBar1d) return;
    std::vector<double> u_pred(kBarGridPoints), u_ex(kBarGridPoints);
    std::vector<double> phi_pred(kBarGridPoints), phi_ex(kBarGridPoints);
    for (int i = 0; i < kBarGridPoints; ++i) {
      const double x = -1.0 + 2.0 * i / (kBarGridPoints - 1);
      const auto f = fields({x, 0.0});
      const BarSolution ex = exact_bar_solution(x, spec_.material.ell_0);
      u_pred[i] = f[0];
      phi_pred[i] = f[2];
      u_ex[i] = ex.u;
      phi_ex[i] = ex.phi;
    }
    r.err_u = relative_l2(u_pred, u_ex);
    r.err_phi = relative_l2(phi_pred, phi_ex);
  }

  RunResult run(const std::function<void(const StepResult&)>& on_step) override {
    RunResult result;
    for (int k = 1; k <= spec_.n_steps; ++k) {
      StepResult r;
      r.step = k;
      r.u_applied = k * spec_.delta_u;
      system_->set_applied_displacement(r.u_applied);
      try {
        r.initial_loss = system_->loss_only(flat_);
        OptimizerResult opt = minimize(k == 1, r.trace, true);
        r.termination = opt.termination;
        r.final_loss = opt.final_loss;

        update_history();

        RefineOptions ro{spec_.phi_threshold, spec_.rho_percent, spec_.max_level};
        for (int cycle = 0; cycle < spec_.refine_cycles; ++cycle) {
          RefineReport rep = refine(mesh_, phi_field(), stress_field(), history_rule(), ro);
          if (rep.refined.empty()) break;
          r.refined_elements += static_cast<int>(rep.refined.size());
          for (const auto& e : rep.refined)
            if (e.phi_triggered) r.phi_refined_in_subdomains_mask |= 1 << e.subdomain;
          OptimizerResult again = minimize(false, r.trace, true);
          r.termination = again.termination;
          r.final_loss = again.final_loss;
        }

        r.reaction_force = step_reaction_force();
        bar_errors(r);
        for (std::size_t s = 0; s < mesh_.subdomains.size(); ++s)
          r.points_per_subdomain.push_back(mesh_.subdomain_points(static_cast<int>(s)));
      } catch (const NumericalError& e) {
        result.aborted = true;
        result.abort_reason = e.what();
        return result;
      }
      result.steps.push_back(r);
      if (on_step) on_step(result.steps.back());
    }
    return result;
  }

  std::array<double, 3> fields(const std::array<double, 2>& x) const override {
    const int s = system_->subdomain_of(x);
    const auto f = system_->fields_at(s, x, JetOrder::kValue);
    if constexpr (D == 1) return {f[0].value, 0.0, f[1].value};
    else return {f[0].value, f[1].value, f[2].value};
  }

  const Mesh& mesh() const override { return mesh_; }
  const ProblemSpec& spec() const override { return spec_; }

  std::vector<std::pair<std::uint64_t, double>> history_snapshot() const override {
    std::vector<std::pair<std::uint64_t, double>> out;
    for (const auto& sub : mesh_.subdomains)
      for (const auto& e : sub.elements)
        for (const auto& q : e.points) out.emplace_back(q.id, q.history);
    return out;
  }

  double current_loss() override { return system_->loss_only(flat_); }

  void save_checkpoints(const std::string& dir) const override {
    for (int s = 0; s < system_->num_nets(); ++s)
      save_checkpoint(system_->net(s), dir + "/net_" + std::to_string(s) + ".txt");
  }

  void set_exec(Exec e) override { system_->set_exec(e); }
};

}  // namespace

Solver::Solver(const ProblemSpec& spec) {
  if (spec.dim == 1)
    impl_ = std::make_unique<SolverImpl<1>>(spec);
  else
    impl_ = std::make_unique<SolverImpl<2>>(spec);
}

Solver::~Solver() = default;
Solver::Solver(Solver&&) noexcept = default;
Solver& Solver::operator=(Solver&&) noexcept = default;

RunResult Solver::run(const std::function<void(const StepResult&)>& on_step) {
  return impl_->run(on_step);
}
std::array<double, 3> Solver::fields(const std::array<double, 2>& x) const {
  return impl_->fields(x);
}
const Mesh& Solver::mesh() const { return impl_->mesh(); }
const ProblemSpec& Solver::spec() const { return impl_->spec(); }
std::vector<std::pair<std::uint64_t, double>> Solver::history_snapshot() const {
  return impl_->history_snapshot();
}
double Solver::current_loss() { return impl_->current_loss(); }
void Solver::save_checkpoints(const std::string& dir) const {
  impl_->save_checkpoints(dir);
}
void Solver::set_exec(Exec e) { impl_->set_exec(e); }

}  // namespace xfrac
