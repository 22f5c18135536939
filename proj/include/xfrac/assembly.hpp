#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "xfrac/autodiff.hpp"
#include "xfrac/elasticity.hpp"
#include "xfrac/mesh.hpp"
#include "xfrac/network.hpp"

namespace xfrac {

enum class Exec { kSerial, kParallel };

// Body force at a point; presets without body load return zeros.
template <int D>
using BodyForceFn = std::function<std::array<double, D>(const std::array<double, 2>&)>;

// Couples one network per subdomain to the quadrature mesh and evaluates
// the total variational energy
//
//   L = sum_s interior(s) + sum_ij interface(i,j) + l2_reg * |theta|^2
//
// together with its gradient in the concatenated parameter vector
// (subdomain-major, each slice in the network's canonical flat order).
//
// Reductions run over fixed-size point chunks combined in chunk order, so
// the OpenMP path is bitwise identical to the serial reference for any
// thread count.
template <int D>
class EnergySystem {
 public:
  EnergySystem(Mesh* mesh, std::vector<NetworkParams> nets, MaterialModel material,
               BcAnsatz ansatz, BodyForceFn<D> body_force);

  std::size_t num_params() const { return offsets_.back(); }
  std::size_t net_offset(int s) const { return offsets_[s]; }
  int num_nets() const { return static_cast<int>(nets_.size()); }

  void set_penalties(double w1, double w2, double l2_reg);
  void set_applied_displacement(double u);
  double applied_displacement() const { return ansatz_.applied_displacement; }
  void set_exec(Exec e) { exec_ = e; }

  const NetworkParams& net(int s) const { return nets_[s]; }
  const BcAnsatz& ansatz() const { return ansatz_; }
  const MaterialModel& material() const { return material_; }
  Mesh& mesh() { return *mesh_; }

  void gather_params(std::span<double> flat) const;
  void scatter_params(std::span<const double> flat);

  // Total loss; fills grad when non-empty. Throws NumericalError (with the
  // offending location) on a non-finite integrand.
  double loss_and_grad(std::span<const double> flat, std::span<double> grad);
  double loss_only(std::span<const double> flat);

  // Interior energy of one subdomain at the current scattered params.
  double interior_loss(int s, Exec exec);
  // Mean-square jump penalty of one interface segment.
  double interface_loss(const InterfaceSegment& seg);

  // Constrained fields (u..., phi) at a point under subdomain s's network.
  std::vector<Jet<D>> fields_at(int s, const std::array<double, 2>& x,
                                JetOrder order) const;
  // Tensile energy density at a point (for history updates).
  double psi_plus_at(int s, const std::array<double, 2>& x) const;
  // Degraded stress at a point, packed (xx, xy, yy).
  std::array<double, 3> stress_at(int s, const std::array<double, 2>& x) const;
  // Subdomain owning a point (first match on closed boxes).
  int subdomain_of(const std::array<double, 2>& x) const;

  JetOrder interior_order() const {
    return material_.order == 4 ? JetOrder::kHessian : JetOrder::kGradient;
  }

 private:
  struct Workspace;
  double interior_loss_grad(int s, std::span<const double> flat,
                            std::span<double> grad, bool need_grad);
  double interface_loss_grad(const InterfaceSegment& seg, std::span<const double> flat,
                             std::span<double> grad, bool need_grad);

  Mesh* mesh_;
  std::vector<NetworkParams> nets_;
  MaterialModel material_;
  BcAnsatz ansatz_;
  BodyForceFn<D> body_force_;
  std::vector<std::size_t> offsets_;
  double w1_ = 1.0, w2_ = 1.0, l2_reg_ = 0.0;
  Exec exec_ = Exec::kParallel;

  // per-thread traces and per-chunk gradient buffers, reused across calls
  std::vector<ForwardTrace<D>> traces_;
  std::vector<std::vector<double>> chunk_grads_;
  std::vector<double> chunk_losses_;
};

}  // namespace xfrac
