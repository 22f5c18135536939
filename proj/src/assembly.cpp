#include "xfrac/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "xfrac/errors.hpp"
#include "xfrac/phase_energy.hpp"

namespace xfrac {
namespace {

constexpr std::size_t kChunk = 32;  // points per reduction chunk

int max_threads() {
#ifdef _OPENMP
  return std::max(1, omp_get_max_threads());
#else
  return 1;
#endif
}

int thread_id() {
#ifdef _OPENMP
  return omp_get_thread_num();
#else
  return 0;
#endif
}

template <int D>
std::array<double, D> to_dim(const std::array<double, 2>& x) {
  std::array<double, D> p;
  for (int k = 0; k < D; ++k) p[k] = x[k];
  return p;
}

struct ChunkFailure {
  long chunk = -1;
  std::array<double, 2> x{};
};

}  // namespace

template <int D>
EnergySystem<D>::EnergySystem(Mesh* mesh, std::vector<NetworkParams> nets,
                              MaterialModel material, BcAnsatz ansatz,
                              BodyForceFn<D> body_force)
    : mesh_(mesh),
      nets_(std::move(nets)),
      material_(material),
      ansatz_(ansatz),
      body_force_(std::move(body_force)) {
  if (nets_.size() != mesh_->subdomains.size())
    throw ConfigError("one network per subdomain is required");
  offsets_.resize(nets_.size() + 1, 0);
  for (std::size_t s = 0; s < nets_.size(); ++s)
    offsets_[s + 1] = offsets_[s] + nets_[s].values.size();
  traces_.resize(2 * max_threads());
}

template <int D>
void EnergySystem<D>::set_penalties(double w1, double w2, double l2_reg) {
  if (w1 <= 0.0 || w2 <= 0.0) throw ConfigError("penalty weights must be positive");
  if (l2_reg < 0.0) throw ConfigError("l2 regularization must be nonnegative");
  w1_ = w1;
  w2_ = w2;
  l2_reg_ = l2_reg;
}

template <int D>
void EnergySystem<D>::set_applied_displacement(double u) {
  ansatz_.applied_displacement = u;
}

template <int D>
void EnergySystem<D>::gather_params(std::span<double> flat) const {
  for (std::size_t s = 0; s < nets_.size(); ++s)
    std::copy(nets_[s].values.begin(), nets_[s].values.end(), flat.begin() + offsets_[s]);
}

template <int D>
void EnergySystem<D>::scatter_params(std::span<const double> flat) {
  for (std::size_t s = 0; s < nets_.size(); ++s)
    nets_[s].values.assign(flat.begin() + offsets_[s], flat.begin() + offsets_[s + 1]);
}

template <int D>
double EnergySystem<D>::interior_loss_grad(int s, std::span<const double> flat,
                                           std::span<double> grad, bool need_grad) {
  (void)flat;
  const NetworkParams& net = nets_[s];
  const Subdomain& sub = mesh_->subdomains[s];
  const JetOrder order = interior_order();
  const int n_out = net.output_dim();

  std::vector<const QuadraturePoint*> pts;
  for (const auto& e : sub.elements) {
    if (!e.in_domain) continue;
    for (const auto& q : e.points)
      if (q.inside_domain) pts.push_back(&q);
  }
  if (pts.empty()) return 0.0;

  const std::size_t n_chunks = (pts.size() + kChunk - 1) / kChunk;
  const std::size_t np = net.values.size();
  chunk_losses_.assign(n_chunks, 0.0);
  if (need_grad) {
    chunk_grads_.resize(std::max(chunk_grads_.size(), n_chunks));
    for (std::size_t c = 0; c < n_chunks; ++c) chunk_grads_[c].assign(np, 0.0);
  }

  ChunkFailure fail;
  const bool parallel = exec_ == Exec::kParallel;

#pragma omp parallel for schedule(dynamic, 1) if (parallel)
  for (long c = 0; c < static_cast<long>(n_chunks); ++c) {
    ForwardTrace<D>& trace = traces_[thread_id()];
    std::array<Jet<D>, 8> mult, shift;
    std::vector<Jet<D>> constrained(n_out);
    std::vector<double> cobar;
    double local_loss = 0.0;
    bool local_fail = false;
    std::array<double, 2> fail_x{};

    const std::size_t begin = static_cast<std::size_t>(c) * kChunk;
    const std::size_t end = std::min(begin + kChunk, pts.size());
    for (std::size_t p = begin; p < end && !local_fail; ++p) {
      const QuadraturePoint& q = *pts[p];
      const auto x = to_dim<D>(q.x);
      forward_jets<D>(net, x, order, trace);
      const int C = trace.comps;
      for (int k = 0; k < n_out; ++k) {
        Jet<D> raw;
        comps_to_jet<D>(std::span<const double>(trace.output_comps().data() +
                                                static_cast<std::size_t>(k) * C, C),
                        order, raw);
        ansatz_transform<D>(ansatz_, x, k, mult[k], shift[k]);
        constrained[k] = mult[k] * raw + shift[k];
        if (order < JetOrder::kHessian) constrained[k].hess = {};
      }
      const auto fb = body_force_(q.x);
      const EnergyDensityResult<D> e = energy_density<D>(
          std::span<const Jet<D>>(constrained.data(), n_out), q.history, fb, material_);
      if (!std::isfinite(e.value)) {
        local_fail = true;
        fail_x = q.x;
        break;
      }
      local_loss += q.w * e.value;

      if (need_grad) {
        cobar.assign(static_cast<std::size_t>(n_out) * C, 0.0);
        for (int k = 0; k < n_out; ++k) {
          Jet<D> cot = e.cotangent[k] * q.w;
          cot = jet_mul_pullback<D>(mult[k], cot);
          jet_to_comps<D>(cot, order,
                          std::span<double>(cobar.data() + static_cast<std::size_t>(k) * C, C));
        }
        backward_jets<D>(net, trace, cobar, chunk_grads_[c]);
      }
    }
    chunk_losses_[c] = local_loss;
    if (local_fail) {
#pragma omp critical
      {
        if (fail.chunk < 0 || c < fail.chunk) {
          fail.chunk = c;
          fail.x = fail_x;
        }
      }
    }
  }

  if (fail.chunk >= 0) {
    std::ostringstream msg;
    msg << "non-finite energy integrand in subdomain " << s << " at (" << fail.x[0];
    if (D == 2) msg << ", " << fail.x[1];
    msg << ")";
    throw NumericalError(msg.str());
  }

  // fixed-order combination: bitwise identical for any thread count
  double loss = 0.0;
  for (std::size_t c = 0; c < n_chunks; ++c) loss += chunk_losses_[c];
  if (need_grad) {
    double* g = grad.data() + offsets_[s];
    for (std::size_t c = 0; c < n_chunks; ++c) {
      const double* cg = chunk_grads_[c].data();
      for (std::size_t i = 0; i < np; ++i) g[i] += cg[i];
    }
  }
  return loss;
}

template <int D>
double EnergySystem<D>::interface_loss_grad(const InterfaceSegment& seg,
                                            std::span<const double> flat,
                                            std::span<double> grad, bool need_grad) {
  (void)flat;
  const int sa = seg.subdomain_a, sb = seg.subdomain_b;
  const NetworkParams& na = nets_[sa];
  const NetworkParams& nb = nets_[sb];
  const int n_out = na.output_dim();
  const std::size_t n = seg.points.size();
  if (n == 0) throw ConfigError("interface segment without collocation points");
  const double inv_n = 1.0 / static_cast<double>(n);

  const std::size_t n_chunks = (n + kChunk - 1) / kChunk;
  const std::size_t npa = na.values.size(), npb = nb.values.size();
  chunk_losses_.assign(n_chunks, 0.0);
  if (need_grad) {
    chunk_grads_.resize(std::max(chunk_grads_.size(), n_chunks));
    for (std::size_t c = 0; c < n_chunks; ++c) chunk_grads_[c].assign(npa + npb, 0.0);
  }

  const bool parallel = exec_ == Exec::kParallel;
  const int nthreads = max_threads();

#pragma omp parallel for schedule(dynamic, 1) if (parallel)
  for (long c = 0; c < static_cast<long>(n_chunks); ++c) {
    ForwardTrace<D>& ta = traces_[thread_id()];
    ForwardTrace<D>& tb = traces_[nthreads + thread_id()];
    double local = 0.0;
    std::vector<double> va(n_out), vb(n_out), ma(n_out), mb(n_out);
    std::vector<double> cobar_a(n_out), cobar_b(n_out);

    const std::size_t begin = static_cast<std::size_t>(c) * kChunk;
    const std::size_t end = std::min(begin + kChunk, n);
    for (std::size_t p = begin; p < end; ++p) {
      const auto x = to_dim<D>(seg.points[p]);
      forward_jets<D>(na, x, JetOrder::kValue, ta);
      forward_jets<D>(nb, x, JetOrder::kValue, tb);
      for (int k = 0; k < n_out; ++k) {
        Jet<D> mult, shift;
        ansatz_transform<D>(ansatz_, x, k, mult, shift);
        ma[k] = mult.value;
        mb[k] = mult.value;
        va[k] = mult.value * ta.output_comps()[k] + shift.value;
        vb[k] = mult.value * tb.output_comps()[k] + shift.value;
      }
      // mean-square displacement jump (W1) and phase jump (W2)
      for (int k = 0; k < n_out; ++k) {
        const double jump = va[k] - vb[k];
        const double wk = (k < D ? w1_ : w2_) * inv_n;
        local += wk * jump * jump;
        cobar_a[k] = 2.0 * wk * jump * ma[k];
        cobar_b[k] = -2.0 * wk * jump * mb[k];
      }
      if (need_grad) {
        backward_jets<D>(na, ta, cobar_a,
                         std::span<double>(chunk_grads_[c].data(), npa));
        backward_jets<D>(nb, tb, cobar_b,
                         std::span<double>(chunk_grads_[c].data() + npa, npb));
      }
    }
    chunk_losses_[c] = local;
  }

  double loss = 0.0;
  for (std::size_t c = 0; c < n_chunks; ++c) loss += chunk_losses_[c];
  if (need_grad) {
    double* ga = grad.data() + offsets_[sa];
    double* gb = grad.data() + offsets_[sb];
    for (std::size_t c = 0; c < n_chunks; ++c) {
      const double* cg = chunk_grads_[c].data();
      for (std::size_t i = 0; i < npa; ++i) ga[i] += cg[i];
      for (std::size_t i = 0; i < npb; ++i) gb[i] += cg[npa + i];
    }
  }
  return loss;
}

template <int D>
double EnergySystem<D>::loss_and_grad(std::span<const double> flat, std::span<double> grad) {
  scatter_params(flat);
  const bool need_grad = !grad.empty();
  if (need_grad) std::fill(grad.begin(), grad.end(), 0.0);

  double loss = 0.0;
  for (int s = 0; s < num_nets(); ++s)
    loss += interior_loss_grad(s, flat, grad, need_grad);
  for (const auto& seg : mesh_->interfaces)
    loss += interface_loss_grad(seg, flat, grad, need_grad);
  if (l2_reg_ > 0.0) {
    double reg = 0.0;
    for (std::size_t i = 0; i < flat.size(); ++i) {
      reg += flat[i] * flat[i];
      if (need_grad) grad[i] += 2.0 * l2_reg_ * flat[i];
    }
    loss += l2_reg_ * reg;
  }
  return loss;
}

template <int D>
double EnergySystem<D>::loss_only(std::span<const double> flat) {
  return loss_and_grad(flat, {});
}

template <int D>
double EnergySystem<D>::interior_loss(int s, Exec exec) {
  const Exec saved = exec_;
  exec_ = exec;
  std::vector<double> flat(num_params());
  gather_params(flat);
  const double v = interior_loss_grad(s, flat, {}, false);
  exec_ = saved;
  return v;
}

template <int D>
double EnergySystem<D>::interface_loss(const InterfaceSegment& seg) {
  std::vector<double> flat(num_params());
  gather_params(flat);
  return interface_loss_grad(seg, flat, {}, false);
}

template <int D>
std::vector<Jet<D>> EnergySystem<D>::fields_at(int s, const std::array<double, 2>& x,
                                               JetOrder order) const {
  return forward_constrained<D>(nets_[s], ansatz_, to_dim<D>(x), order);
}

template <int D>
double EnergySystem<D>::psi_plus_at(int s, const std::array<double, 2>& x) const {
  const auto fields = fields_at(s, x, JetOrder::kGradient);
  std::array<std::array<double, D>, D> grad_u;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) grad_u[i][j] = fields[i].grad[j];
  return split_energy<D>(strain<D>(grad_u), material_).psi_plus;
}

template <int D>
std::array<double, 3> EnergySystem<D>::stress_at(int s, const std::array<double, 2>& x) const {
  const auto fields = fields_at(s, x, JetOrder::kGradient);
  std::array<std::array<double, D>, D> grad_u;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) grad_u[i][j] = fields[i].grad[j];
  const SymMat<D> sigma =
      degraded_stress<D>(strain<D>(grad_u), fields[D].value, material_);
  std::array<double, 3> out{0.0, 0.0, 0.0};
  if constexpr (D == 1) {
    out[0] = sigma.v[0];
  } else {
    out = {sigma.v[0], sigma.v[1], sigma.v[2]};
  }
  return out;
}

template <int D>
int EnergySystem<D>::subdomain_of(const std::array<double, 2>& x) const {
  // half-open ownership: a point on a shared face belongs to the
  // subdomain on its upper side, matching the closed-form branch
  // convention at the bar's crack
  int fallback = -1;
  for (const auto& sub : mesh_->subdomains) {
    if (!sub.box.contains(x, mesh_->dim, 1e-12)) continue;
    fallback = sub.id;
    bool interior_or_lower = true;
    for (int k = 0; k < mesh_->dim; ++k)
      if (std::abs(x[k] - sub.box.hi[k]) < 1e-12 &&
          std::abs(sub.box.hi[k] - mesh_->domain.hi[k]) > 1e-12)
        interior_or_lower = false;
    if (interior_or_lower) return sub.id;
  }
  if (fallback >= 0) return fallback;
  throw GeometryError("point lies outside every subdomain");
}

template class EnergySystem<1>;
template class EnergySystem<2>;

}  // namespace xfrac
