// Timing comparison of the serial reference against the OpenMP assembly
// path on the tension benchmark layout. Both paths share the chunked
// reduction, so their results must agree bitwise; this tool reports the
// wall time per loss+gradient evaluation.

#include <chrono>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "xfrac/assembly.hpp"
#include "xfrac/problem.hpp"

using namespace xfrac;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  int reps = argc > 1 ? std::atoi(argv[1]) : 5;

  ProblemSpec spec = make_preset(Preset::kSenTension, 4);
  spec.validate();
  Mesh mesh = build_mesh(mesh_spec(spec));
  for (auto& sub : mesh.subdomains)
    for (auto& e : sub.elements)
      for (auto& q : e.points)
        if (q.inside_domain) q.history = spec.initial_history(q.x);

  std::vector<NetworkParams> nets;
  for (std::size_t s = 0; s < mesh.subdomains.size(); ++s)
    nets.push_back(init_xavier(spec.network_layers, spec.activation, spec.scale_c,
                               spec.seed + s));
  BodyForceFn<2> body = [](const std::array<double, 2>&) {
    return std::array<double, 2>{0.0, 0.0};
  };
  EnergySystem<2> system(&mesh, std::move(nets), spec.material, spec.ansatz(), body);
  system.set_penalties(spec.w1, spec.w2, spec.l2_reg);
  system.set_applied_displacement(1e-3);

  std::vector<double> x(system.num_params());
  system.gather_params(x);
  std::vector<double> grad(x.size());

  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif
  std::printf("interior points: %zu, parameters: %zu, threads: %d\n",
              mesh.total_points(), x.size(), threads);

  double serial_ms = 0.0, parallel_ms = 0.0;
  double loss_serial = 0.0, loss_parallel = 0.0;

  system.set_exec(Exec::kSerial);
  system.loss_and_grad(x, grad);  // warm up buffers
  {
    const auto t0 = Clock::now();
    for (int r = 0; r < reps; ++r) loss_serial = system.loss_and_grad(x, grad);
    serial_ms = ms_since(t0) / reps;
  }
  std::vector<double> grad_serial = grad;

  system.set_exec(Exec::kParallel);
  system.loss_and_grad(x, grad);
  {
    const auto t0 = Clock::now();
    for (int r = 0; r < reps; ++r) loss_parallel = system.loss_and_grad(x, grad);
    parallel_ms = ms_since(t0) / reps;
  }

  bool identical = loss_serial == loss_parallel;
  for (std::size_t i = 0; i < grad.size() && identical; ++i)
    identical = grad[i] == grad_serial[i];

  std::printf("serial reference : %8.2f ms / evaluation (loss %.12e)\n", serial_ms,
              loss_serial);
  std::printf("openmp kernels   : %8.2f ms / evaluation (loss %.12e)\n", parallel_ms,
              loss_parallel);
  std::printf("speedup          : %8.2fx\n", serial_ms / parallel_ms);
  std::printf("bitwise identical: %s\n", identical ? "yes" : "NO");
  return identical ? 0 : 1;
}
