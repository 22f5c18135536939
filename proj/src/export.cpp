#include "xfrac/export.hpp"

#include <cstdio>
#include <fstream>

#include "xfrac/errors.hpp"
#include "xfrac/problem.hpp"

namespace xfrac {

std::string fmt_float(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("failed writing: " + path);
}

}  // namespace

void write_fields_csv(const std::string& path, const Solver& solver, int grid_per_axis) {
  std::ofstream out = open_out(path);
  const Mesh& mesh = solver.mesh();
  const int n = grid_per_axis;
  if (mesh.dim == 1) {
    out << "x,u,phi\n";
    for (int i = 0; i < n; ++i) {
      const double x = mesh.domain.lo[0] +
                       (mesh.domain.hi[0] - mesh.domain.lo[0]) * i / (n - 1);
      const auto f = solver.fields({x, 0.0});
      out << fmt_float(x) << ',' << fmt_float(f[0]) << ',' << fmt_float(f[2]) << '\n';
    }
  } else {
    out << "x,y,u,v,phi\n";
    for (int j = 0; j < n; ++j) {
      const double y = mesh.domain.lo[1] +
                       (mesh.domain.hi[1] - mesh.domain.lo[1]) * j / (n - 1);
      for (int i = 0; i < n; ++i) {
        const double x = mesh.domain.lo[0] +
                         (mesh.domain.hi[0] - mesh.domain.lo[0]) * i / (n - 1);
        if (mesh.hole && mesh.hole->contains({x, y})) {
          out << fmt_float(x) << ',' << fmt_float(y) << ",nan,nan,nan\n";
          continue;
        }
        const auto f = solver.fields({x, y});
        out << fmt_float(x) << ',' << fmt_float(y) << ',' << fmt_float(f[0]) << ','
            << fmt_float(f[1]) << ',' << fmt_float(f[2]) << '\n';
      }
    }
  }
  finish(out, path);
}

void write_load_disp_csv(const std::string& path, const std::vector<StepResult>& steps) {
  std::ofstream out = open_out(path);
  out << "step,u_applied,force\n";
  for (const auto& s : steps)
    out << s.step << ',' << fmt_float(s.u_applied) << ',' << fmt_float(s.reaction_force)
        << '\n';
  finish(out, path);
}

void write_loss_csv(const std::string& path, const std::vector<TraceEntry>& trace) {
  std::ofstream out = open_out(path);
  out << "iteration,loss,grad_inf_norm,stage\n";
  for (std::size_t i = 0; i < trace.size(); ++i)
    out << i << ',' << fmt_float(trace[i].loss) << ',' << fmt_float(trace[i].grad_inf)
        << ',' << trace[i].stage << '\n';
  finish(out, path);
}

void write_mesh_csv(const std::string& path, const Mesh& mesh) {
  std::ofstream out = open_out(path);
  out << "element_id,subdomain_id,level,x_min,y_min,x_max,y_max,n_points\n";
  for (const auto& sub : mesh.subdomains) {
    for (const auto& e : sub.elements) {
      out << e.id << ',' << sub.id << ',' << e.level << ',' << fmt_float(e.box.lo[0])
          << ',' << fmt_float(e.box.lo[1]) << ',' << fmt_float(e.box.hi[0]) << ','
          << fmt_float(e.box.hi[1]) << ',' << e.points.size() << '\n';
    }
  }
  finish(out, path);
}

void write_exact_bar_csv(const std::string& path, int grid_points, double ell_0) {
  std::ofstream out = open_out(path);
  out << "x,u,phi\n";
  for (int i = 0; i < grid_points; ++i) {
    const double x = -1.0 + 2.0 * i / (grid_points - 1);
    const BarSolution s = exact_bar_solution(x, ell_0);
    out << fmt_float(x) << ',' << fmt_float(s.u) << ',' << fmt_float(s.phi) << '\n';
  }
  finish(out, path);
}

}  // namespace xfrac
