#pragma once

#include <string>
#include <vector>

#include "xfrac/driver.hpp"
#include "xfrac/mesh.hpp"

namespace xfrac {

// All CSV output uses 17 significant digits so reruns are byte-identical.
std::string fmt_float(double v);

// fields_<k>.csv: header x,u,phi (1D) or x,y,u,v,phi (2D), row-major over
// a uniform inclusive grid.
void write_fields_csv(const std::string& path, const Solver& solver, int grid_per_axis);

// load_disp.csv: step,u_applied,force
void write_load_disp_csv(const std::string& path, const std::vector<StepResult>& steps);

// loss_<k>.csv: iteration,loss,grad_inf_norm,stage
void write_loss_csv(const std::string& path, const std::vector<TraceEntry>& trace);

// mesh_<k>.csv: element_id,subdomain_id,level,x_min,y_min,x_max,y_max,n_points
void write_mesh_csv(const std::string& path, const Mesh& mesh);

// exact.csv for the bar benchmark: x,u,phi on a uniform grid.
void write_exact_bar_csv(const std::string& path, int grid_points, double ell_0);

}  // namespace xfrac
