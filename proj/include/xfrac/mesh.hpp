#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace xfrac {

// Axis-aligned box; 1D meshes ignore the y component.
struct Box {
  std::array<double, 2> lo{0.0, 0.0};
  std::array<double, 2> hi{0.0, 0.0};

  double measure(int dim) const {
    double m = hi[0] - lo[0];
    if (dim == 2) m *= hi[1] - lo[1];
    return m;
  }
  bool contains(const std::array<double, 2>& p, int dim, double tol = 0.0) const {
    for (int k = 0; k < dim; ++k)
      if (p[k] < lo[k] - tol || p[k] > hi[k] + tol) return false;
    return true;
  }
};

struct Hole {
  std::array<double, 2> center{0.0, 0.0};
  double radius = 0.0;
  bool contains(const std::array<double, 2>& p) const {
    const double dx = p[0] - center[0], dy = p[1] - center[1];
    return dx * dx + dy * dy < radius * radius;
  }
};

struct QuadraturePoint {
  std::array<double, 2> x{0.0, 0.0};
  double w = 0.0;          // weight incl. Jacobian; zero when masked
  double history = 0.0;    // strain-history value H >= 0
  bool inside_domain = true;
  std::uint64_t id = 0;    // stable across refinement of other elements
};

struct Element {
  std::uint64_t id = 0;
  Box box;
  int level = 0;
  bool in_domain = true;   // false when fully inside the hole
  std::vector<QuadraturePoint> points;
};

struct InterfaceSegment {
  int subdomain_a = -1;
  int subdomain_b = -1;
  std::array<double, 2> p0{0.0, 0.0};
  std::array<double, 2> p1{0.0, 0.0};
  std::vector<std::array<double, 2>> points;  // equispaced collocation points
};

struct Subdomain {
  int id = -1;
  Box box;
  std::vector<Element> elements;  // leaves only
  int network = -1;
};

struct Mesh {
  int dim = 1;
  Box domain;
  std::optional<Hole> hole;
  int gauss_per_axis = 2;
  std::vector<Subdomain> subdomains;
  std::vector<InterfaceSegment> interfaces;  // each shared segment once
  std::uint64_t next_element_id = 0;
  std::uint64_t next_point_id = 0;

  std::size_t total_points() const;
  std::size_t subdomain_points(int s) const;
};

struct MeshSpec {
  int dim = 1;
  Box domain;
  std::vector<Box> boxes;                   // must tile the domain
  std::vector<int> elements_per_axis;       // per subdomain
  int gauss_per_axis = 2;
  std::optional<Hole> hole;
  std::vector<int> interface_points_per_subdomain;
};

// Gauss-Legendre nodes/weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

// Tensor-product Gauss points mapped to the element box, hole-masked.
std::vector<QuadraturePoint> gauss_points(const Box& box, int dim, int n_per_axis,
                                          const std::optional<Hole>& hole,
                                          std::uint64_t& next_point_id);

// Validates the tiling (gaps/overlaps -> GeometryError), tiles every
// subdomain with elements and quadrature, and identifies interfaces with
// their collocation points.
Mesh build_mesh(const MeshSpec& spec);

struct RefineOptions {
  double phi_threshold = 0.2;
  double rho_percent = 25.0;   // share of total estimated elastic error
  int max_level = 5;
};

struct RefinedElement {
  int subdomain = -1;
  std::uint64_t parent_id = 0;
  Box parent_box;
  int parent_level = 0;
  std::vector<std::uint64_t> child_ids;
  bool phi_triggered = false;
  bool error_triggered = false;
};

struct RefineReport {
  std::vector<RefinedElement> refined;
};

using ScalarField = std::function<double(const std::array<double, 2>&)>;
// Packed symmetric stress (xx, xy, yy); 1D uses the first entry.
using StressField = std::function<std::array<double, 3>(const std::array<double, 2>&)>;

// Recovery-based error indicator per active element: weighted misfit
// between the pointwise stress and a patch-wise linear least-squares
// recovery over the element and its same-subdomain face neighbors.
// Returned in element-visit order (subdomain-major); pairs with ids.
struct ElementIndicator {
  int subdomain;
  std::uint64_t element;
  double value;
};
std::vector<ElementIndicator> recovery_error_indicator(const Mesh& mesh,
                                                       const StressField& stress);

// Criterion-driven h-refinement: an element splits into 2^dim children
// when its clipped max phase value exceeds the threshold or when it is a
// top contributor of rho percent of the total recovery error. New points
// inherit history by evaluating `history_rule` at their locations.
RefineReport refine(Mesh& mesh, const ScalarField& phi, const StressField& stress,
                    const ScalarField& history_rule, const RefineOptions& opts);

}  // namespace xfrac
