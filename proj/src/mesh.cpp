#include "xfrac/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "xfrac/errors.hpp"

namespace xfrac {

std::size_t Mesh::total_points() const {
  std::size_t n = 0;
  for (const auto& s : subdomains)
    for (const auto& e : s.elements) n += e.points.size();
  return n;
}

std::size_t Mesh::subdomain_points(int s) const {
  std::size_t n = 0;
  for (const auto& e : subdomains[s].elements) n += e.points.size();
  return n;
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  // Newton iteration on Legendre polynomials, symmetric roots.
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
}

std::vector<QuadraturePoint> gauss_points(const Box& box, int dim, int n_per_axis,
                                          const std::optional<Hole>& hole,
                                          std::uint64_t& next_point_id) {
  if (n_per_axis < 1) throw ConfigError("gauss points per axis must be >= 1");
  std::vector<double> gn, gw;
  gauss_legendre(n_per_axis, gn, gw);

  std::vector<QuadraturePoint> pts;
  const double cx = 0.5 * (box.lo[0] + box.hi[0]);
  const double hx = 0.5 * (box.hi[0] - box.lo[0]);
  if (dim == 1) {
    pts.reserve(n_per_axis);
    for (int i = 0; i < n_per_axis; ++i) {
      QuadraturePoint q;
      q.x = {cx + hx * gn[i], 0.0};
      q.w = gw[i] * hx;
      q.id = next_point_id++;
      pts.push_back(q);
    }
    return pts;
  }
  const double cy = 0.5 * (box.lo[1] + box.hi[1]);
  const double hy = 0.5 * (box.hi[1] - box.lo[1]);
  pts.reserve(static_cast<std::size_t>(n_per_axis) * n_per_axis);
  for (int i = 0; i < n_per_axis; ++i) {
    for (int j = 0; j < n_per_axis; ++j) {
      QuadraturePoint q;
      q.x = {cx + hx * gn[i], cy + hy * gn[j]};
      q.w = gw[i] * gw[j] * hx * hy;
      q.id = next_point_id++;
      if (hole && hole->contains(q.x)) {
        q.inside_domain = false;
        q.w = 0.0;
      }
      pts.push_back(q);
    }
  }
  return pts;
}

namespace {

bool fully_inside_hole(const Box& box, const Hole& hole) {
  // all four corners inside is sufficient for a convex hole
  const std::array<std::array<double, 2>, 4> corners = {{
      {box.lo[0], box.lo[1]}, {box.hi[0], box.lo[1]},
      {box.lo[0], box.hi[1]}, {box.hi[0], box.hi[1]}}};
  for (const auto& c : corners)
    if (!hole.contains(c)) return false;
  return true;
}

void validate_tiling(const MeshSpec& spec) {
  const double tol = 1e-12 * std::max(1.0, spec.domain.measure(spec.dim));
  double total = 0.0;
  for (const auto& b : spec.boxes) {
    for (int k = 0; k < spec.dim; ++k)
      if (b.hi[k] <= b.lo[k]) throw GeometryError("subdomain box has nonpositive extent");
    if (b.lo[0] < spec.domain.lo[0] - tol || b.hi[0] > spec.domain.hi[0] + tol ||
        (spec.dim == 2 && (b.lo[1] < spec.domain.lo[1] - tol || b.hi[1] > spec.domain.hi[1] + tol)))
      throw GeometryError("subdomain box lies outside the domain");
    total += b.measure(spec.dim);
  }
  if (std::abs(total - spec.domain.measure(spec.dim)) > 1e-10 * spec.domain.measure(spec.dim))
    throw GeometryError("subdomain boxes do not tile the domain (gap or overlap)");
  for (std::size_t i = 0; i < spec.boxes.size(); ++i) {
    for (std::size_t j = i + 1; j < spec.boxes.size(); ++j) {
      const Box& a = spec.boxes[i];
      const Box& b = spec.boxes[j];
      double ox = std::min(a.hi[0], b.hi[0]) - std::max(a.lo[0], b.lo[0]);
      double oy = spec.dim == 2
                      ? std::min(a.hi[1], b.hi[1]) - std::max(a.lo[1], b.lo[1])
                      : 1.0;
      if (ox > tol && oy > tol)
        throw GeometryError("subdomain boxes overlap");
    }
  }
}

void find_interfaces(Mesh& mesh, const MeshSpec& spec) {
  const double tol = 1e-12;
  const int n = static_cast<int>(mesh.subdomains.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const Box& a = mesh.subdomains[i].box;
      const Box& b = mesh.subdomains[j].box;
      if (mesh.dim == 1) {
        if (std::abs(a.hi[0] - b.lo[0]) < tol || std::abs(b.hi[0] - a.lo[0]) < tol) {
          InterfaceSegment seg;
          seg.subdomain_a = i;
          seg.subdomain_b = j;
          const double x = std::abs(a.hi[0] - b.lo[0]) < tol ? a.hi[0] : b.hi[0];
          seg.p0 = seg.p1 = {x, 0.0};
          mesh.interfaces.push_back(seg);
        }
        continue;
      }
      // vertical shared edge
      const double oy_lo = std::max(a.lo[1], b.lo[1]);
      const double oy_hi = std::min(a.hi[1], b.hi[1]);
      const double ox_lo = std::max(a.lo[0], b.lo[0]);
      const double ox_hi = std::min(a.hi[0], b.hi[0]);
      InterfaceSegment seg;
      seg.subdomain_a = i;
      seg.subdomain_b = j;
      if ((std::abs(a.hi[0] - b.lo[0]) < tol || std::abs(b.hi[0] - a.lo[0]) < tol) &&
          oy_hi - oy_lo > tol) {
        const double x = std::abs(a.hi[0] - b.lo[0]) < tol ? a.hi[0] : b.hi[0];
        seg.p0 = {x, oy_lo};
        seg.p1 = {x, oy_hi};
        mesh.interfaces.push_back(seg);
      } else if ((std::abs(a.hi[1] - b.lo[1]) < tol || std::abs(b.hi[1] - a.lo[1]) < tol) &&
                 ox_hi - ox_lo > tol) {
        const double y = std::abs(a.hi[1] - b.lo[1]) < tol ? a.hi[1] : b.hi[1];
        seg.p0 = {ox_lo, y};
        seg.p1 = {ox_hi, y};
        mesh.interfaces.push_back(seg);
      }
    }
  }

  // Per-subdomain collocation budget split evenly over its interfaces;
  // a shared segment gets the larger of the two sides' shares.
  std::vector<int> iface_count(n, 0);
  for (const auto& s : mesh.interfaces) {
    ++iface_count[s.subdomain_a];
    ++iface_count[s.subdomain_b];
  }
  for (auto& seg : mesh.interfaces) {
    int n_pts = 1;
    if (mesh.dim == 2) {
      const int budget_a = spec.interface_points_per_subdomain.empty()
                               ? 200
                               : spec.interface_points_per_subdomain[seg.subdomain_a];
      const int budget_b = spec.interface_points_per_subdomain.empty()
                               ? 200
                               : spec.interface_points_per_subdomain[seg.subdomain_b];
      const int share_a = budget_a / std::max(1, iface_count[seg.subdomain_a]);
      const int share_b = budget_b / std::max(1, iface_count[seg.subdomain_b]);
      n_pts = std::max(1, std::max(share_a, share_b));
    }
    seg.points.clear();
    seg.points.reserve(n_pts);
    for (int k = 0; k < n_pts; ++k) {
      const double t = (k + 0.5) / n_pts;
      std::array<double, 2> p = {seg.p0[0] + t * (seg.p1[0] - seg.p0[0]),
                                 seg.p0[1] + t * (seg.p1[1] - seg.p0[1])};
      if (mesh.hole && mesh.hole->contains(p)) continue;
      seg.points.push_back(p);
    }
    if (seg.points.empty())
      throw GeometryError("interface segment has no collocation points");
  }
}

}  // namespace

Mesh build_mesh(const MeshSpec& spec) {
  if (spec.boxes.empty()) throw GeometryError("no subdomain boxes given");
  if (spec.elements_per_axis.size() != spec.boxes.size())
    throw ConfigError("elements_per_axis must list one entry per subdomain");
  validate_tiling(spec);

  Mesh mesh;
  mesh.dim = spec.dim;
  mesh.domain = spec.domain;
  mesh.hole = spec.hole;
  mesh.gauss_per_axis = spec.gauss_per_axis;
  mesh.subdomains.resize(spec.boxes.size());

  for (std::size_t s = 0; s < spec.boxes.size(); ++s) {
    Subdomain& sub = mesh.subdomains[s];
    sub.id = static_cast<int>(s);
    sub.network = sub.id;
    sub.box = spec.boxes[s];
    const int ne = spec.elements_per_axis[s];
    if (ne < 1) throw ConfigError("elements per axis must be >= 1");
    const int ny = spec.dim == 2 ? ne : 1;
    for (int i = 0; i < ne; ++i) {
      for (int j = 0; j < ny; ++j) {
        Element e;
        e.id = mesh.next_element_id++;
        e.box.lo[0] = sub.box.lo[0] + (sub.box.hi[0] - sub.box.lo[0]) * i / ne;
        e.box.hi[0] = sub.box.lo[0] + (sub.box.hi[0] - sub.box.lo[0]) * (i + 1) / ne;
        if (spec.dim == 2) {
          e.box.lo[1] = sub.box.lo[1] + (sub.box.hi[1] - sub.box.lo[1]) * j / ny;
          e.box.hi[1] = sub.box.lo[1] + (sub.box.hi[1] - sub.box.lo[1]) * (j + 1) / ny;
        }
        if (mesh.hole && fully_inside_hole(e.box, *mesh.hole)) {
          e.in_domain = false;
        } else {
          e.points = gauss_points(e.box, spec.dim, spec.gauss_per_axis, mesh.hole,
                                  mesh.next_point_id);
        }
        sub.elements.push_back(std::move(e));
      }
    }
  }
  find_interfaces(mesh, spec);
  return mesh;
}

namespace {

double stress_norm2(const std::array<double, 3>& s, int dim) {
  if (dim == 1) return s[0] * s[0];
  return s[0] * s[0] + 2.0 * s[1] * s[1] + s[2] * s[2];
}

bool face_neighbors(const Box& a, const Box& b, int dim) {
  const double tol = 1e-12;
  if (dim == 1) {
    return std::abs(a.hi[0] - b.lo[0]) < tol || std::abs(b.hi[0] - a.lo[0]) < tol;
  }
  const double ox = std::min(a.hi[0], b.hi[0]) - std::max(a.lo[0], b.lo[0]);
  const double oy = std::min(a.hi[1], b.hi[1]) - std::max(a.lo[1], b.lo[1]);
  const bool touch_x =
      (std::abs(a.hi[0] - b.lo[0]) < tol || std::abs(b.hi[0] - a.lo[0]) < tol) && oy > tol;
  const bool touch_y =
      (std::abs(a.hi[1] - b.lo[1]) < tol || std::abs(b.hi[1] - a.lo[1]) < tol) && ox > tol;
  return touch_x || touch_y;
}

// Weighted linear least-squares fit sigma ~ a + b x (+ c y) per component,
// evaluated back at x. Falls back to the weighted mean on a singular
// system.
struct LinearFit {
  int dim = 1;
  // column-major coefficients per stress component
  std::array<std::array<double, 3>, 3> coef{};  // [component][1, x, y]
  bool ok = false;

  std::array<double, 3> eval(const std::array<double, 2>& x) const {
    std::array<double, 3> s{};
    for (int c = 0; c < 3; ++c)
      s[c] = coef[c][0] + coef[c][1] * x[0] + (dim == 2 ? coef[c][2] * x[1] : 0.0);
    return s;
  }
};

bool solve_small(double m[3][3], double rhs[3][3], int n) {
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    if (std::abs(m[piv][col]) < 1e-30) return false;
    std::swap(m[piv], m[col]);
    std::swap(rhs[piv], rhs[col]);
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = m[r][col] / m[col][col];
      for (int c = col; c < n; ++c) m[r][c] -= f * m[col][c];
      for (int c = 0; c < 3; ++c) rhs[r][c] -= f * rhs[col][c];
    }
  }
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < 3; ++c) rhs[r][c] /= m[r][r];
  return true;
}

}  // namespace

std::vector<ElementIndicator> recovery_error_indicator(const Mesh& mesh,
                                                       const StressField& stress) {
  std::vector<ElementIndicator> out;
  const int nb = mesh.dim == 1 ? 2 : 3;  // basis size: 1, x (, y)

  for (const auto& sub : mesh.subdomains) {
    // cache pointwise stress per element
    std::vector<std::vector<std::array<double, 3>>> sig(sub.elements.size());
    for (std::size_t e = 0; e < sub.elements.size(); ++e) {
      sig[e].reserve(sub.elements[e].points.size());
      for (const auto& q : sub.elements[e].points)
        sig[e].push_back(q.inside_domain ? stress(q.x)
                                         : std::array<double, 3>{0.0, 0.0, 0.0});
    }

    for (std::size_t e = 0; e < sub.elements.size(); ++e) {
      const Element& elem = sub.elements[e];
      ElementIndicator ind{sub.id, elem.id, 0.0};
      if (!elem.in_domain) {
        out.push_back(ind);
        continue;
      }
      // gather patch: this element plus same-subdomain face neighbors
      std::vector<std::size_t> patch{e};
      for (std::size_t o = 0; o < sub.elements.size(); ++o) {
        if (o == e || !sub.elements[o].in_domain) continue;
        if (face_neighbors(elem.box, sub.elements[o].box, mesh.dim)) patch.push_back(o);
      }
      if (patch.size() < 2) {
        out.push_back(ind);  // isolated element: skip recovery
        continue;
      }

      double mat[3][3] = {};
      double rhs[3][3] = {};
      for (std::size_t pe : patch) {
        const auto& pts = sub.elements[pe].points;
        for (std::size_t q = 0; q < pts.size(); ++q) {
          if (!pts[q].inside_domain) continue;
          const double w = pts[q].w;
          const double basis[3] = {1.0, pts[q].x[0], pts[q].x[1]};
          for (int r = 0; r < nb; ++r) {
            for (int c = 0; c < nb; ++c) mat[r][c] += w * basis[r] * basis[c];
            for (int cc = 0; cc < 3; ++cc) rhs[r][cc] += w * basis[r] * sig[pe][q][cc];
          }
        }
      }
      LinearFit fit;
      fit.dim = mesh.dim;
      double m2[3][3], r2[3][3];
      std::copy(&mat[0][0], &mat[0][0] + 9, &m2[0][0]);
      std::copy(&rhs[0][0], &rhs[0][0] + 9, &r2[0][0]);
      if (solve_small(m2, r2, nb)) {
        for (int c = 0; c < 3; ++c)
          for (int r = 0; r < nb; ++r) fit.coef[c][r] = r2[r][c];
        fit.ok = true;
      } else if (mat[0][0] > 0.0) {
        for (int c = 0; c < 3; ++c) fit.coef[c][0] = rhs[0][c] / mat[0][0];
        fit.ok = true;
      }
      if (fit.ok) {
        double err = 0.0;
        for (std::size_t q = 0; q < elem.points.size(); ++q) {
          const auto& p = elem.points[q];
          if (!p.inside_domain) continue;
          const auto rec = fit.eval(p.x);
          const std::array<double, 3> diff = {rec[0] - sig[e][q][0], rec[1] - sig[e][q][1],
                                              rec[2] - sig[e][q][2]};
          err += p.w * stress_norm2(diff, mesh.dim);
        }
        ind.value = err;
      }
      out.push_back(ind);
    }
  }
  return out;
}

RefineReport refine(Mesh& mesh, const ScalarField& phi, const StressField& stress,
                    const ScalarField& history_rule, const RefineOptions& opts) {
  if (opts.phi_threshold <= 0.0 || opts.phi_threshold >= 1.0)
    throw ConfigError("phi threshold must be in (0, 1)");
  if (opts.rho_percent <= 0.0 || opts.rho_percent > 100.0)
    throw ConfigError("rho must be in (0, 100]");

  RefineReport report;

  // criterion (a): clipped phase value above threshold at any point
  std::vector<std::vector<char>> phi_mark(mesh.subdomains.size());
  for (const auto& sub : mesh.subdomains) {
    phi_mark[sub.id].assign(sub.elements.size(), 0);
    for (std::size_t e = 0; e < sub.elements.size(); ++e) {
      const Element& elem = sub.elements[e];
      if (!elem.in_domain || elem.level >= opts.max_level) continue;
      for (const auto& q : elem.points) {
        if (!q.inside_domain) continue;
        const double p = std::clamp(phi(q.x), 0.0, 1.0);
        if (p > opts.phi_threshold) {
          phi_mark[sub.id][e] = 1;
          break;
        }
      }
    }
  }

  // criterion (b): largest recovery indicators summing to rho% of total
  std::vector<ElementIndicator> ind = recovery_error_indicator(mesh, stress);
  std::vector<std::vector<char>> err_mark(mesh.subdomains.size());
  for (const auto& sub : mesh.subdomains) err_mark[sub.id].assign(sub.elements.size(), 0);
  double total = 0.0;
  for (const auto& i : ind) total += i.value;
  if (total > 0.0) {
    std::vector<std::size_t> order(ind.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return ind[a].value > ind[b].value;
    });
    double acc = 0.0;
    const double target = total * opts.rho_percent / 100.0;
    for (std::size_t k = 0; k < order.size() && acc < target; ++k) {
      const auto& i = ind[order[k]];
      if (i.value <= 0.0) break;
      acc += i.value;
      const auto& sub = mesh.subdomains[i.subdomain];
      for (std::size_t e = 0; e < sub.elements.size(); ++e) {
        if (sub.elements[e].id == i.element) {
          if (sub.elements[e].in_domain && sub.elements[e].level < opts.max_level)
            err_mark[i.subdomain][e] = 1;
          break;
        }
      }
    }
  }

  // subdivide marked elements (1 -> 2^dim children)
  for (auto& sub : mesh.subdomains) {
    std::vector<Element> next;
    next.reserve(sub.elements.size());
    for (std::size_t e = 0; e < sub.elements.size(); ++e) {
      Element& elem = sub.elements[e];
      const bool by_phi = phi_mark[sub.id][e] != 0;
      const bool by_err = err_mark[sub.id][e] != 0;
      if (!by_phi && !by_err) {
        next.push_back(std::move(elem));
        continue;
      }
      RefinedElement rec;
      rec.subdomain = sub.id;
      rec.parent_id = elem.id;
      rec.parent_box = elem.box;
      rec.parent_level = elem.level;
      rec.phi_triggered = by_phi;
      rec.error_triggered = by_err;

      const double mx = 0.5 * (elem.box.lo[0] + elem.box.hi[0]);
      const double my = 0.5 * (elem.box.lo[1] + elem.box.hi[1]);
      const int nx = 2, ny = mesh.dim == 2 ? 2 : 1;
      for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
          Element child;
          child.id = mesh.next_element_id++;
          child.level = elem.level + 1;
          child.box.lo[0] = i == 0 ? elem.box.lo[0] : mx;
          child.box.hi[0] = i == 0 ? mx : elem.box.hi[0];
          if (mesh.dim == 2) {
            child.box.lo[1] = j == 0 ? elem.box.lo[1] : my;
            child.box.hi[1] = j == 0 ? my : elem.box.hi[1];
          }
          if (mesh.hole && fully_inside_hole(child.box, *mesh.hole)) {
            child.in_domain = false;
          } else {
            child.points = gauss_points(child.box, mesh.dim, mesh.gauss_per_axis,
                                        mesh.hole, mesh.next_point_id);
            for (auto& q : child.points)
              if (q.inside_domain) q.history = history_rule(q.x);
          }
          rec.child_ids.push_back(child.id);
          next.push_back(std::move(child));
        }
      }
      report.refined.push_back(std::move(rec));
    }
    sub.elements = std::move(next);
  }
  return report;
}

}  // namespace xfrac
