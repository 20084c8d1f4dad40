#include "crackfield/fem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace crackfield {

namespace {

// Vertex coordinates fit in 21 bits each (n0 <= 16, 16 levels).
std::int64_t pack_key(const ICoord& v) {
  return v[0] | (v[1] << 21) | (v[2] << 42);
}

// Gauss-Legendre nodes/weights on [-1,1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  switch (n) {
    case 1: x = {0.0}; w = {2.0}; break;
    case 2: {
      const double a = 1.0 / std::sqrt(3.0);
      x = {-a, a}; w = {1.0, 1.0};
      break;
    }
    case 3: {
      const double a = std::sqrt(3.0 / 5.0);
      x = {-a, 0.0, a}; w = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
      break;
    }
    case 4: {
      const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
      const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
      const double wa = (18.0 + std::sqrt(30.0)) / 36.0;
      const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
      x = {-b, -a, a, b}; w = {wb, wa, wa, wb};
      break;
    }
    case 5: {
      const double a = std::sqrt(5.0 - 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
      const double b = std::sqrt(5.0 + 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
      const double wa = (322.0 + 13.0 * std::sqrt(70.0)) / 900.0;
      const double wb = (322.0 - 13.0 * std::sqrt(70.0)) / 900.0;
      x = {-b, -a, 0.0, a, b}; w = {wb, wa, 128.0 / 225.0, wa, wb};
      break;
    }
    default:
      throw std::invalid_argument("gauss_legendre: up to 5 points supported");
  }
}

} // namespace

Quadrature Quadrature::cell_rule(int d, int points_per_direction) {
  std::vector<double> x, w;
  gauss_legendre(points_per_direction, x, w);
  const int n1 = points_per_direction;
  int nq = 1;
  for (int a = 0; a < d; ++a) nq *= n1;
  Quadrature q;
  q.points = Matrix::Zero(nq, d);
  q.weights = Vector::Zero(nq);
  for (int k = 0; k < nq; ++k) {
    int rem = k;
    double wt = 1.0;
    for (int a = 0; a < d; ++a) {
      int i = rem % n1;
      rem /= n1;
      q.points(k, a) = 0.5 * (x[i] + 1.0);
      wt *= 0.5 * w[i];
    }
    q.weights[k] = wt;
  }
  return q;
}

Quadrature Quadrature::line_rule(int points) { return cell_rule(1, points); }

void q1_shape(int d, const Eigen::Vector3d& xi, Vector& values, Matrix& grads) {
  const int n = 1 << d;
  values.resize(n);
  grads.resize(n, d);
  for (int k = 0; k < n; ++k) {
    double v = 1.0;
    for (int a = 0; a < d; ++a)
      v *= (k & (1 << a)) ? xi[a] : 1.0 - xi[a];
    values[k] = v;
    for (int a = 0; a < d; ++a) {
      double g = (k & (1 << a)) ? 1.0 : -1.0;
      for (int b = 0; b < d; ++b) {
        if (b == a) continue;
        g *= (k & (1 << b)) ? xi[b] : 1.0 - xi[b];
      }
      grads(k, a) = g;
    }
  }
}

DofMap::DofMap(const Mesh& mesh) : d_(mesh.dim()), revision_(mesh.revision()) {
  std::vector<std::int64_t> keys;
  keys.reserve(mesh.active_cells().size() * (1 << d_));
  for (int id : mesh.active_cells())
    for (int k = 0; k < (1 << d_); ++k)
      keys.push_back(pack_key(mesh.corner(id, k)));
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  n_vertices_ = int(keys.size());
  coords_.resize(n_vertices_);
  key_to_vertex_.reserve(keys.size() * 2);
  for (int i = 0; i < n_vertices_; ++i) {
    std::int64_t k = keys[i];
    coords_[i] = {k & ((std::int64_t(1) << 21) - 1),
                  (k >> 21) & ((std::int64_t(1) << 21) - 1),
                  (k >> 42) & ((std::int64_t(1) << 21) - 1)};
    key_to_vertex_[k] = i;
  }
}

DofMap build_dof_map(const Mesh& mesh) { return DofMap(mesh); }

int DofMap::vertex_index(const ICoord& v) const {
  auto it = key_to_vertex_.find(pack_key(v));
  return it == key_to_vertex_.end() ? -1 : it->second;
}

Eigen::Vector3d DofMap::vertex_physical(const Mesh& mesh, int vertex) const {
  const ICoord& v = coords_[vertex];
  return Eigen::Vector3d(mesh.to_physical(v[0]), mesh.to_physical(v[1]),
                         d_ == 3 ? mesh.to_physical(v[2]) : 0.0);
}

bool DofMap::on_boundary(const Mesh& mesh, int vertex) const {
  const ICoord& v = coords_[vertex];
  const std::int64_t ext = mesh.extent();
  for (int a = 0; a < d_; ++a)
    if (v[a] == 0 || v[a] == ext) return true;
  return false;
}

std::vector<int> DofMap::cell_vertices(const Mesh& mesh, int cell_id) const {
  std::vector<int> out(1 << d_);
  for (int k = 0; k < (1 << d_); ++k) {
    out[k] = vertex_index(mesh.corner(cell_id, k));
    if (out[k] < 0) throw std::logic_error("DofMap: cell vertex not in map");
  }
  return out;
}

void ConstraintSet::add_line(int dof, Line line) { lines_[dof] = std::move(line); }

void ConstraintSet::close() {
  bool changed = true;
  int rounds = 0;
  while (changed) {
    if (++rounds > 32) throw std::runtime_error("ConstraintSet: constraint graph has a cycle");
    changed = false;
    for (auto& [dof, line] : lines_) {
      Line next;
      next.inhomogeneity = line.inhomogeneity;
      bool touched = false;
      for (auto& [m, w] : line.entries) {
        auto it = lines_.find(m);
        if (it == lines_.end()) {
          next.entries.emplace_back(m, w);
        } else {
          touched = true;
          next.inhomogeneity += w * it->second.inhomogeneity;
          for (auto& [mm, ww] : it->second.entries)
            next.entries.emplace_back(mm, w * ww);
        }
      }
      if (touched) {
        // merge duplicates
        std::sort(next.entries.begin(), next.entries.end());
        Line merged;
        merged.inhomogeneity = next.inhomogeneity;
        for (auto& [m, w] : next.entries) {
          if (!merged.entries.empty() && merged.entries.back().first == m)
            merged.entries.back().second += w;
          else
            merged.entries.emplace_back(m, w);
        }
        line = std::move(merged);
        changed = true;
      }
    }
  }
}

void ConstraintSet::distribute(Vector& v) const {
  for (const auto& [dof, line] : lines_) {
    double val = line.inhomogeneity;
    for (const auto& [m, w] : line.entries) val += w * v[m];
    v[dof] = val;
  }
}

void ConstraintSet::distribute_homogeneous(Vector& v) const {
  for (const auto& [dof, line] : lines_) {
    double val = 0.0;
    for (const auto& [m, w] : line.entries) val += w * v[m];
    v[dof] = val;
  }
}

ConstraintSet build_constraints(const Mesh& mesh, const DofMap& map,
                                const DirichletSpec& dirichlet,
                                const std::unordered_map<int, double>& active_set) {
  ConstraintSet cs;
  const int d = mesh.dim();

  if (dirichlet.clamp_displacement_on_boundary)
    for (int v = 0; v < map.n_vertices(); ++v)
      if (map.on_boundary(mesh, v))
        for (int c = 0; c < d; ++c)
          cs.add_line(map.u_dof(v, c), ConstraintSet::Line{});

  // Hanging vertices: probe the 2^d diagonal directions around each vertex;
  // if a containing active cell does not have the vertex as a corner, the
  // vertex hangs on that cell's face/edge. Use the coarsest such cell.
  for (int v = 0; v < map.n_vertices(); ++v) {
    const ICoord& p = map.vertex_coord(v);
    int host = -1;
    for (int k = 0; k < (1 << d); ++k) {
      ICoord probe = p;
      for (int a = 0; a < d; ++a) probe[a] += (k & (1 << a)) ? 1 : -1;
      if (!mesh.contains(probe)) continue;
      int c = mesh.find_active_cell(probe);
      if (c < 0) continue;
      bool is_corner = false;
      for (int kk = 0; kk < (1 << d); ++kk)
        if (mesh.corner(c, kk) == p) { is_corner = true; break; }
      if (!is_corner && (host < 0 || mesh.cell(c).level < mesh.cell(host).level))
        host = c;
    }
    if (host < 0) continue;

    const Cell& hc = mesh.cell(host);
    Eigen::Vector3d xi = Eigen::Vector3d::Zero();
    for (int a = 0; a < d; ++a)
      xi[a] = double(p[a] - hc.anchor[a]) / double(hc.isize());
    Vector shape;
    Matrix grads;
    q1_shape(d, xi, shape, grads);
    for (int comp = 0; comp <= d; ++comp) {
      int dof = (comp < d) ? map.u_dof(v, comp) : map.phi_dof(v);
      if (cs.is_constrained(dof)) continue;  // Dirichlet priority
      ConstraintSet::Line line;
      for (int k = 0; k < (1 << d); ++k) {
        if (std::abs(shape[k]) < 1e-12) continue;
        int mv = map.vertex_index(mesh.corner(host, k));
        int mdof = (comp < d) ? map.u_dof(mv, comp) : map.phi_dof(mv);
        line.entries.emplace_back(mdof, shape[k]);
      }
      cs.add_line(dof, std::move(line));
    }
  }

  for (const auto& [dof, value] : active_set) {
    if (cs.is_constrained(dof)) continue;
    ConstraintSet::Line line;
    line.inhomogeneity = value;
    cs.add_line(dof, std::move(line));
  }

  cs.close();
  return cs;
}

FieldVector interpolate(const Mesh& mesh, const DofMap& map,
                        const std::function<double(const Eigen::Vector3d&, int)>& f) {
  FieldVector out(map);
  const int d = mesh.dim();
  for (int v = 0; v < map.n_vertices(); ++v) {
    Eigen::Vector3d x = map.vertex_physical(mesh, v);
    for (int c = 0; c < d; ++c) out.values[map.u_dof(v, c)] = f(x, c);
    out.values[map.phi_dof(v)] = f(x, d);
  }
  return out;
}

PointValue evaluate_on_cell(const Mesh& mesh, const DofMap& map, const FieldVector& vec,
                            int cell_id, const Eigen::Vector3d& x) {
  const int d = mesh.dim();
  const Cell& c = mesh.cell(cell_id);
  const double h = mesh.cell_edge(cell_id);
  Eigen::Vector3d lo = mesh.corner_physical(cell_id, 0);
  Eigen::Vector3d xi = Eigen::Vector3d::Zero();
  for (int a = 0; a < d; ++a)
    xi[a] = std::clamp((x[a] - lo[a]) / h, 0.0, 1.0);
  Vector shape;
  Matrix grads;
  q1_shape(d, xi, shape, grads);

  PointValue pv;
  for (int k = 0; k < (1 << d); ++k) {
    int v = map.vertex_index(mesh.corner(cell_id, k));
    if (v < 0) throw std::logic_error("evaluate_on_cell: vertex not in map");
    double phi = vec.values[map.phi_dof(v)];
    pv.phi += shape[k] * phi;
    for (int a = 0; a < d; ++a) {
      pv.grad_phi[a] += grads(k, a) / h * phi;
      double uva = vec.values[map.u_dof(v, a)];
      pv.u[a] += shape[k] * uva;
      for (int b = 0; b < d; ++b)
        pv.grad_u(a, b) += grads(k, b) / h * uva;
    }
  }
  return pv;
}

PointValue evaluate(const Mesh& mesh, const DofMap& map, const FieldVector& vec,
                    const Eigen::Vector3d& x) {
  int cell = mesh.find_active_cell(x);
  if (cell < 0) throw std::domain_error("evaluate: point outside domain");
  return evaluate_on_cell(mesh, map, vec, cell, x);
}

FieldVector transfer(const Mesh& old_mesh, const DofMap& old_map, const FieldVector& old_vec,
                     const Mesh& new_mesh, const DofMap& new_map) {
  if (old_vec.revision != old_map.mesh_revision())
    throw std::invalid_argument("transfer: field does not match source mesh revision");
  const int d = new_mesh.dim();
  FieldVector out(new_map);
  for (int v = 0; v < new_map.n_vertices(); ++v) {
    Eigen::Vector3d x = new_map.vertex_physical(new_mesh, v);
    int cell = old_mesh.find_active_cell(x);
    if (cell < 0) throw std::invalid_argument("transfer: meshes are unrelated");
    PointValue pv = evaluate_on_cell(old_mesh, old_map, old_vec, cell, x);
    for (int c = 0; c < d; ++c) out.values[new_map.u_dof(v, c)] = pv.u[c];
    out.values[new_map.phi_dof(v)] = pv.phi;
  }
  return out;
}

} // namespace crackfield
