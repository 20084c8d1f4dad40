#ifndef CRACKFIELD_FEM_HPP
#define CRACKFIELD_FEM_HPP

#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "crackfield/mesh.hpp"
#include "crackfield/types.hpp"

namespace crackfield {

/// Tensor-product Gauss rule on the reference cell [0,1]^d.
struct Quadrature {
  Matrix points;   // n_q x d
  Vector weights;  // sums to 1

  static Quadrature cell_rule(int d, int points_per_direction = 2);
  static Quadrature line_rule(int points = 2);  // 1d rule on [0,1]
};

/// Q1 shape function values / reference gradients at a reference point.
void q1_shape(int d, const Eigen::Vector3d& xi, Vector& values, Matrix& grads);

/// Vertex-based Q1 DoF numbering for the (u, phi) product space.
/// Block layout: u DoFs first (vertex-major, component-minor), then phi.
class DofMap {
 public:
  DofMap() : d_(0), n_vertices_(0), revision_(0) {}
  DofMap(const Mesh& mesh);

  int dim() const { return d_; }
  int n_vertices() const { return n_vertices_; }
  int n_u() const { return d_ * n_vertices_; }
  int n_phi() const { return n_vertices_; }
  int n_total() const { return n_u() + n_phi(); }

  int u_dof(int vertex, int component) const { return vertex * d_ + component; }
  int phi_dof(int vertex) const { return n_u() + vertex; }
  /// Vertex and component of a u-dof; component == d means phi.
  int dof_vertex(int dof) const { return dof < n_u() ? dof / d_ : dof - n_u(); }
  int dof_component(int dof) const { return dof < n_u() ? dof % d_ : d_; }

  int vertex_index(const ICoord& v) const;  // -1 if unknown
  const ICoord& vertex_coord(int vertex) const { return coords_[vertex]; }
  Eigen::Vector3d vertex_physical(const Mesh& mesh, int vertex) const;
  bool on_boundary(const Mesh& mesh, int vertex) const;

  /// Vertex indices of a cell's corners in z-order.
  std::vector<int> cell_vertices(const Mesh& mesh, int cell_id) const;

  std::uint64_t mesh_revision() const { return revision_; }

 private:
  int d_;
  int n_vertices_;
  std::uint64_t revision_;
  std::vector<ICoord> coords_;                       // sorted by packed key
  std::unordered_map<std::int64_t, int> key_to_vertex_;
};

DofMap build_dof_map(const Mesh& mesh);

/// Nodal field over a DofMap, tagged with the mesh revision it was built for.
struct FieldVector {
  Vector values;
  std::uint64_t revision = 0;

  FieldVector() = default;
  FieldVector(const DofMap& map) : values(Vector::Zero(map.n_total())), revision(map.mesh_revision()) {}
};

/// Closed affine constraints: dof -> sum_k weight_k * master_k + inhomogeneity.
class ConstraintSet {
 public:
  struct Line {
    std::vector<std::pair<int, double>> entries;
    double inhomogeneity = 0.0;
  };

  void add_line(int dof, Line line);
  bool is_constrained(int dof) const { return lines_.count(dof) > 0; }
  const Line& line(int dof) const { return lines_.at(dof); }
  int n_constraints() const { return int(lines_.size()); }
  const std::unordered_map<int, Line>& lines() const { return lines_; }

  /// Substitute constrained dofs out of all right-hand sides.
  void close();

  /// Overwrite constrained entries with their affine combinations.
  void distribute(Vector& v) const;
  /// Same, without inhomogeneities (for Newton increments).
  void distribute_homogeneous(Vector& v) const;

 private:
  std::unordered_map<int, Line> lines_;
};

struct DirichletSpec {
  bool clamp_displacement_on_boundary = true;
};

/// Hanging-node + Dirichlet + active-set constraints. Active set maps phi
/// dofs to their imposed values; Dirichlet wins over hanging on conflicts.
ConstraintSet build_constraints(const Mesh& mesh, const DofMap& map,
                                const DirichletSpec& dirichlet,
                                const std::unordered_map<int, double>& active_set = {});

/// Nodal interpolation; component d selects phi. Constraints are not applied.
FieldVector interpolate(const Mesh& mesh, const DofMap& map,
                        const std::function<double(const Eigen::Vector3d&, int)>& f);

struct PointValue {
  Eigen::Vector3d u = Eigen::Vector3d::Zero();
  double phi = 0.0;
  Eigen::Vector3d grad_phi = Eigen::Vector3d::Zero();
  Eigen::Matrix3d grad_u = Eigen::Matrix3d::Zero();  // grad_u(i,j) = du_i/dx_j
};

/// Q1 evaluation at a physical point (containing cell with smallest id).
PointValue evaluate(const Mesh& mesh, const DofMap& map, const FieldVector& vec,
                    const Eigen::Vector3d& x);
/// Same, on a prescribed active cell (point must lie in its closure).
PointValue evaluate_on_cell(const Mesh& mesh, const DofMap& map, const FieldVector& vec,
                            int cell_id, const Eigen::Vector3d& x);

/// Interpolate an old-mesh field onto a refinement of that mesh.
FieldVector transfer(const Mesh& old_mesh, const DofMap& old_map, const FieldVector& old_vec,
                     const Mesh& new_mesh, const DofMap& new_map);

} // namespace crackfield

#endif
