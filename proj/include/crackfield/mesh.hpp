#ifndef CRACKFIELD_MESH_HPP
#define CRACKFIELD_MESH_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace crackfield {

/// Hypercube domain (-K,K)^d partitioned into n0^d cells at level 0.
struct DomainSpec {
  int dimension = 2;            // d in {2,3}
  double half_width = 20.0;     // K > 0
  int initial_cells_per_side = 8;

  void validate() const;
};

// Integer coordinates: each level-0 cell spans kUnit units per axis, so a
// level-l cell spans kUnit >> l. Vertices of all admissible cells have exact
// integer coordinates, which makes vertex identification and face matching
// exact. kLevelBits caps refinement depth at 16 levels.
constexpr int kLevelBits = 16;
constexpr std::int64_t kUnit = std::int64_t(1) << kLevelBits;

using ICoord = std::array<std::int64_t, 3>;

struct Cell {
  int id = -1;
  int level = 0;
  ICoord anchor{0, 0, 0};   // lower corner, integer units
  int parent = -1;
  std::array<int, 8> children{-1, -1, -1, -1, -1, -1, -1, -1};
  bool active = true;

  std::int64_t isize() const { return kUnit >> level; }
};

struct FaceEntry {
  int cell = -1;      // reporting cell
  int axis = 0;       // face normal axis
  int side = 0;       // 0 = low face, 1 = high face
  int neighbor = -1;  // -1 on the boundary
  int rel = 0;        // neighbor level - cell level (0 or -1 when reported)

  bool boundary() const { return neighbor < 0; }
};

/// Adaptive 2:1-balanced forest of axis-aligned squares/cubes.
class Mesh {
 public:
  explicit Mesh(const DomainSpec& spec);

  const DomainSpec& spec() const { return spec_; }
  int dim() const { return spec_.dimension; }

  const Cell& cell(int id) const { return cells_[id]; }
  int n_cells() const { return int(cells_.size()); }
  const std::vector<int>& active_cells() const;

  /// Edge length of a cell at the given level.
  double level_edge(int level) const {
    return 2.0 * spec_.half_width / (spec_.initial_cells_per_side * double(std::int64_t(1) << level));
  }
  double cell_edge(int id) const { return level_edge(cells_[id].level); }
  double min_active_edge() const;
  int max_active_level() const;

  /// Physical coordinate of an integer grid coordinate.
  double to_physical(std::int64_t c) const {
    return -spec_.half_width + double(c) * unit_length_;
  }
  /// Nearest integer grid coordinate of a physical point (exact on vertices).
  std::int64_t to_integer(double x) const;

  /// Integer extent of the domain per axis.
  std::int64_t extent() const { return std::int64_t(spec_.initial_cells_per_side) * kUnit; }

  /// Corner k of a cell, bit i of k selecting the high side along axis i.
  ICoord corner(int id, int k) const;
  Eigen::Vector3d corner_physical(int id, int k) const;

  /// All active cells whose closed box contains the point; empty if outside.
  std::vector<int> active_cells_at(const ICoord& p) const;
  /// The containing active cell with the smallest id, or -1 if outside.
  int find_active_cell(const ICoord& p) const;
  int find_active_cell(const Eigen::Vector3d& x) const;

  bool contains(const ICoord& p) const;

  /// Monotonically increasing; bumped on every mutation.
  std::uint64_t revision() const { return revision_; }

  friend void refine(Mesh& mesh, const std::vector<int>& marked);
  friend void uniform_refine(Mesh& mesh, int times);

 private:
  void split(int id);
  void ensure_neighbor_level(int id);
  int root_at(const ICoord& p) const;

  DomainSpec spec_;
  double unit_length_;
  std::vector<Cell> cells_;
  std::vector<int> roots_;  // root grid, lexicographic
  mutable std::vector<int> active_;
  mutable bool active_dirty_ = true;
  std::uint64_t revision_ = 0;
};

Mesh create_mesh(const DomainSpec& spec);

/// Replace every marked active cell by its 2^d children, then apply closure
/// refinement so the 2:1 face balance holds.
void refine(Mesh& mesh, const std::vector<int>& marked);

void uniform_refine(Mesh& mesh, int times);

/// Every interior face exactly once (fine side reports coarse-fine faces);
/// boundary faces flagged with neighbor = -1.
std::vector<FaceEntry> active_faces(const Mesh& mesh);

/// Sum of active cell measures; equals (2K)^d on a valid mesh.
double total_active_measure(const Mesh& mesh);

} // namespace crackfield

#endif
