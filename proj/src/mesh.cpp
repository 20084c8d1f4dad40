#include "crackfield/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace crackfield {

void DomainSpec::validate() const {
  if (dimension != 2 && dimension != 3)
    throw std::invalid_argument("DomainSpec: dimension must be 2 or 3");
  if (!(half_width > 0.0))
    throw std::invalid_argument("DomainSpec: half_width must be positive");
  if (initial_cells_per_side < 1 || initial_cells_per_side > 16)
    throw std::invalid_argument("DomainSpec: initial_cells_per_side must be in [1,16]");
}

Mesh::Mesh(const DomainSpec& spec) : spec_(spec) {
  spec_.validate();
  unit_length_ = 2.0 * spec_.half_width / (spec_.initial_cells_per_side * double(kUnit));
  const int n0 = spec_.initial_cells_per_side;
  const int d = spec_.dimension;
  const int nz = (d == 3) ? n0 : 1;
  cells_.reserve(std::size_t(n0) * n0 * nz);
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < n0; ++j)
      for (int i = 0; i < n0; ++i) {
        Cell c;
        c.id = int(cells_.size());
        c.anchor = {i * kUnit, j * kUnit, std::int64_t(k) * kUnit};
        cells_.push_back(c);
        roots_.push_back(c.id);
      }
}

Mesh create_mesh(const DomainSpec& spec) { return Mesh(spec); }

const std::vector<int>& Mesh::active_cells() const {
  if (active_dirty_) {
    active_.clear();
    for (const Cell& c : cells_)
      if (c.active) active_.push_back(c.id);
    active_dirty_ = false;
  }
  return active_;
}

double Mesh::min_active_edge() const { return level_edge(max_active_level()); }

int Mesh::max_active_level() const {
  int lmax = 0;
  for (int id : active_cells()) lmax = std::max(lmax, cells_[id].level);
  return lmax;
}

std::int64_t Mesh::to_integer(double x) const {
  return std::llround((x + spec_.half_width) / unit_length_);
}

ICoord Mesh::corner(int id, int k) const {
  const Cell& c = cells_[id];
  ICoord v = c.anchor;
  for (int a = 0; a < spec_.dimension; ++a)
    if (k & (1 << a)) v[a] += c.isize();
  return v;
}

Eigen::Vector3d Mesh::corner_physical(int id, int k) const {
  ICoord v = corner(id, k);
  Eigen::Vector3d x(to_physical(v[0]), to_physical(v[1]),
                    spec_.dimension == 3 ? to_physical(v[2]) : 0.0);
  return x;
}

bool Mesh::contains(const ICoord& p) const {
  const std::int64_t ext = extent();
  for (int a = 0; a < spec_.dimension; ++a)
    if (p[a] < 0 || p[a] > ext) return false;
  return true;
}

int Mesh::root_at(const ICoord& p) const {
  const int n0 = spec_.initial_cells_per_side;
  int idx[3] = {0, 0, 0};
  for (int a = 0; a < spec_.dimension; ++a) {
    std::int64_t i = p[a] / kUnit;
    if (i >= n0) i = n0 - 1;
    idx[a] = int(i);
  }
  int flat = idx[0] + n0 * idx[1];
  if (spec_.dimension == 3) flat += n0 * n0 * idx[2];
  return roots_[flat];
}

std::vector<int> Mesh::active_cells_at(const ICoord& p) const {
  std::vector<int> out;
  if (!contains(p)) return out;
  const int n0 = spec_.initial_cells_per_side;
  const int d = spec_.dimension;
  // A point on a root gridline belongs to up to 2^d root cells.
  std::vector<int> stack;
  int lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
  for (int a = 0; a < d; ++a) {
    std::int64_t i = p[a] / kUnit;
    lo[a] = int(std::max<std::int64_t>(0, (p[a] % kUnit == 0) ? i - 1 : i));
    hi[a] = int(std::min<std::int64_t>(n0 - 1, i));
    lo[a] = std::min(lo[a], n0 - 1);
  }
  const int kz = (d == 3) ? 1 : 0;
  for (int k = lo[2]; k <= (kz ? hi[2] : 0); ++k)
    for (int j = lo[1]; j <= hi[1]; ++j)
      for (int i = lo[0]; i <= hi[0]; ++i) {
        int flat = i + n0 * j + (d == 3 ? n0 * n0 * k : 0);
        stack.push_back(roots_[flat]);
      }
  while (!stack.empty()) {
    int id = stack.back();
    stack.pop_back();
    const Cell& c = cells_[id];
    bool inside = true;
    for (int a = 0; a < d; ++a)
      if (p[a] < c.anchor[a] || p[a] > c.anchor[a] + c.isize()) { inside = false; break; }
    if (!inside) continue;
    if (c.active) {
      out.push_back(id);
      continue;
    }
    for (int ch : c.children)
      if (ch >= 0) stack.push_back(ch);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

int Mesh::find_active_cell(const ICoord& p) const {
  std::vector<int> cs = active_cells_at(p);
  return cs.empty() ? -1 : cs.front();
}

int Mesh::find_active_cell(const Eigen::Vector3d& x) const {
  ICoord p{to_integer(x[0]), to_integer(x[1]),
           spec_.dimension == 3 ? to_integer(x[2]) : 0};
  return find_active_cell(p);
}

void Mesh::split(int id) {
  Cell& c = cells_[id];
  if (!c.active) return;
  if (c.level + 1 > kLevelBits)
    throw std::runtime_error("Mesh: refinement depth exceeds integer coordinate resolution");
  ensure_neighbor_level(id);
  const int d = spec_.dimension;
  const std::int64_t half = cells_[id].isize() / 2;
  cells_[id].active = false;
  for (int k = 0; k < (1 << d); ++k) {
    Cell ch;
    ch.id = int(cells_.size());
    ch.level = cells_[id].level + 1;
    ch.anchor = cells_[id].anchor;
    for (int a = 0; a < d; ++a)
      if (k & (1 << a)) ch.anchor[a] += half;
    ch.parent = id;
    cells_[id].children[k] = ch.id;
    cells_.push_back(ch);
  }
  active_dirty_ = true;
  ++revision_;
}

// Before splitting a level-l cell, force every face neighbor to level >= l.
void Mesh::ensure_neighbor_level(int id) {
  const int d = spec_.dimension;
  for (;;) {
    const Cell c = cells_[id];
    bool changed = false;
    for (int a = 0; a < d && !changed; ++a)
      for (int s = 0; s < 2 && !changed; ++s) {
        ICoord center = c.anchor;
        for (int b = 0; b < d; ++b) center[b] += c.isize() / 2;
        center[a] = (s == 0) ? c.anchor[a] - c.isize() / 2 : c.anchor[a] + c.isize() + c.isize() / 2;
        if (!contains(center)) continue;
        // The neighbor-box center is never on a gridline of cells at level
        // <= l, so a coarser containing cell is unique when present.
        for (int nb : active_cells_at(center))
          if (cells_[nb].level < c.level) {
            split(nb);
            changed = true;
            break;
          }
      }
    if (!changed) return;
  }
}

void refine(Mesh& mesh, const std::vector<int>& marked) {
  std::vector<int> ids(marked);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  for (int id : ids) {
    if (id < 0 || id >= mesh.n_cells())
      throw std::invalid_argument("refine: unknown cell id");
    if (!mesh.cells_[id].active)
      throw std::invalid_argument("refine: cell is not active");
  }
  for (int id : ids) mesh.split(id);
}

void uniform_refine(Mesh& mesh, int times) {
  if (times < 0) throw std::invalid_argument("uniform_refine: times must be >= 0");
  for (int t = 0; t < times; ++t) {
    std::vector<int> all = mesh.active_cells();
    for (int id : all) mesh.split(id);
  }
}

std::vector<FaceEntry> active_faces(const Mesh& mesh) {
  std::vector<FaceEntry> out;
  const int d = mesh.dim();
  for (int id : mesh.active_cells()) {
    const Cell& c = mesh.cell(id);
    for (int a = 0; a < d; ++a)
      for (int s = 0; s < 2; ++s) {
        ICoord center = c.anchor;
        for (int b = 0; b < d; ++b) center[b] += c.isize() / 2;
        center[a] = (s == 0) ? c.anchor[a] - c.isize() / 2
                             : c.anchor[a] + c.isize() + c.isize() / 2;
        FaceEntry e;
        e.cell = id;
        e.axis = a;
        e.side = s;
        if (!mesh.contains(center)) {
          out.push_back(e);  // boundary
          continue;
        }
        std::vector<int> nbs = mesh.active_cells_at(center);
        int q = -1, qlevel = 1 << 30;
        for (int nb : nbs)
          if (mesh.cell(nb).level < qlevel) { qlevel = mesh.cell(nb).level; q = nb; }
        if (qlevel > c.level) continue;       // finer side reports
        if (qlevel == c.level && q > id) {
          e.neighbor = q;
          out.push_back(e);
        } else if (qlevel < c.level) {
          e.neighbor = q;
          e.rel = -1;
          out.push_back(e);
        }
      }
  }
  return out;
}

double total_active_measure(const Mesh& mesh) {
  double s = 0.0;
  for (int id : mesh.active_cells())
    s += std::pow(mesh.cell_edge(id), mesh.dim());
  return s;
}

} // namespace crackfield
