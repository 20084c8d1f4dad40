#include "crackfield/postproc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace crackfield {

double compute_tcv(const Mesh& mesh, const DofMap& map, const FieldVector& sol) {
  const int d = mesh.dim();
  Quadrature quad = Quadrature::cell_rule(d, 2);
  double tcv = 0.0;
  for (int id : mesh.active_cells()) {
    const double h = mesh.cell_edge(id);
    const double detJ = std::pow(h, d);
    Eigen::Vector3d lo = mesh.corner_physical(id, 0);
    for (int q = 0; q < int(quad.weights.size()); ++q) {
      Eigen::Vector3d x = lo;
      for (int a = 0; a < d; ++a) x[a] += quad.points(q, a) * h;
      PointValue pv = evaluate_on_cell(mesh, map, sol, id, x);
      tcv += quad.weights[q] * detJ * pv.u.dot(pv.grad_phi);
    }
  }
  return tcv;
}

std::vector<double> default_cod_stations() {
  std::vector<double> s;
  for (int i = -30; i <= 30; ++i) s.push_back(0.05 * i);
  return s;
}

namespace {

double line_integral_station(const Mesh& mesh, const DofMap& map, const FieldVector& sol,
                             double station) {
  const int d = mesh.dim();
  const int axis = d - 1;  // integration axis: y in 2d, z in 3d
  const double K = mesh.spec().half_width;
  Quadrature line = Quadrature::line_rule(4);

  // A station on a cell face belongs to the column on its right (left for
  // the domain's far face), so cell segments tile the line exactly once.
  auto owns = [K](double lo, double hi, double s) {
    return (s < K) ? (lo <= s && s < hi) : (lo < s && s <= hi);
  };

  double total = 0.0;
  for (int id : mesh.active_cells()) {
    Eigen::Vector3d lo = mesh.corner_physical(id, 0);
    Eigen::Vector3d hi = mesh.corner_physical(id, (1 << d) - 1);
    if (!owns(lo[0], hi[0], station)) continue;
    if (d == 3 && !owns(lo[1], hi[1], 0.0)) continue;
    const double h = mesh.cell_edge(id);
    for (int q = 0; q < int(line.weights.size()); ++q) {
      Eigen::Vector3d x(station, 0.0, 0.0);
      x[axis] = lo[axis] + line.points(q, 0) * h;
      PointValue pv = evaluate_on_cell(mesh, map, sol, id, x);
      total += line.weights[q] * h * pv.u.dot(pv.grad_phi);
    }
  }
  return total;
}

} // namespace

CodProfile compute_cod(const Mesh& mesh, const DofMap& map, const FieldVector& sol,
                       const std::vector<double>& stations, CodMethod method,
                       double trace_offset) {
  const int d = mesh.dim();
  const double K = mesh.spec().half_width;
  CodProfile profile;
  profile.stations = stations;
  for (std::size_t i = 1; i < stations.size(); ++i)
    if (!(stations[i] > stations[i - 1]))
      throw std::invalid_argument("compute_cod: stations must be strictly increasing");
  for (double s : stations) {
    if (std::abs(s) > K) throw std::invalid_argument("compute_cod: station outside domain");
    double opening;
    if (method == CodMethod::line_integral) {
      // The normal line crosses the regularized interface twice (one
      // transition per crack face), so the integral measures the full
      // opening; halve it to report the single-face displacement u_n that
      // cod_exact describes.
      opening = 0.5 * std::abs(line_integral_station(mesh, map, sol, s));
    } else {
      Eigen::Vector3d xp(s, 0.0, 0.0), xm(s, 0.0, 0.0);
      xp[d - 1] = trace_offset;
      xm[d - 1] = -trace_offset;
      opening = std::abs(evaluate(mesh, map, sol, xp).u[d - 1] -
                         evaluate(mesh, map, sol, xm).u[d - 1]);
    }
    profile.openings.push_back(opening);
  }
  return profile;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

} // namespace

void write_vtk(const std::string& path, const Mesh& mesh, const DofMap& map,
               const FieldVector& sol, const Vector* phi_old,
               const std::vector<double>* cell_estimator) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_vtk: cannot open " + path);
  const int d = mesh.dim();
  const int nv = map.n_vertices();
  const auto& active = mesh.active_cells();

  out << "# vtk DataFile Version 3.0\n";
  out << "crackfield phase-field fracture\n";
  out << "ASCII\n";
  out << "DATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << nv << " double\n";
  for (int v = 0; v < nv; ++v) {
    Eigen::Vector3d x = map.vertex_physical(mesh, v);
    out << fmt(x[0]) << " " << fmt(x[1]) << " " << fmt(x[2]) << "\n";
  }

  const int npc = 1 << d;
  out << "CELLS " << active.size() << " " << active.size() * (npc + 1) << "\n";
  // VTK corner order differs from z-order on the top edge/face
  static const int quad_order[4] = {0, 1, 3, 2};
  static const int hex_order[8] = {0, 1, 3, 2, 4, 5, 7, 6};
  for (int id : active) {
    out << npc;
    for (int k = 0; k < npc; ++k) {
      int corner = (d == 2) ? quad_order[k] : hex_order[k];
      out << " " << map.vertex_index(mesh.corner(id, corner));
    }
    out << "\n";
  }
  out << "CELL_TYPES " << active.size() << "\n";
  for (std::size_t i = 0; i < active.size(); ++i) out << (d == 2 ? 9 : 12) << "\n";

  out << "POINT_DATA " << nv << "\n";
  out << "VECTORS u double\n";
  for (int v = 0; v < nv; ++v) {
    out << fmt(sol.values[map.u_dof(v, 0)]) << " " << fmt(sol.values[map.u_dof(v, 1)]) << " "
        << fmt(d == 3 ? sol.values[map.u_dof(v, 2)] : 0.0) << "\n";
  }
  out << "SCALARS phi double 1\n";
  out << "LOOKUP_TABLE default\n";
  for (int v = 0; v < nv; ++v) out << fmt(sol.values[map.phi_dof(v)]) << "\n";
  if (phi_old) {
    out << "SCALARS phi_old double 1\n";
    out << "LOOKUP_TABLE default\n";
    for (int v = 0; v < nv; ++v) out << fmt((*phi_old)[v]) << "\n";
  }
  if (cell_estimator) {
    out << "CELL_DATA " << active.size() << "\n";
    out << "SCALARS estimator double 1\n";
    out << "LOOKUP_TABLE default\n";
    for (double e : *cell_estimator) out << fmt(e) << "\n";
  }
  if (!out) throw std::runtime_error("write_vtk: write failed for " + path);
}

void write_study_csv(const std::string& path, const std::vector<LevelRecord>& records) {
  if (records.empty()) throw std::invalid_argument("write_study_csv: no records");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_study_csv: cannot open " + path);
  out << "level,dofs,eps,h_min,tcv,tcv_rel_err,newton_iters,gmres_mean\n";
  std::vector<LevelRecord> rows = records;
  std::sort(rows.begin(), rows.end(),
            [](const LevelRecord& a, const LevelRecord& b) { return a.level < b.level; });
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.12g,%.12g,%.12g,%.12g,%d,%.12g\n", r.level, r.dofs,
                  r.eps, r.h_min, r.tcv, r.tcv_rel_err, r.newton_iters, r.gmres_mean);
    out << buf;
  }
  if (!out) throw std::runtime_error("write_study_csv: write failed for " + path);
}

std::vector<LevelRecord> read_study_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_study_csv: cannot open " + path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<LevelRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    LevelRecord r;
    std::istringstream ss(line);
    std::string tok;
    auto next = [&]() {
      if (!std::getline(ss, tok, ',')) throw std::runtime_error("read_study_csv: short row");
      return tok;
    };
    r.level = std::stoi(next());
    r.dofs = std::stoi(next());
    r.eps = std::stod(next());
    r.h_min = std::stod(next());
    r.tcv = std::stod(next());
    r.tcv_rel_err = std::stod(next());
    r.newton_iters = std::stoi(next());
    r.gmres_mean = std::stod(next());
    out.push_back(r);
  }
  return out;
}

} // namespace crackfield
