#ifndef CRACKFIELD_POSTPROC_HPP
#define CRACKFIELD_POSTPROC_HPP

#include <string>
#include <vector>

#include "crackfield/fem.hpp"
#include "crackfield/mesh.hpp"

namespace crackfield {

enum class CodMethod { line_integral, displacement_trace };

struct CodProfile {
  std::vector<double> stations;  // strictly increasing crack-line coordinates
  std::vector<double> openings;
};

/// TCV_{h,eps} = integral of u . grad(phi) over the domain (signed; the
/// benchmark compares magnitudes).
double compute_tcv(const Mesh& mesh, const DofMap& map, const FieldVector& sol);

/// Opening profile: per station, the line integral of u . grad(phi) along
/// the normal line through the crack plane (4-point Gauss per cell segment).
CodProfile compute_cod(const Mesh& mesh, const DofMap& map, const FieldVector& sol,
                       const std::vector<double>& stations,
                       CodMethod method = CodMethod::line_integral,
                       double trace_offset = 0.0);

std::vector<double> default_cod_stations();

/// Per-level study record (one row of the convergence tables).
struct LevelRecord {
  int level = 0;
  int dofs = 0;
  double eps = 0.0;
  double h_min = 0.0;
  double tcv = 0.0;
  double tcv_rel_err = 0.0;
  int newton_iters = 0;
  double gmres_mean = 0.0;
  CodProfile cod;
};

/// Legacy ASCII VTK unstructured grid with point data u (vectors) and phi,
/// optional phi_old point data and estimator cell data.
void write_vtk(const std::string& path, const Mesh& mesh, const DofMap& map,
               const FieldVector& sol, const Vector* phi_old = nullptr,
               const std::vector<double>* cell_estimator = nullptr);

void write_study_csv(const std::string& path, const std::vector<LevelRecord>& records);

std::vector<LevelRecord> read_study_csv(const std::string& path);

} // namespace crackfield

#endif
