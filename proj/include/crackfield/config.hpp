#ifndef CRACKFIELD_CONFIG_HPP
#define CRACKFIELD_CONFIG_HPP

#include <string>
#include <vector>

#include "crackfield/adapt.hpp"
#include "crackfield/mesh.hpp"
#include "crackfield/model.hpp"
#include "crackfield/solver.hpp"

namespace crackfield {

/// Everything a study run needs, with defaults matching the 2d pressurized
/// penny-crack benchmark. Parsed from a flat `key = value` file with dotted
/// keys and `#` comments; unknown keys, bad types and out-of-range values
/// raise errors carrying the line number.
struct RunConfig {
  // n0 = 10 keeps the crack tips (|x| = l0 = 1) on grid vertices at every
  // refinement level of the benchmark domains (2K/n0 is a power of two).
  DomainSpec domain{2, 20.0, 10};
  Material material;
  SolverOptions solver;
  RefinementPolicy policy;

  int cycles = 4;               // adaptive solve-refine cycles after the first solve
  int n_steps = 4;              // loading steps at constant pressure (phi relaxation)
  bool halve_band_target = true;
  double seed_band = 0.0;       // fixed crack-slab half width; <= 0 = one cell layer
  int estimator_rounds = 1;     // estimator-driven refine passes per cycle
  int initial_refinements = 2;  // uniform refinements before seeding
  bool write_vtk = false;
  bool dump_matrices = false;  // CLI-only switch, not a config-file key
  std::string output_dir = "out";

  // study-specific sweeps
  std::vector<double> eps_list{0.5, 0.25, 0.125, 0.0625};
  std::vector<double> half_widths{5.0, 10.0, 20.0};
  std::vector<int> resolutions{16, 32, 64, 128};
  std::vector<double> cod_stations;  // empty = default grid

  void validate() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Canonical `key = value` form; parse_config(dump_config(c)) reproduces c.
std::string dump_config(const RunConfig& config);

} // namespace crackfield

#endif
