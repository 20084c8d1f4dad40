#ifndef CRACKFIELD_ADAPT_HPP
#define CRACKFIELD_ADAPT_HPP

#include <vector>

#include "crackfield/postproc.hpp"
#include "crackfield/solver.hpp"

namespace crackfield {

struct RefinementPolicy {
  double phi_threshold = 0.8;  // band cells: min nodal phi below this
  double h_target = 0.0;       // band cells refined while edge > h_target
  double theta = 0.3;          // bulk fraction of the squared indicator
  int max_level = kLevelBits;
  bool estimator = true;

  void validate() const;
};

/// Per-active-cell error indicator, aligned with mesh.active_cells().
struct EstimatorField {
  std::vector<int> cells;
  std::vector<double> eta;  // eta_c >= 0 (not squared)
};

/// Gradient-jump indicator for the displacements:
/// eta_c^2 = sum over interior faces of c of (h_F/2) int_F ||[grad u . n]||^2,
/// each face integral split half/half between its two cells.
EstimatorField jump_estimator(const Mesh& mesh, const DofMap& map, const FieldVector& sol);

/// Union of crack-band cells above the target edge and the top-eta cells
/// covering fraction theta of sum eta_c^2, capped at max_level.
std::vector<int> mark_cells(const Mesh& mesh, const DofMap& map, const FieldVector& sol,
                            const EstimatorField& est, const RefinementPolicy& policy);

struct AdaptiveOptions {
  RefinementPolicy policy;
  SolverOptions solver;
  int cycles = 0;
  int n_steps = 1;
  bool halve_band_target = true;  // tied-eps mode: halve h_target per cycle
  // Geometric half-width of the re-seeded crack slab. 0 means one cell layer
  // per mesh in tied mode; in fixed-eps mode the entry band edge is kept so
  // that h-refinement does not thin the crack.
  double seed_band = 0.0;
  // Estimator-driven refinement passes per cycle (solve, estimate, mark,
  // refine). Values > 1 let singular regions (crack tips) refine deeper than
  // the band target between records, which restores optimal functional rates.
  int estimator_rounds = 1;
  std::vector<double> cod_stations;  // when nonempty, record a COD profile per level
};

struct CycleResult {
  LevelRecord record;
  NewtonReport report;
};

/// Predictor-corrector adaptive loop: solve, estimate, mark, refine,
/// transfer, re-seed the crack band. Mesh, map and state are replaced by the
/// refined versions; one record per solved level (cycles+1 on success).
std::vector<CycleResult> adaptive_cycle(Mesh& mesh, DofMap& map, FractureState& state,
                                        Material& mat, const AdaptiveOptions& opts);

} // namespace crackfield

#endif
