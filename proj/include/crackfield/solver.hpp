#ifndef CRACKFIELD_SOLVER_HPP
#define CRACKFIELD_SOLVER_HPP

#include <set>
#include <unordered_map>
#include <vector>

#include "crackfield/linsolve.hpp"
#include "crackfield/model.hpp"

namespace crackfield {

struct SolverOptions {
  double newton_tol = 1e-8;        // relative residual reduction
  double newton_abs_floor = 1e-11;
  int newton_max_iter = 50;
  double active_set_c_scale = 100.0;  // c = scale * G_c / eps
  int cycle_window = 8;               // W
  int cycle_toggles = 3;              // T
  bool damping = false;               // halve step up to 4 times on 10x residual growth
  PrecKind prec_kind = PrecKind::amg;
  bool freeze_preconditioner = false; // keep the first Newton step's preconditioner
  GmresOptions gmres;
  AmgOptions amg;
  bool log = false;
};

struct NewtonIteration {
  double residual_norm = 0.0;
  int active_size = 0;
  int set_changes = 0;
  int gmres_iterations = 0;
};

struct NewtonReport {
  std::vector<NewtonIteration> iterations;
  bool converged = false;
  double feasibility_violation = 0.0;  // max(phi - phi_old) at exit
  int total_gmres() const {
    int s = 0;
    for (const auto& it : iterations) s += it.gmres_iterations;
    return s;
  }
  double mean_gmres() const {
    return iterations.empty() ? 0.0 : double(total_gmres()) / double(iterations.size());
  }
};

/// Per-dof active-set membership history with cycle handling: dofs whose
/// membership toggles >= T times within the last W iterations are fixed
/// active for the rest of the loading step.
struct ActiveSetState {
  std::set<int> active;                 // A (phi dofs, map-global indices)
  std::set<int> fixed;                  // P, permanently constrained
  std::unordered_map<int, std::vector<char>> history;
  double c = 0.0;                       // complementarity constant
};

/// Dofs whose membership toggled at least `toggles` times within the last
/// `window` entries of their history.
std::set<int> detect_cycles(const std::unordered_map<int, std::vector<char>>& history,
                            int window, int toggles);

/// One loading step of the combined semi-smooth Newton / primal-dual
/// active-set iteration. The state's solution is updated in place.
NewtonReport newton_active_set_step(FractureState& state, const Material& mat,
                                    const Mesh& mesh, const DofMap& map,
                                    const Regularization& reg, const SolverOptions& opts);

/// Loading sequence n = 1..n_steps: shift history, extrapolate, solve.
/// Aborts after a non-converged step; the caller inspects the last report.
std::vector<NewtonReport> solve_loading_sequence(FractureState& state, const Material& mat,
                                                 const Mesh& mesh, const DofMap& map,
                                                 const Regularization& reg,
                                                 const SolverOptions& opts, int n_steps);

/// Fresh state on a seeded mesh: u = 0, phi = phi_old = initial crack.
/// seed_band <= 0 uses a one-cell-layer slab (see initial_crack).
FractureState make_initial_state(const Mesh& mesh, const DofMap& map, const Material& mat,
                                 double seed_band = 0.0);

} // namespace crackfield

#endif
