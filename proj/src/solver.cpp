#include "crackfield/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace crackfield {

std::set<int> detect_cycles(const std::unordered_map<int, std::vector<char>>& history,
                            int window, int toggles) {
  std::set<int> out;
  for (const auto& [dof, bits] : history) {
    const int n = int(bits.size());
    const int start = std::max(0, n - window);
    int changes = 0;
    for (int i = start + 1; i < n; ++i)
      if (bits[i] != bits[i - 1]) ++changes;
    if (changes >= toggles) out.insert(dof);
  }
  return out;
}

FractureState make_initial_state(const Mesh& mesh, const DofMap& map, const Material& mat,
                                 double seed_band) {
  FractureState st;
  st.solution = FieldVector(map);
  CrackSeed seed = initial_crack(mesh, map, mat, seed_band);
  for (int v = 0; v < map.n_vertices(); ++v)
    st.solution.values[map.phi_dof(v)] = seed.phi[v];
  st.phi_old = seed.phi;
  st.phi_prev2 = seed.phi;
  st.step = 0;
  return st;
}

namespace {

// phi block of a full-length vector, made conforming across hanging nodes.
Vector conforming_phi(const DofMap& map, const ConstraintSet& base, const Vector& phi_nodal) {
  Vector full = Vector::Zero(map.n_total());
  for (int v = 0; v < map.n_vertices(); ++v) full[map.phi_dof(v)] = phi_nodal[v];
  base.distribute(full);
  return full.tail(map.n_phi());
}

} // namespace

NewtonReport newton_active_set_step(FractureState& state, const Material& mat,
                                    const Mesh& mesh, const DofMap& map,
                                    const Regularization& reg, const SolverOptions& opts) {
  NewtonReport report;
  const int nu = map.n_u(), np = map.n_phi();
  const DirichletSpec dirichlet;
  ConstraintSet base = build_constraints(mesh, map, dirichlet, {});

  Vector& x = state.solution.values;
  base.distribute(x);
  Vector phi_tilde = conforming_phi(map, base, extrapolate_phi(state));

  ActiveSetState as;
  as.c = opts.active_set_c_scale * mat.G_c / reg.eps;

  // phi dofs eligible for the active set (real unknowns only)
  std::vector<int> candidates;
  candidates.reserve(np);
  for (int v = 0; v < map.n_vertices(); ++v)
    if (!base.is_constrained(map.phi_dof(v))) candidates.push_back(v);

  std::set<int> prev_active;
  double res0 = -1.0;
  BlockPreconditioner prec;
  bool have_prec = false;

  for (int it = 1; it <= opts.newton_max_iter; ++it) {
    Vector R = assemble_residual(mesh, map, base, mat, reg, x, phi_tilde);

    // primal-dual active set update: lambda_i = -(F_phi)_i. The strict-positivity
    // test gets a c-scaled floor so assembly roundoff (|lambda| ~ 1e-16) cannot
    // activate dofs at an exact equilibrium.
    const double active_tol = 1e-14 * as.c;
    std::set<int> active = as.fixed;
    for (int v : candidates) {
      const int dof = map.phi_dof(v);
      const double lambda = -R[dof];
      if (as.c * (x[dof] - state.phi_old[v]) + lambda > active_tol) active.insert(dof);
    }
    // membership history and cycle handling
    std::size_t hist_len = 0;
    for (auto& [dof, bits] : as.history) hist_len = std::max(hist_len, bits.size());
    for (int dof : active) {
      auto& bits = as.history[dof];
      bits.resize(hist_len, 0);  // backfill inactive prehistory
    }
    for (auto& [dof, bits] : as.history)
      bits.push_back(active.count(dof) ? 1 : 0);
    for (int dof : detect_cycles(as.history, opts.cycle_window, opts.cycle_toggles)) {
      as.fixed.insert(dof);
      active.insert(dof);
    }
    as.active = active;

    int changes = 0;
    for (int dof : active)
      if (!prev_active.count(dof)) ++changes;
    for (int dof : prev_active)
      if (!active.count(dof)) ++changes;

    std::unordered_map<int, double> active_values;
    for (int dof : active) active_values[dof] = state.phi_old[dof - nu];
    ConstraintSet full = build_constraints(mesh, map, dirichlet, active_values);

    // impose phi = phi_old on the active set; reassemble only if x moved
    Vector x_before = x;
    full.distribute(x);
    const bool moved = (x - x_before).cwiseAbs().maxCoeff() > 0.0;
    if (moved) {
      R = assemble_residual(mesh, map, full, mat, reg, x, phi_tilde);
    } else {
      for (int dof : active) R[dof] = 0.0;
    }
    const double res = R.norm();
    if (res0 < 0.0) res0 = res;

    NewtonIteration rec;
    rec.residual_norm = res;
    rec.active_size = int(active.size());
    rec.set_changes = changes;

    const bool small = res <= std::max(opts.newton_tol * res0, opts.newton_abs_floor);
    if (changes == 0 && small) {
      report.iterations.push_back(rec);
      if (opts.log)
        std::printf("newton step=%d it=%d res=%.6e active=%d changed=%d gmres=0\n",
                    state.step, it, res, rec.active_size, changes);
      report.converged = true;
      break;
    }

    BlockSystem J = assemble_jacobian(mesh, map, full, mat, reg, x, phi_tilde);
    if (!have_prec || !opts.freeze_preconditioner) {
      BlockPreconditioner::NullspaceInfo ns;
      ns.u_modes = rigid_body_modes(mesh, map, full);
      ns.u_node_of_dof.resize(nu);
      for (int i = 0; i < nu; ++i) ns.u_node_of_dof[i] = map.dof_vertex(i);
      ns.phi_modes = Matrix::Ones(np, 1);
      for (int v = 0; v < np; ++v)
        if (full.is_constrained(map.phi_dof(v))) ns.phi_modes(v, 0) = 0.0;
      ns.phi_node_of_dof.resize(np);
      for (int i = 0; i < np; ++i) ns.phi_node_of_dof[i] = i;
      prec = BlockPreconditioner::build(J, opts.prec_kind, opts.amg, &ns);
      have_prec = true;
    }

    GmresResult lin = gmres([&J](const Vector& v) { return J.apply(v); },
                            [&prec](const Vector& v) { return prec.apply(v); },
                            Vector(-R), opts.gmres);
    if (!lin.converged && !lin.breakdown)
      throw std::runtime_error("newton_active_set_step: GMRES stagnated at max_iter");
    rec.gmres_iterations = lin.iterations;
    report.iterations.push_back(rec);
    if (opts.log)
      std::printf("newton step=%d it=%d res=%.6e active=%d changed=%d gmres=%d\n",
                  state.step, it, res, rec.active_size, changes, lin.iterations);

    Vector delta = lin.x;
    full.distribute_homogeneous(delta);
    x += delta;

    if (opts.damping) {
      double scale = 1.0;
      for (int half = 0; half < 4; ++half) {
        Vector Rn = assemble_residual(mesh, map, full, mat, reg, x, phi_tilde);
        if (Rn.norm() <= 10.0 * res) break;
        scale *= 0.5;
        x -= scale * delta;
      }
    }

    prev_active = active;
  }

  double viol = 0.0;
  for (int v = 0; v < np; ++v)
    viol = std::max(viol, x[map.phi_dof(v)] - state.phi_old[v]);
  report.feasibility_violation = viol;
  return report;
}

std::vector<NewtonReport> solve_loading_sequence(FractureState& state, const Material& mat,
                                                 const Mesh& mesh, const DofMap& map,
                                                 const Regularization& reg,
                                                 const SolverOptions& opts, int n_steps) {
  if (n_steps < 1) throw std::invalid_argument("solve_loading_sequence: n_steps must be >= 1");
  std::vector<NewtonReport> reports;
  for (int n = 1; n <= n_steps; ++n) {
    state.phi_prev2 = state.phi_old;
    state.phi_old = state.solution.values.tail(map.n_phi());
    state.step = n;
    reports.push_back(newton_active_set_step(state, mat, mesh, map, reg, opts));
    if (!reports.back().converged) break;
  }
  return reports;
}

} // namespace crackfield
