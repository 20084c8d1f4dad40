#include "crackfield/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace crackfield {

void RefinementPolicy::validate() const {
  if (!(phi_threshold > 0.0 && phi_threshold < 1.0))
    throw std::invalid_argument("RefinementPolicy: phi_threshold must be in (0,1)");
  if (!(theta >= 0.0 && theta <= 1.0))
    throw std::invalid_argument("RefinementPolicy: theta must be in [0,1]");
}

EstimatorField jump_estimator(const Mesh& mesh, const DofMap& map, const FieldVector& sol) {
  const int d = mesh.dim();
  EstimatorField est;
  est.cells = mesh.active_cells();
  est.eta.assign(est.cells.size(), 0.0);
  std::vector<int> index(mesh.n_cells(), -1);
  for (std::size_t i = 0; i < est.cells.size(); ++i) index[est.cells[i]] = int(i);

  Quadrature face_rule = Quadrature::cell_rule(d - 1, 2);
  std::vector<double> eta2(est.cells.size(), 0.0);

  for (const FaceEntry& f : active_faces(mesh)) {
    if (f.boundary()) continue;
    const double h = mesh.cell_edge(f.cell);  // reporting side is the finer one
    Eigen::Vector3d lo = mesh.corner_physical(f.cell, 0);
    Eigen::Vector3d base = lo;
    if (f.side == 1) base[f.axis] += h;

    int span[2] = {-1, -1};
    int ns = 0;
    for (int a = 0; a < d; ++a)
      if (a != f.axis) span[ns++] = a;

    double jump2 = 0.0;
    for (int q = 0; q < int(face_rule.weights.size()); ++q) {
      Eigen::Vector3d x = base;
      for (int s = 0; s < ns; ++s) x[span[s]] += face_rule.points(q, s) * h;
      PointValue a = evaluate_on_cell(mesh, map, sol, f.cell, x);
      PointValue b = evaluate_on_cell(mesh, map, sol, f.neighbor, x);
      Eigen::Vector3d ja = a.grad_u.col(f.axis) - b.grad_u.col(f.axis);
      jump2 += face_rule.weights[q] * ja.squaredNorm();
    }
    const double face_measure = std::pow(h, d - 1);
    const double contrib = 0.5 * h * jump2 * face_measure;  // (h_F/2) * integral
    eta2[index[f.cell]] += 0.5 * contrib;
    eta2[index[f.neighbor]] += 0.5 * contrib;
  }
  for (std::size_t i = 0; i < eta2.size(); ++i) est.eta[i] = std::sqrt(eta2[i]);
  return est;
}

std::vector<int> mark_cells(const Mesh& mesh, const DofMap& map, const FieldVector& sol,
                            const EstimatorField& est, const RefinementPolicy& policy) {
  policy.validate();
  const int d = mesh.dim();
  std::vector<int> marked;

  // crack-band cells above the target edge
  for (int id : mesh.active_cells()) {
    if (mesh.cell(id).level >= policy.max_level) continue;
    if (mesh.cell_edge(id) <= policy.h_target * (1.0 + 1e-9)) continue;
    double phimin = 1e300;
    for (int k = 0; k < (1 << d); ++k) {
      int v = map.vertex_index(mesh.corner(id, k));
      phimin = std::min(phimin, sol.values[map.phi_dof(v)]);
    }
    if (phimin < policy.phi_threshold) marked.push_back(id);
  }

  // fixed-fraction marking on the squared indicator
  if (policy.estimator && policy.theta > 0.0 && !est.cells.empty()) {
    double total = 0.0;
    std::vector<std::pair<double, int>> order;
    order.reserve(est.cells.size());
    for (std::size_t i = 0; i < est.cells.size(); ++i) {
      const double e2 = est.eta[i] * est.eta[i];
      total += e2;
      order.emplace_back(-e2, est.cells[i]);
    }
    std::sort(order.begin(), order.end());
    double acc = 0.0;
    for (const auto& [neg, id] : order) {
      if (total <= 0.0 || acc >= policy.theta * total) break;
      acc += -neg;
      if (mesh.cell(id).level < policy.max_level && -neg > 0.0) marked.push_back(id);
    }
  }

  std::sort(marked.begin(), marked.end());
  marked.erase(std::unique(marked.begin(), marked.end()), marked.end());
  return marked;
}

namespace {

// Transfer u, reset phi/phi_old/history to the re-seeded crack.
void move_state(const Mesh& old_mesh, const DofMap& old_map, FractureState& state,
                const Material& mat, const Mesh& new_mesh, const DofMap& new_map,
                double seed_band) {
  FieldVector moved = transfer(old_mesh, old_map, state.solution, new_mesh, new_map);
  CrackSeed seed = initial_crack(new_mesh, new_map, mat, seed_band);
  FractureState next;
  next.solution = FieldVector(new_map);
  next.solution.values.head(new_map.n_u()) = moved.values.head(new_map.n_u());
  for (int v = 0; v < new_map.n_vertices(); ++v)
    next.solution.values[new_map.phi_dof(v)] = seed.phi[v];
  next.phi_old = seed.phi;
  next.phi_prev2 = seed.phi;
  next.step = 0;
  state = std::move(next);
}

} // namespace

std::vector<CycleResult> adaptive_cycle(Mesh& mesh, DofMap& map, FractureState& state,
                                        Material& mat, const AdaptiveOptions& opts) {
  if (opts.cycles < 0) throw std::invalid_argument("adaptive_cycle: cycles must be >= 0");
  RefinementPolicy policy = opts.policy;
  double seed_band = opts.seed_band;
  if (seed_band <= 0.0 && !opts.halve_band_target)
    seed_band = slit_band_edge(mesh, mat);  // keep the slab fixed under h-refinement
  std::vector<CycleResult> results;

  for (int cycle = 0; cycle <= opts.cycles; ++cycle) {
    Regularization reg = resolve_regularization(mesh, mat, slit_band_edge(mesh, mat));
    auto reports = solve_loading_sequence(state, mat, mesh, map, reg, opts.solver, opts.n_steps);

    CycleResult res;
    res.report = reports.back();
    res.record.level = cycle;
    res.record.dofs = map.n_total();
    res.record.eps = reg.eps;
    res.record.h_min = mesh.min_active_edge();
    res.record.tcv = std::abs(compute_tcv(mesh, map, state.solution));
    res.record.newton_iters = int(res.report.iterations.size());
    res.record.gmres_mean = res.report.mean_gmres();
    if (!opts.cod_stations.empty())
      res.record.cod = compute_cod(mesh, map, state.solution, opts.cod_stations);
    results.push_back(std::move(res));
    if (!reports.back().converged || cycle == opts.cycles) break;

    if (opts.halve_band_target) policy.h_target = 0.5 * slit_band_edge(mesh, mat);

    for (int pass = 0; pass < std::max(1, opts.estimator_rounds); ++pass) {
      if (pass > 0) {
        Regularization r = resolve_regularization(mesh, mat, slit_band_edge(mesh, mat));
        auto rep = solve_loading_sequence(state, mat, mesh, map, r, opts.solver, opts.n_steps);
        if (!rep.back().converged) break;
      }
      EstimatorField est;
      if (policy.estimator) {
        est = jump_estimator(mesh, map, state.solution);
        // Band cells above the target are refined by the band clause anyway;
        // exclude them from the fixed-fraction ranking so theta concentrates
        // on cells the band clause cannot reach: crack-tip cells already at
        // the target (graded deeper) and the coarse far field.
        for (std::size_t i = 0; i < est.cells.size(); ++i) {
          const int id = est.cells[i];
          if (mesh.cell_edge(id) <= policy.h_target * (1.0 + 1e-9)) continue;
          double phimin = 1e300;
          for (int k = 0; k < (1 << mesh.dim()); ++k) {
            int v = map.vertex_index(mesh.corner(id, k));
            phimin = std::min(phimin, state.solution.values[map.phi_dof(v)]);
          }
          if (phimin < policy.phi_threshold) est.eta[i] = 0.0;
        }
      }
      std::vector<int> marked = mark_cells(mesh, map, state.solution, est, policy);
      if (marked.empty()) break;  // nothing refinable (level cap)

      for (int round = 0; round < 10 && !marked.empty(); ++round) {
        Mesh old_mesh = mesh;
        DofMap old_map = map;
        refine(mesh, marked);
        map = build_dof_map(mesh);
        move_state(old_mesh, old_map, state, mat, mesh, map, seed_band);
        // saturation rounds: band-only marking on the re-seeded field
        RefinementPolicy band_only = policy;
        band_only.estimator = false;
        marked = mark_cells(mesh, map, state.solution, EstimatorField{}, band_only);
      }
    }
  }
  return results;
}

} // namespace crackfield
