#include "crackfield/study.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace crackfield {

namespace {

std::string sanitize(const std::string& s) {
  std::string out;
  for (char ch : s) out += (std::isalnum(static_cast<unsigned char>(ch)) ? ch : '_');
  return out;
}

std::string format(const char* fmt, double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, x);
  return buf;
}

SneddonParams sneddon_of(const RunConfig& cfg) {
  SneddonParams p;
  p.pressure = cfg.material.pressure;
  p.l0 = cfg.material.l0;
  p.E = cfg.material.E;
  p.nu = cfg.material.nu;
  p.dimension = cfg.domain.dimension;
  return p;
}

// Refine cells meeting the crack band until every band cell satisfies the
// edge target, using the binary seed field as the band indicator.
void pre_refine_band(Mesh& mesh, const Material& mat, double h_target) {
  if (h_target <= 0.0) return;
  RefinementPolicy band_only;
  band_only.h_target = h_target;
  band_only.estimator = false;
  for (int round = 0; round < 40; ++round) {
    DofMap map = build_dof_map(mesh);
    FractureState seeded = make_initial_state(mesh, map, mat);
    std::vector<int> marked = mark_cells(mesh, map, seeded.solution, EstimatorField{}, band_only);
    if (marked.empty()) return;
    refine(mesh, marked);
  }
  throw std::runtime_error("pre_refine_band: target not reached in 40 rounds");
}

double default_band_target(const RunConfig& cfg) {
  if (cfg.policy.h_target > 0.0) return cfg.policy.h_target;
  if (cfg.material.eps_mode == EpsMode::fixed)
    return cfg.material.eps_fixed / (cfg.material.c_eps * std::sqrt(double(cfg.domain.dimension)));
  return 0.0;  // tied mode: the current band edge is the starting target
}

std::vector<LevelRecord> records_of(const std::vector<CycleResult>& cycles) {
  std::vector<LevelRecord> recs;
  recs.reserve(cycles.size());
  for (const CycleResult& c : cycles) recs.push_back(c.record);
  return recs;
}

std::vector<double> tcv_column(const std::vector<LevelRecord>& recs) {
  std::vector<double> v;
  for (const LevelRecord& r : recs) v.push_back(r.tcv);
  return v;
}

double cod_at(const LevelRecord& rec, double station) {
  for (std::size_t i = 0; i < rec.cod.stations.size(); ++i)
    if (std::abs(rec.cod.stations[i] - station) < 1e-12) return rec.cod.openings[i];
  throw std::logic_error("cod_at: station not recorded");
}

void write_series_csv(const RunConfig& cfg, StudyKind kind, const StudySeries& s) {
  std::filesystem::create_directories(cfg.output_dir);
  std::string path = cfg.output_dir + "/" + study_kind_name(kind) + "_" + sanitize(s.label) + ".csv";
  write_study_csv(path, s.records);
}

} // namespace

StudyKind study_kind_from_string(const std::string& name) {
  if (name == "solve") return StudyKind::solve;
  if (name == "eps_convergence" || name == "eps-conv") return StudyKind::eps_convergence;
  if (name == "domain_study" || name == "domain-study") return StudyKind::domain_study;
  if (name == "cod_study" || name == "cod-study") return StudyKind::cod_study;
  if (name == "sneddon3d") return StudyKind::sneddon3d;
  throw std::invalid_argument("unknown study '" + name + "'");
}

std::string study_kind_name(StudyKind kind) {
  switch (kind) {
    case StudyKind::solve: return "solve";
    case StudyKind::eps_convergence: return "eps_convergence";
    case StudyKind::domain_study: return "domain_study";
    case StudyKind::cod_study: return "cod_study";
    default: return "sneddon3d";
  }
}

AdaptiveRun run_adaptive(const RunConfig& config) {
  config.validate();
  AdaptiveRun run{create_mesh(config.domain), DofMap{}, FractureState{}, {}};
  uniform_refine(run.mesh, config.initial_refinements);
  const double target = default_band_target(config);
  pre_refine_band(run.mesh, config.material, target);
  run.map = build_dof_map(run.mesh);
  run.state = make_initial_state(run.mesh, run.map, config.material, config.seed_band);

  AdaptiveOptions opts;
  opts.policy = config.policy;
  opts.policy.h_target = target > 0.0 ? target : slit_band_edge(run.mesh, config.material);
  opts.solver = config.solver;
  opts.cycles = config.cycles;
  opts.n_steps = config.n_steps;
  opts.halve_band_target = config.halve_band_target;
  opts.seed_band = config.seed_band;
  opts.estimator_rounds = config.estimator_rounds;
  opts.cod_stations = config.cod_stations;
  Material mat = config.material;
  run.cycles = adaptive_cycle(run.mesh, run.map, run.state, mat, opts);
  return run;
}

StudyResult run_study(StudyKind kind, const RunConfig& config) {
  config.validate();
  StudyResult result;
  result.kind = kind;
  const double exact = tcv_exact(sneddon_of(config));

  switch (kind) {
    case StudyKind::solve: {
      AdaptiveRun run = run_adaptive(config);
      StudySeries s;
      s.label = "solve";
      s.records = records_of(run.cycles);
      for (LevelRecord& r : s.records)
        r.tcv_rel_err = exact != 0.0 ? std::abs(r.tcv - exact) / std::abs(exact) : r.tcv;
      RateFit fit = richardson(tcv_column(s.records));
      s.extrapolated = fit.valid ? fit.limit : 0.0;
      write_series_csv(config, kind, s);
      if (config.write_vtk)
        write_vtk(config.output_dir + "/solution.vtk", run.mesh, run.map, run.state.solution,
                  &run.state.phi_old);
      if (config.dump_matrices) {
        Regularization reg =
            resolve_regularization(run.mesh, config.material, slit_band_edge(run.mesh, config.material));
        ConstraintSet constraints = build_constraints(run.mesh, run.map, DirichletSpec{});
        FractureState probe = run.state;
        Vector phit = extrapolate_phi(probe);
        BlockSystem sys = assemble_jacobian(run.mesh, run.map, constraints, config.material, reg,
                                            run.state.solution.values, phit);
        write_matrix_market(config.output_dir + "/M_uu.mtx", sys.M_uu);
        write_matrix_market(config.output_dir + "/M_phiu.mtx", sys.M_phiu);
        write_matrix_market(config.output_dir + "/M_phiphi.mtx", sys.M_phiphi);
      }
      result.series.push_back(std::move(s));
      break;
    }

    case StudyKind::eps_convergence: {
      std::vector<double> eps_sorted = config.eps_list;
      std::sort(eps_sorted.begin(), eps_sorted.end(), std::greater<double>());
      std::vector<double> tcvs;
      for (double eps : eps_sorted) {
        RunConfig sub = config;
        sub.material.eps_mode = EpsMode::fixed;
        sub.material.eps_fixed = eps;
        sub.policy.h_target = 0.0;  // derive from eps
        sub.halve_band_target = false;
        AdaptiveRun run = run_adaptive(sub);
        StudySeries s;
        s.label = "eps_" + format("%g", eps);
        s.records = records_of(run.cycles);
        tcvs.push_back(s.records.back().tcv);
        write_series_csv(config, kind, s);
        result.series.push_back(std::move(s));
      }
      RateFit fit = richardson(tcvs);
      StudySeries sweep;
      sweep.label = "sweep";
      sweep.extrapolated = fit.valid ? fit.limit : 0.0;
      for (std::size_t i = 0; i < eps_sorted.size(); ++i) {
        LevelRecord r = result.series[i].records.back();
        r.level = int(i);
        r.eps = eps_sorted[i];
        r.tcv_rel_err =
            fit.valid ? std::abs(r.tcv - fit.limit) / std::abs(fit.limit) : 0.0;
        sweep.records.push_back(std::move(r));
      }
      write_series_csv(config, kind, sweep);
      result.series.push_back(std::move(sweep));
      break;
    }

    case StudyKind::domain_study: {
      const double k_min =
          *std::min_element(config.half_widths.begin(), config.half_widths.end());
      for (double K : config.half_widths) {
        RunConfig sub = config;
        sub.domain.half_width = K;
        // reach the same final eps on every domain: initial cells scale with K
        sub.cycles = config.cycles + int(std::lround(std::log2(K / k_min)));
        AdaptiveRun run = run_adaptive(sub);
        StudySeries s;
        s.label = "K_" + format("%g", K);
        s.records = records_of(run.cycles);
        for (LevelRecord& r : s.records)
          r.tcv_rel_err = std::abs(r.tcv - exact) / std::abs(exact);
        RateFit fit = richardson(tcv_column(s.records));
        s.extrapolated = fit.valid ? fit.limit : s.records.back().tcv;
        write_series_csv(config, kind, s);
        result.series.push_back(std::move(s));
      }
      break;
    }

    case StudyKind::cod_study: {
      RunConfig sub = config;
      if (sub.cod_stations.empty()) sub.cod_stations = {0.0};
      AdaptiveRun adaptive = run_adaptive(sub);
      StudySeries sa;
      sa.label = "adaptive";
      sa.records = records_of(adaptive.cycles);
      std::vector<double> cod0;
      for (const LevelRecord& r : sa.records) cod0.push_back(cod_at(r, 0.0));
      RateFit fit = richardson(cod0);
      sa.extrapolated = fit.valid ? fit.limit : cod0.back();
      for (std::size_t i = 0; i < sa.records.size(); ++i)
        sa.records[i].tcv_rel_err =
            std::abs(cod0[i] - sa.extrapolated) / std::abs(sa.extrapolated);
      write_series_csv(config, kind, sa);

      // uniform sequence, capped at the adaptive run's DoF budget
      const int budget = sa.records.back().dofs;
      StudySeries su;
      su.label = "uniform";
      for (int level = 0;; ++level) {
        RunConfig usub = sub;
        usub.cycles = 0;
        usub.initial_refinements = sub.initial_refinements + level;
        usub.policy.h_target = 0.0;
        usub.material.eps_mode = sub.material.eps_mode;
        Mesh mesh = create_mesh(usub.domain);
        uniform_refine(mesh, usub.initial_refinements);
        DofMap map = build_dof_map(mesh);
        if (level > 0 && map.n_total() > budget) break;
        FractureState state = make_initial_state(
            mesh, map, usub.material,
            sub.seed_band > 0.0 ? sub.seed_band : default_band_target(sub));
        AdaptiveOptions opts;
        opts.policy = usub.policy;
        opts.policy.h_target = mesh.min_active_edge();
        opts.solver = usub.solver;
        opts.cycles = 0;
        opts.n_steps = usub.n_steps;
        opts.cod_stations = sub.cod_stations;
        Material mat = usub.material;
        auto cycles = adaptive_cycle(mesh, map, state, mat, opts);
        LevelRecord rec = cycles.back().record;
        rec.level = level;
        rec.tcv_rel_err =
            std::abs(cod_at(rec, 0.0) - sa.extrapolated) / std::abs(sa.extrapolated);
        su.records.push_back(std::move(rec));
      }
      su.extrapolated = sa.extrapolated;
      write_series_csv(config, kind, su);
      result.series.push_back(std::move(sa));
      result.series.push_back(std::move(su));
      break;
    }

    case StudyKind::sneddon3d: {
      RunConfig sub = config;
      sub.domain.dimension = 3;
      if (sub.resolutions.empty())
        throw std::invalid_argument("sneddon3d: study.resolutions must not be empty");
      std::vector<int> res = sub.resolutions;
      std::sort(res.begin(), res.end());
      for (std::size_t i = 1; i < res.size(); ++i)
        if (res[i] != 2 * res[i - 1])
          throw std::invalid_argument("sneddon3d: resolutions must double per entry");
      sub.policy.h_target = 10.0 * sub.material.l0 / double(res.front());
      sub.halve_band_target = true;
      sub.material.eps_mode = EpsMode::tied;
      sub.cycles = int(res.size()) - 1;
      AdaptiveRun run = run_adaptive(sub);
      const double exact3d = tcv_exact(sneddon_of(sub));
      StudySeries s;
      s.label = "tied";
      s.records = records_of(run.cycles);
      for (LevelRecord& r : s.records)
        r.tcv_rel_err = std::abs(r.tcv - exact3d) / std::abs(exact3d);
      RateFit fit = richardson(tcv_column(s.records));
      s.extrapolated = fit.valid ? fit.limit : 0.0;
      write_series_csv(config, kind, s);
      result.series.push_back(std::move(s));
      break;
    }
  }

  result.summary = report(result);
  std::filesystem::create_directories(config.output_dir);
  std::ofstream out(config.output_dir + "/summary.txt");
  if (!out) throw std::runtime_error("cannot write " + config.output_dir + "/summary.txt");
  out << result.summary;
  return result;
}

std::string report(const StudyResult& result) {
  std::string text = "study: " + study_kind_name(result.kind) + "\n";
  for (const StudySeries& s : result.series) {
    text += "\nseries " + s.label + "\n";
    const bool with_cod = !s.records.empty() && !s.records.front().cod.stations.empty();
    text += "  level      dofs        eps      h_min          tcv    rel_err%  newton  gmres";
    if (with_cod) text += "         cod0";
    text += "\n";
    std::vector<std::pair<double, double>> rate_pairs;
    for (const LevelRecord& r : s.records) {
      char buf[192];
      std::snprintf(buf, sizeof(buf), "  %5d %9d %10.4g %10.4g %12.6e %10.4g %7d %6.1f",
                    r.level, r.dofs, r.eps, r.h_min, r.tcv, 100.0 * r.tcv_rel_err,
                    r.newton_iters, r.gmres_mean);
      text += buf;
      if (with_cod && !r.cod.openings.empty())
        text += format(" %12.6e", r.cod.openings.front());
      text += "\n";
      if (r.tcv_rel_err > 0.0 && r.h_min > 0.0) rate_pairs.emplace_back(r.h_min, r.tcv_rel_err);
    }
    if (s.extrapolated != 0.0)
      text += "  extrapolated = " + format("%.6e", s.extrapolated) + "\n";
    if (rate_pairs.size() >= 2) {
      double q = fit_rate(rate_pairs);
      text += "  fitted rate vs h = " + format("%.3f", q) + "\n";
    }
  }
  return text;
}

} // namespace crackfield
