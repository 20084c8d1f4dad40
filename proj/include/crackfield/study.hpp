#ifndef CRACKFIELD_STUDY_HPP
#define CRACKFIELD_STUDY_HPP

#include <string>
#include <vector>

#include "crackfield/config.hpp"
#include "crackfield/postproc.hpp"
#include "crackfield/reference.hpp"

namespace crackfield {

enum class StudyKind { solve, eps_convergence, domain_study, cod_study, sneddon3d };

StudyKind study_kind_from_string(const std::string& name);
std::string study_kind_name(StudyKind kind);

struct StudySeries {
  std::string label;
  std::vector<LevelRecord> records;
  double extrapolated = 0.0;  // Richardson limit of the tcv column (0 if invalid)
};

struct StudyResult {
  StudyKind kind = StudyKind::solve;
  std::vector<StudySeries> series;
  std::string summary;
};

/// Complete adaptive pipeline for one configuration: initial uniform
/// refinements, crack-band pre-refinement, seeding, solve-refine cycles.
struct AdaptiveRun {
  Mesh mesh;
  DofMap map;
  FractureState state;
  std::vector<CycleResult> cycles;
};

AdaptiveRun run_adaptive(const RunConfig& config);

/// Runs one study and writes per-series CSV files plus summary.txt (and VTK
/// for `solve` when enabled) under config.output_dir.
StudyResult run_study(StudyKind kind, const RunConfig& config);

/// Human-readable per-series tables with fitted rates.
std::string report(const StudyResult& result);

} // namespace crackfield

#endif
