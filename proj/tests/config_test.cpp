#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "crackfield/config.hpp"

using namespace crackfield;

TEST_CASE("parse_config: defaults survive an empty file") {
  RunConfig c = parse_config("");
  CHECK(c.domain.dimension == 2);
  CHECK(c.domain.half_width == 20.0);
  CHECK(c.domain.initial_cells_per_side == 10);
  CHECK(c.material.eps_mode == EpsMode::tied);
  CHECK(c.cycles == 4);
  CHECK(c.n_steps == 4);
  CHECK(c.initial_refinements == 2);
  CHECK(c.eps_list == std::vector<double>{0.5, 0.25, 0.125, 0.0625});
  CHECK(c.half_widths == std::vector<double>{5.0, 10.0, 20.0});
  CHECK(c.resolutions == std::vector<int>{16, 32, 64, 128});
}

TEST_CASE("parse_config: keys, comments, lists, and enums") {
  const std::string text =
      "# benchmark overrides\n"
      "domain.half_width = 10   # trailing comment\n"
      "domain.dimension = 3\n"
      "material.nu = 0.3\n"
      "model.eps_mode = fixed\n"
      "model.eps_fixed = 0.125\n"
      "model.pressure_coupling = current\n"
      "solver.preconditioner = exact\n"
      "adapt.theta = 0.4\n"
      "adapt.seed_band = 0.125\n"
      "adapt.estimator_rounds = 2\n"
      "adapt.halve_band_target = off\n"
      "run.n_steps = 1\n"
      "run.output_dir = results/run1\n"
      "study.eps_list = 0.5, 0.25\n"
      "study.resolutions = 8,16,32\n";
  RunConfig c = parse_config(text);
  CHECK(c.domain.half_width == 10.0);
  CHECK(c.domain.dimension == 3);
  CHECK(c.material.nu == 0.3);
  CHECK(c.material.eps_mode == EpsMode::fixed);
  CHECK(c.material.eps_fixed == 0.125);
  CHECK(c.material.pressure_coupling == PressureCoupling::current);
  CHECK(c.solver.prec_kind == PrecKind::exact);
  CHECK(c.policy.theta == 0.4);
  CHECK(c.seed_band == 0.125);
  CHECK(c.estimator_rounds == 2);
  CHECK(c.halve_band_target == false);
  CHECK(c.n_steps == 1);
  CHECK(c.output_dir == "results/run1");
  CHECK(c.eps_list == std::vector<double>{0.5, 0.25});
  CHECK(c.resolutions == std::vector<int>{8, 16, 32});
}

TEST_CASE("parse_config: errors carry the offending line number") {
  auto message = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const std::runtime_error& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(message("\n\nbogus.key = 1\n").find("line 3") != std::string::npos);
  CHECK(message("bogus.key = 1").find("unknown key 'bogus.key'") != std::string::npos);
  CHECK(message("domain.half_width\n").find("expected 'key = value'") != std::string::npos);
  CHECK(message("material.nu = fast").find("expected a number") != std::string::npos);
  CHECK(message("adapt.cycles = 2.5").find("trailing characters") != std::string::npos);
  CHECK(message("solver.damping = maybe").find("expected a boolean") != std::string::npos);
  CHECK(message("model.eps_mode = loose").find("'tied' or 'fixed'") != std::string::npos);
  CHECK(message("solver.preconditioner = lu\n").find("line 1") != std::string::npos);
  CHECK(message(" = 3").find("empty key") != std::string::npos);
}

TEST_CASE("parse_config: validation rejects out-of-range values") {
  CHECK_THROWS_AS(parse_config("material.nu = 0.5"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("material.nu = -0.1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("material.E = 0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("domain.dimension = 4"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("domain.initial_cells_per_side = 0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("domain.initial_cells_per_side = 17"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("adapt.cycles = -1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("run.n_steps = 0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("run.initial_refinements = -1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("adapt.theta = 1.5"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("adapt.phi_threshold = 1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("solver.newton_max_iter = 0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("gmres.restart = 0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("study.eps_list = 0.5, 0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("study.half_widths = -5"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("study.resolutions = 0"), std::invalid_argument);
}

TEST_CASE("dump_config and parse_config round-trip a non-default config") {
  RunConfig c;
  c.domain.dimension = 3;
  c.domain.half_width = 10.0;
  c.domain.initial_cells_per_side = 4;
  c.material.nu = 0.35;
  c.material.pressure = 2.5e-3;
  c.material.eps_mode = EpsMode::fixed;
  c.material.eps_fixed = 0.1;
  c.material.c_eps = 1.5;
  c.solver.newton_tol = 1e-9;
  c.solver.prec_kind = PrecKind::exact;
  c.solver.gmres.rtol = 1e-7;
  c.solver.amg.jacobi_omega = 0.8;
  c.policy.theta = 0.45;
  c.policy.h_target = 0.03125;
  c.cycles = 6;
  c.n_steps = 3;
  c.halve_band_target = false;
  c.seed_band = 0.0625;
  c.estimator_rounds = 2;
  c.initial_refinements = 1;
  c.write_vtk = true;
  c.output_dir = "out/run-a";
  c.eps_list = {0.3, 0.15};
  c.half_widths = {7.0};
  c.resolutions = {12, 24};
  c.cod_stations = {-1.0, 0.0, 1.0};

  RunConfig back = parse_config(dump_config(c));
  CHECK(dump_config(back) == dump_config(c));
  CHECK(back.domain.dimension == 3);
  CHECK(back.material.eps_fixed == 0.1);
  CHECK(back.solver.prec_kind == PrecKind::exact);
  CHECK(back.cod_stations == c.cod_stations);
  CHECK(back.write_vtk == true);
  CHECK(back.output_dir == "out/run-a");
}

TEST_CASE("load_config reads a file and reports missing paths") {
  const std::string path = "config_test_tmp.cfg";
  {
    std::ofstream out(path);
    out << "domain.half_width = 5\nadapt.cycles = 1\n";
  }
  RunConfig c = load_config(path);
  CHECK(c.domain.half_width == 5.0);
  CHECK(c.cycles == 1);
  std::remove(path.c_str());
  CHECK_THROWS_WITH_AS(load_config("no_such_file.cfg"),
                       "config: cannot open 'no_such_file.cfg'", std::runtime_error);
}
