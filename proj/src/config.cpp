#include "crackfield/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace crackfield {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw std::runtime_error("config: line " + std::to_string(line) + ": " + msg);
}

double parse_double(const std::string& v, int line) {
  std::size_t pos = 0;
  double x;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    fail(line, "expected a number, got '" + v + "'");
  }
  if (pos != v.size()) fail(line, "trailing characters in number '" + v + "'");
  return x;
}

int parse_int(const std::string& v, int line) {
  std::size_t pos = 0;
  long x;
  try {
    x = std::stol(v, &pos);
  } catch (const std::exception&) {
    fail(line, "expected an integer, got '" + v + "'");
  }
  if (pos != v.size()) fail(line, "trailing characters in integer '" + v + "'");
  return int(x);
}

bool parse_bool(const std::string& v, int line) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  fail(line, "expected a boolean, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string fmt(int x) { return std::to_string(x); }
std::string fmt(bool x) { return x ? "true" : "false"; }

std::string fmt(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + fmt(xs[i]);
  return out;
}

std::string fmt(const std::vector<int>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + fmt(xs[i]);
  return out;
}

// One entry per config key: a setter (value, line number) and a printer.
struct Key {
  std::function<void(const std::string&, int)> set;
  std::function<std::string()> get;
};

std::map<std::string, Key> key_table(RunConfig& c) {
  std::map<std::string, Key> t;
  auto dbl = [&t](const std::string& k, double& ref) {
    t[k] = {[&ref](const std::string& v, int ln) { ref = parse_double(v, ln); },
            [&ref] { return fmt(ref); }};
  };
  auto itg = [&t](const std::string& k, int& ref) {
    t[k] = {[&ref](const std::string& v, int ln) { ref = parse_int(v, ln); },
            [&ref] { return fmt(ref); }};
  };
  auto bol = [&t](const std::string& k, bool& ref) {
    t[k] = {[&ref](const std::string& v, int ln) { ref = parse_bool(v, ln); },
            [&ref] { return fmt(ref); }};
  };
  auto str = [&t](const std::string& k, std::string& ref) {
    t[k] = {[&ref](const std::string& v, int) { ref = v; }, [&ref] { return ref; }};
  };
  auto dbl_list = [&t](const std::string& k, std::vector<double>& ref) {
    t[k] = {[&ref](const std::string& v, int ln) {
              ref.clear();
              for (const std::string& item : split_list(v)) ref.push_back(parse_double(item, ln));
            },
            [&ref] { return fmt(ref); }};
  };
  auto int_list = [&t](const std::string& k, std::vector<int>& ref) {
    t[k] = {[&ref](const std::string& v, int ln) {
              ref.clear();
              for (const std::string& item : split_list(v)) ref.push_back(parse_int(item, ln));
            },
            [&ref] { return fmt(ref); }};
  };

  itg("domain.dimension", c.domain.dimension);
  dbl("domain.half_width", c.domain.half_width);
  itg("domain.initial_cells_per_side", c.domain.initial_cells_per_side);

  dbl("material.E", c.material.E);
  dbl("material.nu", c.material.nu);
  dbl("material.G_c", c.material.G_c);
  dbl("material.pressure", c.material.pressure);
  dbl("material.l0", c.material.l0);
  dbl("material.kappa_factor", c.material.kappa_factor);
  t["model.eps_mode"] = {[&c](const std::string& v, int ln) {
                           if (v == "tied") c.material.eps_mode = EpsMode::tied;
                           else if (v == "fixed") c.material.eps_mode = EpsMode::fixed;
                           else fail(ln, "model.eps_mode must be 'tied' or 'fixed'");
                         },
                         [&c] { return c.material.eps_mode == EpsMode::tied
                                    ? std::string("tied") : std::string("fixed"); }};
  dbl("model.c_eps", c.material.c_eps);
  dbl("model.eps_fixed", c.material.eps_fixed);
  t["model.pressure_coupling"] =
      {[&c](const std::string& v, int ln) {
         if (v == "extrapolated") c.material.pressure_coupling = PressureCoupling::extrapolated;
         else if (v == "current") c.material.pressure_coupling = PressureCoupling::current;
         else fail(ln, "model.pressure_coupling must be 'extrapolated' or 'current'");
       },
       [&c] { return c.material.pressure_coupling == PressureCoupling::extrapolated
                  ? std::string("extrapolated") : std::string("current"); }};

  dbl("solver.newton_tol", c.solver.newton_tol);
  dbl("solver.newton_abs_floor", c.solver.newton_abs_floor);
  itg("solver.newton_max_iter", c.solver.newton_max_iter);
  dbl("solver.active_set_c_scale", c.solver.active_set_c_scale);
  itg("solver.cycle_window", c.solver.cycle_window);
  itg("solver.cycle_toggles", c.solver.cycle_toggles);
  bol("solver.damping", c.solver.damping);
  bol("solver.freeze_preconditioner", c.solver.freeze_preconditioner);
  bol("solver.log", c.solver.log);
  t["solver.preconditioner"] = {[&c](const std::string& v, int ln) {
                                  try {
                                    c.solver.prec_kind = preconditioner_kind_from_string(v);
                                  } catch (const std::exception& e) {
                                    fail(ln, e.what());
                                  }
                                },
                                [&c] {
                                  switch (c.solver.prec_kind) {
                                    case PrecKind::exact: return std::string("exact");
                                    case PrecKind::amg: return std::string("amg");
                                    default: return std::string("diagonal");
                                  }
                                }};
  dbl("gmres.rtol", c.solver.gmres.rtol);
  itg("gmres.max_iter", c.solver.gmres.max_iter);
  itg("gmres.restart", c.solver.gmres.restart);
  dbl("amg.strength_threshold", c.solver.amg.strength_threshold);
  dbl("amg.prolongation_omega", c.solver.amg.prolongation_omega);
  dbl("amg.jacobi_omega", c.solver.amg.jacobi_omega);
  itg("amg.smoothing_sweeps", c.solver.amg.smoothing_sweeps);
  itg("amg.coarse_size", c.solver.amg.coarse_size);
  itg("amg.max_levels", c.solver.amg.max_levels);

  dbl("adapt.phi_threshold", c.policy.phi_threshold);
  dbl("adapt.h_target", c.policy.h_target);
  dbl("adapt.theta", c.policy.theta);
  itg("adapt.max_level", c.policy.max_level);
  bol("adapt.estimator", c.policy.estimator);
  bol("adapt.halve_band_target", c.halve_band_target);
  dbl("adapt.seed_band", c.seed_band);
  itg("adapt.estimator_rounds", c.estimator_rounds);
  itg("adapt.cycles", c.cycles);

  itg("run.n_steps", c.n_steps);
  itg("run.initial_refinements", c.initial_refinements);
  bol("run.write_vtk", c.write_vtk);
  str("run.output_dir", c.output_dir);

  dbl_list("study.eps_list", c.eps_list);
  dbl_list("study.half_widths", c.half_widths);
  int_list("study.resolutions", c.resolutions);
  dbl_list("study.cod_stations", c.cod_stations);
  return t;
}

} // namespace

void RunConfig::validate() const {
  domain.validate();
  material.validate();
  policy.validate();
  if (cycles < 0) throw std::invalid_argument("config: adapt.cycles must be >= 0");
  if (n_steps < 1) throw std::invalid_argument("config: run.n_steps must be >= 1");
  if (initial_refinements < 0)
    throw std::invalid_argument("config: run.initial_refinements must be >= 0");
  if (solver.newton_max_iter < 1)
    throw std::invalid_argument("config: solver.newton_max_iter must be >= 1");
  if (solver.gmres.restart < 1 || solver.gmres.max_iter < 1)
    throw std::invalid_argument("config: gmres.restart and gmres.max_iter must be >= 1");
  for (double e : eps_list)
    if (e <= 0.0) throw std::invalid_argument("config: study.eps_list entries must be > 0");
  for (double k : half_widths)
    if (k <= 0.0) throw std::invalid_argument("config: study.half_widths entries must be > 0");
  for (int r : resolutions)
    if (r < 1) throw std::invalid_argument("config: study.resolutions entries must be >= 1");
}

RunConfig parse_config(const std::string& text) {
  RunConfig config;
  auto table = key_table(config);
  std::stringstream ss(text);
  std::string raw;
  int line = 0;
  while (std::getline(ss, raw)) {
    ++line;
    std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw = raw.substr(0, hash);
    raw = trim(raw);
    if (raw.empty()) continue;
    std::size_t eq = raw.find('=');
    if (eq == std::string::npos) fail(line, "expected 'key = value'");
    std::string key = trim(raw.substr(0, eq));
    std::string value = trim(raw.substr(eq + 1));
    if (key.empty()) fail(line, "empty key");
    auto it = table.find(key);
    if (it == table.end()) fail(line, "unknown key '" + key + "'");
    it->second.set(value, line);
  }
  config.validate();
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const RunConfig& config) {
  auto table = key_table(const_cast<RunConfig&>(config));
  std::string out;
  for (const auto& [key, entry] : table) out += key + " = " + entry.get() + "\n";
  return out;
}

} // namespace crackfield
