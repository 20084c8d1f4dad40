#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "crackfield/study.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNonConverged = 2;
constexpr int kExitConfigError = 3;
constexpr int kExitIoError = 4;

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive phase-field solver for the pressurized penny-crack benchmark"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int threads = 1;
  bool dump_matrices = false;

  const char* names[] = {"solve", "eps-conv", "domain-study", "cod-study", "sneddon3d"};
  for (const char* name : names) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "key = value configuration file");
    sub->add_option("--out", out_dir, "output directory (overrides run.output_dir)");
    sub->add_option("--threads", threads, "worker threads; 1 is fully deterministic")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--dump-matrices", dump_matrices, "write Jacobian blocks as MatrixMarket");
  }

  CLI11_PARSE(app, argc, argv);
  Eigen::setNbThreads(threads);

  crackfield::StudyKind kind;
  crackfield::RunConfig config;
  try {
    kind = crackfield::study_kind_from_string(app.get_subcommands().front()->get_name());
    if (!config_path.empty()) config = crackfield::load_config(config_path);
    if (!out_dir.empty()) config.output_dir = out_dir;
    config.dump_matrices = dump_matrices;
    config.validate();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfigError;
  }

  try {
    crackfield::StudyResult result = crackfield::run_study(kind, config);
    std::fputs(result.summary.c_str(), stdout);
  } catch (const std::ios_base::failure& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kExitIoError;
  } catch (const std::exception& e) {
    const std::string what = e.what();
    std::fprintf(stderr, "error: %s\n", what.c_str());
    if (what.find("cannot write") != std::string::npos ||
        what.find("cannot open") != std::string::npos)
      return kExitIoError;
    return kExitNonConverged;
  }
  return kExitOk;
}
