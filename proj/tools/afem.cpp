#include <CLI11.hpp>
#include <iostream>

#include "afem/cli.hpp"
#include "afem/parallel.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Adaptive finite elements for constrained nonlinear eigenvalue problems"};
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads, "Worker threads for assembly and solvers (0: hardware default)")
      ->check(CLI::NonNegativeNumber);

  auto* solve = app.add_subcommand("solve", "Run the adaptive loop described by a JSON config");
  std::string config_path;
  std::string output_dir;
  int vtk_every = -1;
  solve->add_option("config", config_path, "Config file")->required();
  solve->add_option("--output-dir", output_dir, "Override output.dir");
  solve->add_option("--vtk-every", vtk_every, "Override output.vtk_every (0 disables snapshots)")
      ->check(CLI::NonNegativeNumber);
  solve->add_option("--threads", threads, "Worker threads for assembly and solvers (0: hardware default)")
      ->check(CLI::NonNegativeNumber);

  auto* validate = app.add_subcommand("validate", "Run the analytic oracle suite");
  validate->add_option("--threads", threads, "Worker threads for assembly and solvers (0: hardware default)")
      ->check(CLI::NonNegativeNumber);

  CLI11_PARSE(app, argc, argv);
  if (threads > 0) afem::set_num_threads(threads);

  try {
    if (*validate) {
      const auto report = afem::validate_oracles(&std::cout);
      std::cout << (report.all_passed() ? "all oracle checks passed" : "some oracle checks FAILED") << std::endl;
      return report.all_passed() ? afem::kExitOk : afem::kExitSolverFailure;
    }
    afem::AdaptConfig config = afem::load_config(config_path);
    if (!output_dir.empty()) config.output.dir = output_dir;
    if (vtk_every >= 0) config.output.vtk_every = vtk_every;
    const auto result = afem::run(config, &std::cout);
    std::cout << "history: " << result.history_path << std::endl;
    return result.exit_code;
  } catch (const afem::DomainError& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return afem::kExitUsage;
  } catch (const afem::Error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return afem::kExitIoFailure;
  }
}
