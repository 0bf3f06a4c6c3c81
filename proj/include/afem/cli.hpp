#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "afem/config.hpp"
#include "afem/model.hpp"

namespace afem {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitSolverFailure = 2, kExitIoFailure = 3 };

struct RunResult {
  int exit_code = kExitOk;
  ConvergenceHistory history;
  std::string history_path;
  std::vector<std::string> vtk_files;
};

/// Runs the adaptive loop described by `config`, writing history.csv (after
/// every iteration), config.json and the requested VTK snapshots into
/// config.output.dir. Progress goes to `log` when given. I/O failures throw
/// Error naming the path; solver failures are reported via exit_code.
RunResult run(const AdaptConfig& config, std::ostream* log = nullptr);

/// Desk-scale oracle suite: Laplacian and harmonic oscillator eigenvalues,
/// local element matrices, LDA values and Doerfler enumeration.
struct ValidationReport {
  std::vector<AuditCheck> checks;
  bool all_passed() const;
};

ValidationReport validate_oracles(std::ostream* log = nullptr);

}  // namespace afem
