#pragma once

#include <optional>
#include <vector>

#include "afem/eigensolver.hpp"

namespace afem {

struct ScfOptions {
  double mixing = 0.3;        // linear density mixing parameter in (0, 1]
  double density_tol = 1e-10; // on m ||w^2 - rho_k||_0 / Z (the linear-mixing step)
  double eig_tol = 1e-8;      // on the eigenvalue change (relative to max(1, |lambda|))
  int max_iter = 500;
  /// Anderson acceleration depth on the density residual; 0 gives plain
  /// linear mixing.
  int anderson_depth = 10;
  int eigen_block = 1;  // LOBPCG block size
  SpdPreconditioner::Options preconditioner;
};

struct ScfStep {
  int iteration = 0;
  double eigenvalue = 0.0;
  double density_change = 0.0;
  double mixing = 0.0;
  int eigen_iterations = 0;
};

/// Discrete ground state on one space.
struct EigenPair {
  double lambda = 0.0;  // eigenvalue of the final linearised operator
  FEFunction u;         // sign-fixed ground eigenvector, ||u||_0^2 = Z
  /// max(0, -min u) / max|u| over dof nodes; nonzero only where the
  /// consistent-mass operator lets the discrete tail oscillate.
  double sign_defect = 0.0;
  double residual_norm = 0.0;  // eigensolver residual (lumped dual norm)
  int scf_iterations = 0;
  QuadField rho;        // density at which the final operator was assembled
  std::optional<HartreeField> hartree;  // nonlocal potential of rho
  EnergyTerms energy;   // at u, with the nonlocal potential of u^2
  double eq34_defect = 0.0;  // |Z lambda - (E + corrections)| / |Z lambda|
  std::vector<ScfStep> history;
};

class ScfError : public Error {
 public:
  ScfError(const std::string& what, std::vector<ScfStep> history) : Error(what), history_(std::move(history)) {}
  const std::vector<ScfStep>& history() const { return history_; }

 private:
  std::vector<ScfStep> history_;
};

void validate(const ScfOptions& options);

/// Self-consistent field iteration for the constrained nonlinear eigenproblem.
/// The initial density comes from `warm_start` (any function on `space`) or,
/// when absent, from the ground state of the linear part of the model.
EigenPair scf_solve(const ProblemModel& model, std::shared_ptr<const FESpace> space, const ScfOptions& options = {},
                    const FEFunction* warm_start = nullptr);

/// Hartree field of u^2 (q = 1) or u^2q with the model's strategy.
HartreeField hartree_of(const ProblemModel& model, const FEFunction& u, const FEFunction* guess = nullptr);

/// Squares of u at the quadrature points.
QuadField density_of(const FEFunction& u);

}  // namespace afem
