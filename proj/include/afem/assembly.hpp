#pragma once

#include <Eigen/SparseCore>
#include <optional>

#include "afem/fespace.hpp"
#include "afem/model.hpp"

namespace afem {

/// Symmetric sparse operator over all dofs of a space (boundary rows
/// included; solvers restrict to the interior block).
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

/// A_ij = int grad phi_i . grad phi_j.
SparseMatrix assemble_stiffness(const FESpace& space);

/// M_ij = int w phi_i phi_j (w = 1 when weight is null).
SparseMatrix assemble_mass(const FESpace& space, const QuadField* weight = nullptr);

/// Element matrices, row-major nloc x nloc.
std::vector<double> local_stiffness(const FESpace& space, ElementId t);
std::vector<double> local_mass(const FESpace& space, ElementId t, const QuadField* weight = nullptr);

/// Interior-interior block of A.
SparseMatrix interior_block(const SparseMatrix& A, const FESpace& space);
Eigen::VectorXd restrict_to_interior(const Eigen::VectorXd& x, const FESpace& space);
/// Interior values scattered into a full vector with zero boundary values.
Eigen::VectorXd extend_from_interior(const Eigen::VectorXd& xi, const FESpace& space);

struct HartreeOptions {
  double tolerance = 1e-10;          // relative residual of the Poisson solve
  const FEFunction* guess = nullptr;  // warm start for the Poisson solve
  /// Poisson path: phi is sought in the Lagrange space of degree
  /// max(degree, space degree) on the same mesh and quadrature.
  int degree = 2;
};

/// Nonlocal potential phi(x) = int rho^q(y) K(x - y) dy sampled at the
/// volume quadrature points.
struct HartreeField {
  QuadField values;
  std::optional<FEFunction> potential;  // finite element solution (poisson only; may be of higher degree)
  double charge = 0.0;                  // int rho^q
  Vec3 centroid{0.0, 0.0, 0.0};
  HartreeStrategy strategy = HartreeStrategy::poisson;
};

/// `rho_q` holds rho^q at the volume quadrature points. The poisson strategy
/// solves -lap phi = 4 pi rho^q with monopole Dirichlet data; the direct
/// strategy sums the kernel over all quadrature pairs.
HartreeField hartree_potential(const FESpace& space, const QuadField& rho_q, HartreeStrategy strategy,
                               const HartreeOptions& options = {},
                               const std::function<double(const Vec3&)>& kernel = nullptr);

/// V at the volume quadrature points.
QuadField sample_potential(const ProblemModel& model, const FESpace& space);

/// Pointwise weight V + N1(rho) + rho^(q-1) phi.
QuadField hamiltonian_weight(const ProblemModel& model, const QuadField& v, const QuadField& rho,
                             const QuadField* phi);

/// H = alpha * stiffness + mass weighted by V + N(rho). `phi` must be given
/// for nonlocal models. `stiffness` and `v` may be supplied to avoid
/// recomputation.
SparseMatrix assemble_hamiltonian(const ProblemModel& model, const FESpace& space, const QuadField& rho,
                                  const QuadField* phi = nullptr, const SparseMatrix* stiffness = nullptr,
                                  const QuadField* v = nullptr);

}  // namespace afem
