#pragma once

#include <string>
#include <vector>

#include "afem/solver.hpp"

namespace afem {

/// Residual indicators on one mesh. Every interior face contributes its jump
/// term to both adjacent elements.
struct IndicatorField {
  std::vector<double> eta_sq;        // element term + face terms
  std::vector<double> osc_sq;
  std::vector<double> element_sq;    // h_T^2 ||R_T||^2
  std::vector<double> face_sq;       // sum over interior faces of T of h_e ||J_e||^2
  std::vector<double> jump_sq;       // per face h_e ||J_e||^2; 0 on boundary faces
  double global_eta = 0.0;
  double global_osc = 0.0;
  double max_eta = 0.0;
  ElementId argmax = 0;

  std::size_t size() const { return eta_sq.size(); }
  std::vector<double> eta() const;
};

/// Pointwise element residual lambda u + alpha Lap u - V u - N(u^2) u at the
/// volume quadrature points of t. `hartree` supplies the nonlocal potential
/// on u's mesh (required for nonlocal models).
std::vector<double> element_residual(const ProblemModel& model, const FEFunction& u, double lambda,
                                     const HartreeField* hartree, ElementId t);

/// alpha (grad u|T1 - grad u|T2) . n1 at the face quadrature points of the
/// interior face f, with T1 = faces()[f].elements[first]. Throws DomainError
/// on boundary faces.
std::vector<double> jump_residual(const FEFunction& u, FaceId f, double alpha, int first = 0);

IndicatorField indicators(const ProblemModel& model, const FEFunction& u, double lambda,
                          const HartreeField* hartree);
inline IndicatorField indicators(const ProblemModel& model, const EigenPair& s) {
  return indicators(model, s.u, s.lambda, s.hartree ? &*s.hartree : nullptr);
}

/// <R_h(u), v> = lambda (u, v) - alpha (grad u, grad v) - (V u, v) - (N(u^2) u, v),
/// integrated on v's mesh, which must equal u's mesh or be one bisection
/// step finer. On a finer mesh nonlocal models need the finite element
/// Hartree potential.
double global_residual_apply(const ProblemModel& model, const FEFunction& u, double lambda,
                             const HartreeField* hartree, const FEFunction& v);

struct SecondVariationResult {
  double gamma = 0.0;      // min of <(E'' - lambda) v, v> / ||grad v||^2 over v _|_ u
  Eigen::VectorXd vector;  // minimiser (full coefficients)
  bool nonlocal_included = true;
  std::string warning;
};

/// Discrete coercivity constant of the second variation on the L2 complement
/// of u. The Coulomb term uses a homogeneous Dirichlet Poisson solve (the
/// charge u v of any v _|_ u has no monopole).
SecondVariationResult second_variation_gap(const ProblemModel& model, const FEFunction& u, double lambda,
                                           const HartreeField* hartree, int dense_limit = 300);

}  // namespace afem
