#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "afem/fespace.hpp"

namespace afem {

/// Local part N1 of the nonlinearity, acting on the density t = u^2 >= 0.
struct LocalNonlinearity {
  std::function<double(double)> value;            // N1(t)
  std::function<double(double)> derivative;       // N1'(t)
  std::function<double(double)> scaled_derivative;  // t * N1'(t), finite at t = 0
  std::function<double(double)> antiderivative;   // E(s) = int_0^s N1(t) dt
  bool vanishes = false;                          // N1 == 0

  // Growth metadata: E in Pol(p), N1 in Pol(p1), N1' in Pol(p2).
  double p = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
};

enum class KernelKind { none, coulomb, custom };
enum class HartreeStrategy { poisson, direct };

std::string to_string(HartreeStrategy s);
HartreeStrategy parse_hartree_strategy(const std::string& s);

/// Nonlocal part N2(rho) = rho^(q-1) int rho^q(y) K(x - y) dy.
struct NonlocalSpec {
  KernelKind kernel = KernelKind::none;
  double q = 1.0;
  HartreeStrategy strategy = HartreeStrategy::poisson;
  std::function<double(const Vec3&)> custom_kernel;  // used when kernel == custom

  bool active() const { return kernel != KernelKind::none; }
  double kernel_value(const Vec3& d) const;
};

struct ProblemModel {
  std::string name;
  double alpha = 0.5;
  double Z = 1.0;
  ScalarField potential;  // V
  LocalNonlinearity local;
  NonlocalSpec nonlocal;
  Box domain;
  std::optional<Vec3> nucleus;  // point singularity of V, if any

  bool is_linear() const { return local.vanishes && !nonlocal.active(); }
  /// Multiplicative weight N(rho) = N1(rho) + rho^(q-1) phi at one point.
  double nonlinear_weight(double rho, double phi) const;
};

/// Gross-Pitaevskii: alpha = 1/2, Z = 1, V = 1/2 sum gamma_i^2 x_i^2, N1 = beta rho.
ProblemModel make_gpe_model(double beta, const Vec3& gamma, const Box& box);

/// Orbital-free TFW model of helium with the nucleus at the origin.
ProblemModel make_tfw_helium_model(const Box& box);

/// Linear model with N = 0.
ProblemModel make_linear_model(double alpha, double Z, ScalarField potential, const Box& box,
                               std::string name = "linear");

/// Thomas-Fermi constant (3/10)(3 pi^2)^(2/3).
double thomas_fermi_constant();

/// LDA exchange-correlation potential; 0 at rho = 0.
double eval_vx(double rho);
double eval_vc(double rho);
double eval_vxc(double rho);
/// rho * d(vxc)/d(rho).
double eval_vxc_scaled_derivative(double rho);
/// int_0^s vxc(t) dt.
double vxc_antiderivative(double s);
/// Wigner-Seitz radius, clamped to 1e12.
double wigner_seitz_radius(double rho);

/// Per-term integrals of the energy functional at u.
struct EnergyTerms {
  double kinetic = 0.0;    // alpha int |grad u|^2
  double potential = 0.0;  // int V u^2
  double local = 0.0;      // int E(u^2)
  double local_response = 0.0;  // int N1(u^2) u^2
  double hartree = 0.0;    // D_K(u^2q, u^2q) = int u^2q phi
  double mass = 0.0;       // int u^2
  double total = 0.0;      // kinetic + potential + local + hartree / (2q)
};

/// Energy terms of u. `phi` holds the nonlocal potential at the volume
/// quadrature points; required iff the model has a nonlocal term. `v_samples`
/// optionally supplies V at the quadrature points.
EnergyTerms energy_terms(const ProblemModel& model, const FEFunction& u, const QuadField* phi = nullptr,
                         const QuadField* v_samples = nullptr);

double energy(const ProblemModel& model, const FEFunction& u, const QuadField* phi = nullptr);

/// lambda from the eigenvalue-energy relation. Throws DomainError when
/// ||u||^2 differs from Z by more than 1e-8 relative.
double lambda_from_energy(const ProblemModel& model, const EnergyTerms& terms);
double lambda_from_energy(const ProblemModel& model, const FEFunction& u, double E, const QuadField* phi = nullptr);

struct AuditCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct AssumptionReport {
  std::vector<AuditCheck> checks;
  bool all_passed() const;
};

AssumptionReport audit_assumptions(const ProblemModel& model);

}  // namespace afem
