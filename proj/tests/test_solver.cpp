#include <doctest.h>

#include <cmath>
#include <numbers>

#include "afem/solver.hpp"

using namespace afem;

namespace {

constexpr double kPi = std::numbers::pi;

std::shared_ptr<const FESpace> space_on(const Box& box, std::array<int, 3> n, int degree, int sweeps = 0) {
  Mesh m = Mesh::box(box, n);
  for (int s = 0; s < sweeps; ++s) {
    std::vector<ElementId> all(m.n_elements());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<ElementId>(i);
    m = m.bisect(all);
  }
  return build_space(std::make_shared<const Mesh>(std::move(m)), degree);
}

// v^T (lambda M u - H[rho] u) for a few test vectors v, relative to ||u||_1 ||v||_1.
double galerkin_defect(const ProblemModel& model, const EigenPair& s) {
  const FESpace& S = *s.u.space;
  const SparseMatrix K = assemble_stiffness(S);
  const SparseMatrix M = assemble_mass(S);
  const SparseMatrix H =
      assemble_hamiltonian(model, S, s.rho, s.hartree ? &s.hartree->values : nullptr, &K, nullptr);
  Eigen::VectorXd r = s.lambda * (M * s.u.coefficients) - H * s.u.coefficients;
  for (DofId d : S.boundary_dofs()) r(d) = 0.0;
  const double nu = std::sqrt(s.u.coefficients.dot((K + M) * s.u.coefficients));
  double worst = 0.0;
  for (int k = 1; k <= 3; ++k) {
    Eigen::VectorXd v(S.n_dofs());
    for (DofId i = 0; i < static_cast<DofId>(S.n_dofs()); ++i) {
      const Vec3 x = S.dof_node(i);
      v(i) = std::sin(k * 0.7 * x[0] + 0.3) * std::cos(0.5 * x[1] - 0.2 * k) * (1.0 + 0.1 * x[2]);
    }
    for (DofId d : S.boundary_dofs()) v(d) = 0.0;
    const double nv = std::sqrt(v.dot((K + M) * v));
    worst = std::max(worst, std::abs(v.dot(r)) / (nu * nv));
  }
  return worst;
}

}  // namespace

TEST_CASE("linear model: one SCF iteration, eigenvalue from above") {
  const Box box{{0, 0, 0}, {1, 1, 1}};
  const ProblemModel model = make_linear_model(1.0, 1.0, nullptr, box);
  double prev = std::numeric_limits<double>::infinity();
  for (int n : {2, 3, 4}) {
    auto S = space_on(box, {n, n, n}, 2);
    const EigenPair s = scf_solve(model, S);
    CHECK(s.scf_iterations == 1);
    CHECK(s.lambda > 3 * kPi * kPi);
    CHECK(s.lambda < prev);
    prev = s.lambda;
    CHECK(l2_norm(s.u) == doctest::Approx(1.0).epsilon(1e-10));
  }
  CHECK(prev == doctest::Approx(3 * kPi * kPi).epsilon(1e-2));
}

TEST_CASE("anisotropic harmonic oscillator ground state") {
  const Box box{{-6, -6, -6}, {6, 6, 6}};
  const ProblemModel model = make_gpe_model(0.0, {1.0, 2.0, 4.0}, box);
  REQUIRE(model.is_linear());
  auto S = space_on(box, {6, 6, 6}, 2, 3);
  const EigenPair s = scf_solve(model, S);
  CHECK(s.lambda == doctest::Approx(3.5).epsilon(5e-2));
  CHECK(s.lambda > 3.5);
}

TEST_CASE("GPE ground state: normalisation, sign, energy identity, Galerkin orthogonality") {
  const Box box{{-8, -6, -4}, {8, 6, 4}};
  const ProblemModel model = make_gpe_model(200.0, {1.0, 2.0, 4.0}, box);
  auto S = space_on(box, {16, 12, 8}, 1);
  ScfOptions o;
  const EigenPair s = scf_solve(model, S, o);
  CHECK(s.scf_iterations > 1);
  CHECK(l2_norm(s.u) * l2_norm(s.u) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(s.u.coefficients.sum() > 0.0);
  // Single sign up to the consistent-mass tail oscillation, which fades under refinement.
  const EigenPair fine = scf_solve(model, space_on(box, {16, 12, 8}, 1, 3), o, nullptr);
  CHECK(s.sign_defect < 0.05);
  CHECK(fine.sign_defect < 0.2 * s.sign_defect);
  CHECK(fine.lambda < s.lambda);
  CHECK(s.eq34_defect < 1e-8);
  CHECK(galerkin_defect(model, s) < 10 * o.eig_tol);
  CHECK(std::isfinite(s.energy.total));
  CHECK(s.lambda > s.energy.total);

  // A warm start from the converged state needs few iterations.
  const EigenPair w = scf_solve(model, S, o, &s.u);
  CHECK(w.scf_iterations < s.scf_iterations);
  CHECK(w.lambda == doctest::Approx(s.lambda).epsilon(1e-7));
}

TEST_CASE("TFW helium on a coarse mesh") {
  const Box box{{-5, -5, -5}, {5, 5, 5}};
  const ProblemModel model = make_tfw_helium_model(box);
  auto S = space_on(box, {4, 4, 4}, 1, 3);
  ScfOptions o;
  const EigenPair s = scf_solve(model, S, o);
  CHECK(l2_norm(s.u) * l2_norm(s.u) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(s.eq34_defect < 1e-6);
  CHECK(s.hartree.has_value());
  CHECK(s.energy.total < 0.0);
  CHECK(galerkin_defect(model, s) < 10 * o.eig_tol);
}

TEST_CASE("plain linear mixing reaches the same fixed point") {
  const Box box{{-5, -5, -5}, {5, 5, 5}};
  const ProblemModel model = make_tfw_helium_model(box);
  auto S = space_on(box, {4, 4, 4}, 1, 1);
  ScfOptions o;
  o.density_tol = 1e-9;
  const EigenPair a = scf_solve(model, S, o);
  o.anderson_depth = 0;
  o.max_iter = 2000;
  const EigenPair b = scf_solve(model, S, o);
  CHECK(b.lambda == doctest::Approx(a.lambda).epsilon(1e-6));
  CHECK(b.scf_iterations >= a.scf_iterations);
}

TEST_CASE("invalid SCF options") {
  const Box box{{0, 0, 0}, {1, 1, 1}};
  const ProblemModel model = make_linear_model(1.0, 1.0, nullptr, box);
  auto S = space_on(box, {2, 2, 2}, 1);
  ScfOptions o;
  o.mixing = 0.0;
  CHECK_THROWS_AS(scf_solve(model, S, o), DomainError);
  o = {};
  o.max_iter = 0;
  CHECK_THROWS_AS(scf_solve(model, S, o), DomainError);
}

TEST_CASE("non-convergence reports the history") {
  const Box box{{-8, -6, -4}, {8, 6, 4}};
  const ProblemModel model = make_gpe_model(200.0, {1.0, 2.0, 4.0}, box);
  auto S = space_on(box, {8, 6, 4}, 1);
  ScfOptions o;
  o.max_iter = 2;
  try {
    scf_solve(model, S, o);
    FAIL("expected ScfError");
  } catch (const ScfError& e) {
    CHECK(e.history().size() == 2);
  }
}
