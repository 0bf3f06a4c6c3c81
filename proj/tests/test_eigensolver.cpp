#include <doctest.h>

#include <random>

#include "afem/eigensolver.hpp"

using namespace afem;

namespace {

SparseMatrix sparse_from(const Eigen::MatrixXd& D) { return D.sparseView(); }

Eigen::MatrixXd random_spd(int n, std::mt19937& rng, double shift) {
  std::normal_distribution<double> N(0, 1);
  Eigen::MatrixXd B(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) B(i, j) = N(rng);
  return B * B.transpose() / n + shift * Eigen::MatrixXd::Identity(n, n);
}

std::shared_ptr<const FESpace> laplace_space(int n, int degree) {
  auto mesh = std::make_shared<const Mesh>(Mesh::box(Box{{0, 0, 0}, {1, 1, 1}}, {n, n, n}));
  return build_space(mesh, degree);
}

}  // namespace

TEST_CASE("diagonal pencils") {
  Eigen::MatrixXd A = Eigen::Vector3d(1, 2, 3).asDiagonal();
  auto r = smallest_eigenpair(sparse_from(A), sparse_from(Eigen::MatrixXd::Identity(3, 3)));
  CHECK(r.value == doctest::Approx(1.0));
  CHECK(std::abs(std::abs(r.vector(0)) - 1.0) < 1e-12);
  CHECK(std::abs(r.vector(1)) < 1e-12);

  Eigen::MatrixXd A2 = Eigen::Vector2d(2, 6).asDiagonal();
  Eigen::MatrixXd M2 = Eigen::Vector2d(2, 2).asDiagonal();
  auto r2 = smallest_eigenpair(sparse_from(A2), sparse_from(M2));
  CHECK(r2.value == doctest::Approx(1.0));
  CHECK(r2.vector.dot(M2 * r2.vector) == doctest::Approx(1.0));
}

TEST_CASE("random SPD pencil matches the dense oracle") {
  std::mt19937 rng(42);
  const int n = 50;
  const Eigen::MatrixXd A = random_spd(n, rng, 0.1);
  const Eigen::MatrixXd M = random_spd(n, rng, 1.0);
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  dense_eigenpairs(A, M, values, vectors);
  EigenOptions opt;
  opt.dense_limit = 0;  // force the iterative path
  opt.tol = 1e-12;
  auto r = smallest_eigenpair(sparse_from(A), sparse_from(M), opt);
  CHECK(std::abs(r.value - values(0)) < 1e-8 * std::abs(values(0)));
  const double align = std::abs(r.vector.dot(M * vectors.col(0)));
  CHECK(align == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("Dirichlet Laplacian: LOBPCG with preconditioner agrees with dense") {
  auto space = laplace_space(4, 2);
  const auto K = interior_block(assemble_stiffness(*space), *space);
  const auto M = interior_block(assemble_mass(*space), *space);
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  dense_eigenpairs(Eigen::MatrixXd(K), Eigen::MatrixXd(M), values, vectors);
  SpdPreconditioner prec(K);
  EigenOptions opt;
  opt.dense_limit = 0;
  opt.tol = 1e-10;
  auto r = smallest_eigenpair(K, M, opt, nullptr, &prec);
  CHECK(r.value == doctest::Approx(values(0)).epsilon(1e-12));
  CHECK(r.residual <= 1e-10 * r.value);
  CHECK(r.iterations < 60);

  // inexact (incomplete Cholesky + CG) preconditioner
  SpdPreconditioner::Options po;
  po.exact_limit = 0;
  SpdPreconditioner approx(K, po);
  auto r2 = smallest_eigenpair(K, M, opt, nullptr, &approx);
  CHECK(r2.value == doctest::Approx(values(0)).epsilon(1e-12));
}

TEST_CASE("constrained eigenproblem matches the dense constrained oracle") {
  auto space = laplace_space(4, 1);
  const auto K = interior_block(assemble_stiffness(*space), *space);
  const auto M = interior_block(assemble_mass(*space), *space);
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  dense_eigenpairs(Eigen::MatrixXd(K), Eigen::MatrixXd(M), values, vectors);
  // Constrain against the M-image of the ground state: yields the second eigenvalue.
  Eigen::MatrixXd C = M * vectors.col(0);
  EigenOptions opt;
  opt.constraints = &C;
  opt.dense_limit = 0;
  opt.tol = 1e-10;
  SpdPreconditioner prec(K);
  auto r = smallest_eigenpair(K, M, opt, nullptr, &prec);
  CHECK(r.value == doctest::Approx(values(1)).epsilon(1e-9));
  CHECK(std::abs(C.col(0).dot(r.vector)) < 1e-10);

  Eigen::VectorXd cv;
  Eigen::MatrixXd cvec;
  dense_eigenpairs(Eigen::MatrixXd(K), Eigen::MatrixXd(M), cv, cvec, &C);
  CHECK(cv(0) == doctest::Approx(values(1)).epsilon(1e-10));
}

TEST_CASE("non-convergence reports the best iterate") {
  auto space = laplace_space(4, 2);
  const auto K = interior_block(assemble_stiffness(*space), *space);
  const auto M = interior_block(assemble_mass(*space), *space);
  EigenOptions opt;
  opt.dense_limit = 0;
  opt.max_iter = 2;
  opt.tol = 1e-14;
  try {
    smallest_eigenpair(K, M, opt);
    FAIL("expected EigenSolverError");
  } catch (const EigenSolverError& e) {
    CHECK(e.best().vector.size() == K.rows());
    CHECK(e.best().residual > 0.0);
  }
}
