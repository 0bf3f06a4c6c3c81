#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>

#include "afem/assembly.hpp"

namespace afem {

/// Approximate inverse applied column-wise to a block of vectors.
class Preconditioner {
 public:
  virtual ~Preconditioner() = default;
  virtual Eigen::MatrixXd apply(const Eigen::MatrixXd& r) const = 0;
};

class IdentityPreconditioner final : public Preconditioner {
 public:
  Eigen::MatrixXd apply(const Eigen::MatrixXd& r) const override { return r; }
};

/// Preconditioner from an SPD matrix B: an exact sparse Cholesky solve for
/// small systems, otherwise a few incomplete-Cholesky preconditioned CG steps.
class SpdPreconditioner final : public Preconditioner {
 public:
  struct Options {
    int exact_limit = 20000;  // dimension up to which B is factored exactly
    double inner_tolerance = 0.05;
    int inner_iterations = 25;
  };

  explicit SpdPreconditioner(const SparseMatrix& B) : SpdPreconditioner(B, Options{}) {}
  SpdPreconditioner(const SparseMatrix& B, const Options& options);
  ~SpdPreconditioner() override;
  Eigen::MatrixXd apply(const Eigen::MatrixXd& r) const override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct EigenOptions {
  double tol = 1e-8;     // residual <= tol * |theta| (see EigenResult::residual)
  int max_iter = 1000;
  int block = 2;         // LOBPCG block size
  int dense_limit = 300; // dense solve up to this dimension
  /// Euclidean constraints: the eigenvector is sought with C^T x = 0.
  const Eigen::MatrixXd* constraints = nullptr;
};

struct EigenResult {
  double value = 0.0;
  Eigen::VectorXd vector;  // M-normalised
  /// Residual A x - theta M x in the lumped-mass dual norm
  /// sqrt(sum_i r_i^2 / M_ii), constraint directions removed.
  double residual = 0.0;
  int iterations = 0;
};

class EigenSolverError : public Error {
 public:
  EigenSolverError(const std::string& what, EigenResult best) : Error(what), best_(std::move(best)) {}
  const EigenResult& best() const { return best_; }

 private:
  EigenResult best_;
};

/// Smallest eigenpair of the pencil (A, M), A symmetric, M SPD. Throws
/// EigenSolverError carrying the best iterate if not converged.
EigenResult smallest_eigenpair(const SparseMatrix& A, const SparseMatrix& M, const EigenOptions& options = {},
                               const Eigen::VectorXd* guess = nullptr, const Preconditioner* preconditioner = nullptr);

/// Operator form: A given by its action on a block of vectors.
using BlockOperator = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>;
EigenResult smallest_eigenpair(const BlockOperator& A, const SparseMatrix& M, const EigenOptions& options = {},
                               const Eigen::VectorXd* guess = nullptr, const Preconditioner* preconditioner = nullptr);

/// Dense reference solver (all eigenpairs of the constrained pencil), for
/// small problems and tests. Eigenvectors are M-normalised.
void dense_eigenpairs(const Eigen::MatrixXd& A, const Eigen::MatrixXd& M, Eigen::VectorXd& values,
                      Eigen::MatrixXd& vectors, const Eigen::MatrixXd* constraints = nullptr);

}  // namespace afem
