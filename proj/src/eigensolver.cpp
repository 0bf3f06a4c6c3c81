#include "afem/eigensolver.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace afem {

struct SpdPreconditioner::Impl {
  Options options;
  bool exact = false;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>> cg;
};

SpdPreconditioner::SpdPreconditioner(const SparseMatrix& B, const Options& options) : impl_(std::make_unique<Impl>()) {
  impl_->options = options;
  impl_->exact = B.rows() <= options.exact_limit;
  if (impl_->exact) {
    impl_->ldlt.compute(B);
    if (impl_->ldlt.info() != Eigen::Success) throw Error("preconditioner factorisation failed");
  } else {
    impl_->cg.setTolerance(options.inner_tolerance);
    impl_->cg.setMaxIterations(options.inner_iterations);
    impl_->cg.compute(B);
    if (impl_->cg.info() != Eigen::Success) throw Error("incomplete Cholesky factorisation failed");
  }
}

SpdPreconditioner::~SpdPreconditioner() = default;

Eigen::MatrixXd SpdPreconditioner::apply(const Eigen::MatrixXd& r) const {
  Eigen::MatrixXd out(r.rows(), r.cols());
  for (Eigen::Index j = 0; j < r.cols(); ++j) {
    if (impl_->exact)
      out.col(j) = impl_->ldlt.solve(r.col(j));
    else
      out.col(j) = impl_->cg.solve(r.col(j));
  }
  return out;
}

namespace {

// Euclidean projector onto {x : C^T x = 0}.
struct Projector {
  const Eigen::MatrixXd* C = nullptr;
  Eigen::LLT<Eigen::MatrixXd> gram;

  explicit Projector(const Eigen::MatrixXd* c) : C(c) {
    if (C) gram.compute(C->transpose() * *C);
  }
  void apply(Eigen::MatrixXd& X) const {
    if (C) X -= *C * gram.solve(C->transpose() * X);
  }
};

// M-orthonormalises the columns of S (SVQB with column dropping). Returns the
// transform T with S_new = S T; S, AS, MS are updated in place.
bool svqb_pass(Eigen::MatrixXd& S, Eigen::MatrixXd& MS) {
  const Eigen::Index k = S.cols();
  Eigen::MatrixXd G = S.transpose() * MS;
  G = 0.5 * (G + G.transpose()).eval();
  Eigen::VectorXd d(k);
  for (Eigen::Index i = 0; i < k; ++i) d(i) = G(i, i) > 0.0 ? 1.0 / std::sqrt(G(i, i)) : 0.0;
  G = d.asDiagonal() * G * d.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  const double top = es.eigenvalues().maxCoeff();
  if (!(top > 0.0)) return false;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < k; ++i)
    if (es.eigenvalues()(i) > 1e-10 * top) keep.push_back(i);
  Eigen::MatrixXd T(k, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j)
    T.col(static_cast<Eigen::Index>(j)) =
        d.asDiagonal() * es.eigenvectors().col(keep[j]) / std::sqrt(es.eigenvalues()(keep[j]));
  S = S * T;
  MS = MS * T;
  return true;
}

// Two passes: the second removes the orthogonality loss of the first.
bool svqb(Eigen::MatrixXd& S, Eigen::MatrixXd& MS) {
  return svqb_pass(S, MS) && (S.cols() == 0 || svqb_pass(S, MS));
}

Eigen::MatrixXd null_space_basis(const Eigen::MatrixXd& C, Eigen::Index n) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(C);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  return Q.rightCols(n - C.cols());
}

double dual_norm(const Eigen::VectorXd& r, const Eigen::VectorXd& lumped) {
  return std::sqrt((r.array().square() / lumped.array()).sum());
}

}  // namespace

void dense_eigenpairs(const Eigen::MatrixXd& A, const Eigen::MatrixXd& M, Eigen::VectorXd& values,
                      Eigen::MatrixXd& vectors, const Eigen::MatrixXd* constraints) {
  const Eigen::Index n = A.rows();
  Eigen::MatrixXd As = 0.5 * (A + A.transpose());
  Eigen::MatrixXd Ms = 0.5 * (M + M.transpose());
  if (constraints && constraints->cols() > 0) {
    const Eigen::MatrixXd Q = null_space_basis(*constraints, n);
    Eigen::MatrixXd Aq = Q.transpose() * As * Q;
    Eigen::MatrixXd Mq = Q.transpose() * Ms * Q;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Aq + Aq.transpose()), 0.5 * (Mq + Mq.transpose()));
    values = es.eigenvalues();
    vectors = Q * es.eigenvectors();
  } else {
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(As, Ms);
    values = es.eigenvalues();
    vectors = es.eigenvectors();
  }
}

EigenResult smallest_eigenpair(const SparseMatrix& A, const SparseMatrix& M, const EigenOptions& options,
                               const Eigen::VectorXd* guess, const Preconditioner* preconditioner) {
  return smallest_eigenpair([&A](const Eigen::MatrixXd& X) -> Eigen::MatrixXd { return A * X; }, M, options, guess,
                            preconditioner);
}

EigenResult smallest_eigenpair(const BlockOperator& A, const SparseMatrix& M, const EigenOptions& options,
                               const Eigen::VectorXd* guess, const Preconditioner* preconditioner) {
  const Eigen::Index n = M.rows();
  if (n == 0) throw DomainError("empty eigenvalue problem");
  const Eigen::Index nc = options.constraints ? options.constraints->cols() : 0;
  if (n - nc <= 0) throw DomainError("no unconstrained directions");
  const Eigen::VectorXd lumped = M.diagonal();
  Projector proj(options.constraints);

  auto finish = [&](double theta, Eigen::VectorXd x, int it) {
    (void)theta;
    EigenResult res;
    const double mn = std::sqrt(x.dot(M * x));
    x /= mn;
    const Eigen::MatrixXd ax = A(x);
    res.value = x.dot(ax.col(0));
    Eigen::MatrixXd r = ax - res.value * (M * x);
    proj.apply(r);
    res.residual = dual_norm(r.col(0), lumped);
    res.vector = std::move(x);
    res.iterations = it;
    return res;
  };

  if (n <= options.dense_limit) {
    const Eigen::MatrixXd Ad = A(Eigen::MatrixXd::Identity(n, n));
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
    dense_eigenpairs(Ad, Eigen::MatrixXd(M), values, vectors, options.constraints);
    return finish(values(0), vectors.col(0), 0);
  }

  const Eigen::Index nb = std::max<Eigen::Index>(1, std::min<Eigen::Index>(options.block, (n - nc) / 3));
  Eigen::MatrixXd X(n, nb);
  {
    // Deterministic start: guess (or a smooth positive vector) plus fixed
    // pseudo-random perturbations for the extra block columns.
    std::uint64_t state = 0x9e3779b97f4a7c15ULL;
    auto next = [&state] {
      state ^= state << 13;
      state ^= state >> 7;
      state ^= state << 17;
      return static_cast<double>(state >> 11) * 0x1.0p-53 - 0.5;
    };
    for (Eigen::Index j = 0; j < nb; ++j)
      for (Eigen::Index i = 0; i < n; ++i) X(i, j) = next();
    if (guess && guess->size() == n && guess->norm() > 0.0)
      X.col(0) = *guess;
    else
      X.col(0).setOnes();
  }
  proj.apply(X);
  Eigen::MatrixXd MX = M * X;
  if (!svqb(X, MX) || X.cols() == 0) throw DomainError("degenerate initial block");
  Eigen::MatrixXd AX = A(X);

  auto rayleigh_ritz = [&](Eigen::MatrixXd& S, Eigen::MatrixXd& AS, Eigen::MatrixXd& MS, Eigen::Index k,
                           Eigen::VectorXd& theta, Eigen::MatrixXd& C) {
    Eigen::MatrixXd H = S.transpose() * AS;
    H = 0.5 * (H + H.transpose()).eval();
    Eigen::MatrixXd G = S.transpose() * MS;
    G = 0.5 * (G + G.transpose()).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(H, G);
    k = std::min(k, S.cols());
    theta = es.eigenvalues().head(k);
    C = es.eigenvectors().leftCols(k);
  };

  Eigen::VectorXd theta;
  Eigen::MatrixXd C;
  rayleigh_ritz(X, AX, MX, nb, theta, C);
  X = X * C;
  AX = AX * C;
  MX = MX * C;

  Eigen::MatrixXd P(n, 0), MP(n, 0);
  EigenResult best;
  best.residual = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= options.max_iter; ++it) {
    Eigen::MatrixXd R = AX - MX * theta.asDiagonal();
    proj.apply(R);
    const double res0 = dual_norm(R.col(0), lumped);
    if (res0 < best.residual) {
      best.value = theta(0);
      best.vector = X.col(0);
      best.residual = res0;
      best.iterations = it;
    }
    if (res0 <= options.tol * std::max(std::abs(theta(0)), 1e-300)) return finish(theta(0), X.col(0), it);

    Eigen::MatrixXd W = preconditioner ? preconditioner->apply(R) : R;
    proj.apply(W);
    // Basis [X W P], orthonormalised against M.
    const Eigen::Index kp = P.cols();
    Eigen::MatrixXd S(n, X.cols() + W.cols() + kp);
    S << X, W, P;
    Eigen::MatrixXd MS(n, S.cols());
    Eigen::MatrixXd MW = M * W;
    MS << MX, MW, MP;
    if (!svqb(S, MS)) break;
    Eigen::MatrixXd AS = A(S);
    Eigen::VectorXd th;
    Eigen::MatrixXd Cs;
    rayleigh_ritz(S, AS, MS, nb, th, Cs);
    Eigen::MatrixXd Xn = S * Cs;
    // Search direction: the part of the update outside span(X).
    Eigen::MatrixXd Xproj = X * (X.transpose() * (M * Xn));
    P = Xn - Xproj;
    MP = M * P;
    if (!svqb(P, MP) || P.cols() == 0) {
      P.resize(n, 0);
      MP.resize(n, 0);
    }
    X = Xn;
    AX = AS * Cs;
    MX = MS * Cs;
    theta = th;
  }
  std::ostringstream os;
  os << "eigensolver did not converge in " << options.max_iter << " iterations (residual " << best.residual
     << ", value " << best.value << ")";
  throw EigenSolverError(os.str(), finish(best.value, best.vector, best.iterations));
}

}  // namespace afem
