#include "afem/assembly.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "afem/parallel.hpp"

namespace afem {

namespace {

// T[i][j][k][l] = int_ref dphi_i/dlambda_k dphi_j/dlambda_l (normalised
// volume); stiffness is then vol * sum_kl T_ijkl (grad lambda_k . grad lambda_l).
const std::vector<double>& stiffness_tensor(int degree) {
  static const auto build = [](int deg) {
    const int n = basis::count(deg);
    std::vector<double> T(n * n * 16, 0.0);
    const auto rule = tetrahedron_rule(2 * (deg - 1));
    std::array<std::array<double, 4>, 10> d;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      basis::barycentric_derivatives(deg, rule.points[q], d.data());
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < 4; ++k)
            for (int l = 0; l < 4; ++l) T[((i * n + j) * 4 + k) * 4 + l] += rule.weights[q] * d[i][k] * d[j][l];
    }
    return T;
  };
  static const std::vector<double> t1 = build(1);
  static const std::vector<double> t2 = build(2);
  return degree == 1 ? t1 : t2;
}

void stiffness_into(const FESpace& space, ElementId t, double* K) {
  const int n = space.dofs_per_element();
  const auto g = space.mesh().geometry(t);
  double G[4][4];
  for (int k = 0; k < 4; ++k)
    for (int l = 0; l < 4; ++l) G[k][l] = dot(g.grad_barycentric[k], g.grad_barycentric[l]);
  const auto& T = stiffness_tensor(space.degree());
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      double s = 0.0;
      const double* Tij = &T[(i * n + j) * 16];
      for (int k = 0; k < 4; ++k)
        for (int l = 0; l < 4; ++l) s += Tij[k * 4 + l] * G[k][l];
      K[i * n + j] = K[j * n + i] = g.volume * s;
    }
}

void mass_into(const FESpace& space, ElementId t, const QuadField* weight, double* M) {
  const int n = space.dofs_per_element();
  const auto& rule = space.volume_rule();
  const auto& phi = space.volume_basis();
  const double vol = space.mesh().geometry(t).volume;
  std::fill(M, M + n * n, 0.0);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const double w = rule.weights[q] * vol * (weight ? (*weight)(static_cast<std::size_t>(t), q) : 1.0);
    const double* p = &phi[q * n];
    for (int i = 0; i < n; ++i) {
      const double wi = w * p[i];
      for (int j = i; j < n; ++j) M[i * n + j] += wi * p[j];
    }
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) M[i * n + j] = M[j * n + i];
}

// Computes element matrices in blocks (in parallel) and scatters them in
// element order, so the result does not depend on the thread count.
template <class LocalFn>
SparseMatrix assemble(const FESpace& space, LocalFn local) {
  const auto& pat = space.pattern();
  const int n = space.dofs_per_element();
  const std::size_t ne = space.mesh().n_elements();
  std::vector<double> values(pat.cols.size(), 0.0);
  constexpr std::size_t kBlock = 4096;
  std::vector<double> buf(kBlock * n * n);
  for (std::size_t start = 0; start < ne; start += kBlock) {
    const std::size_t count = std::min(kBlock, ne - start);
    parallel_for(count, [&](std::size_t b) { local(static_cast<ElementId>(start + b), &buf[b * n * n]); });
    for (std::size_t b = 0; b < count; ++b) {
      const auto dofs = space.element_dofs(static_cast<ElementId>(start + b));
      const double* A = &buf[b * n * n];
      for (int i = 0; i < n; ++i) {
        const int r = dofs[i];
        const int* first = pat.cols.data() + pat.row_ptr[r];
        const int* last = pat.cols.data() + pat.row_ptr[r + 1];
        for (int j = 0; j < n; ++j) {
          const auto pos = std::lower_bound(first, last, dofs[j]) - pat.cols.data();
          values[pos] += A[i * n + j];
        }
      }
    }
  }
  const auto nd = static_cast<int>(space.n_dofs());
  Eigen::Map<const SparseMatrix> map(nd, nd, static_cast<int>(values.size()), pat.row_ptr.data(), pat.cols.data(),
                                     values.data());
  return SparseMatrix(map);
}

Eigen::VectorXd load_vector(const FESpace& space, const QuadField& f) {
  const int n = space.dofs_per_element();
  const auto& rule = space.volume_rule();
  const auto& phi = space.volume_basis();
  const std::size_t ne = space.mesh().n_elements();
  std::vector<double> local(ne * n, 0.0);
  parallel_for(ne, [&](std::size_t t) {
    const double vol = space.mesh().geometry(static_cast<ElementId>(t)).volume;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double w = rule.weights[q] * vol * f(t, q);
      for (int i = 0; i < n; ++i) local[t * n + i] += w * phi[q * n + i];
    }
  });
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.n_dofs()));
  for (std::size_t t = 0; t < ne; ++t) {
    const auto dofs = space.element_dofs(static_cast<ElementId>(t));
    for (int i = 0; i < n; ++i) b(dofs[i]) += local[t * n + i];
  }
  return b;
}

}  // namespace

std::vector<double> local_stiffness(const FESpace& space, ElementId t) {
  std::vector<double> K(space.dofs_per_element() * space.dofs_per_element());
  stiffness_into(space, t, K.data());
  return K;
}

std::vector<double> local_mass(const FESpace& space, ElementId t, const QuadField* weight) {
  std::vector<double> M(space.dofs_per_element() * space.dofs_per_element());
  mass_into(space, t, weight, M.data());
  return M;
}

SparseMatrix assemble_stiffness(const FESpace& space) {
  return assemble(space, [&](ElementId t, double* K) { stiffness_into(space, t, K); });
}

SparseMatrix assemble_mass(const FESpace& space, const QuadField* weight) {
  if (weight && !weight->matches(space)) throw DomainError("mass weight does not match the space");
  return assemble(space, [&](ElementId t, double* M) { mass_into(space, t, weight, M); });
}

SparseMatrix interior_block(const SparseMatrix& A, const FESpace& space) {
  const auto& idx = space.interior_index();
  const auto ni = static_cast<int>(space.interior_dofs().size());
  SparseMatrix B(ni, ni);
  std::vector<int> nnz(ni, 0);
  for (int c : space.interior_dofs()) {
    const int ic = idx[c];
    for (SparseMatrix::InnerIterator it(A, c); it; ++it)
      if (idx[it.row()] >= 0) ++nnz[ic];
  }
  B.reserve(nnz);
  for (int c : space.interior_dofs())
    for (SparseMatrix::InnerIterator it(A, c); it; ++it) {
      const int r = idx[it.row()];
      if (r >= 0) B.insert(r, idx[c]) = it.value();
    }
  B.makeCompressed();
  return B;
}

Eigen::VectorXd restrict_to_interior(const Eigen::VectorXd& x, const FESpace& space) {
  const auto& in = space.interior_dofs();
  Eigen::VectorXd y(static_cast<Eigen::Index>(in.size()));
  for (std::size_t i = 0; i < in.size(); ++i) y(static_cast<Eigen::Index>(i)) = x(in[i]);
  return y;
}

Eigen::VectorXd extend_from_interior(const Eigen::VectorXd& xi, const FESpace& space) {
  const auto& in = space.interior_dofs();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.n_dofs()));
  for (std::size_t i = 0; i < in.size(); ++i) x(in[i]) = xi(static_cast<Eigen::Index>(i));
  return x;
}

HartreeField hartree_potential(const FESpace& space, const QuadField& rho_q, HartreeStrategy strategy,
                               const HartreeOptions& options, const std::function<double(const Vec3&)>& kernel) {
  if (!rho_q.matches(space)) throw DomainError("density field does not match the space");
  for (double v : rho_q.values)
    if (!(v >= -1e-12)) throw DomainError("negative density passed to hartree_potential");

  const auto& mesh = space.mesh();
  const auto& rule = space.volume_rule();
  const std::size_t ne = mesh.n_elements();
  const std::size_t nq = rule.size();

  HartreeField out;
  out.strategy = strategy;
  out.values = QuadField(ne, nq, 0.0);
  Vec3 moment{0.0, 0.0, 0.0};
  for (std::size_t t = 0; t < ne; ++t) {
    const double vol = mesh.geometry(static_cast<ElementId>(t)).volume;
    const auto pts = quadrature_points(space, static_cast<ElementId>(t));
    for (std::size_t q = 0; q < nq; ++q) {
      const double w = rule.weights[q] * vol * rho_q(t, q);
      out.charge += w;
      moment = moment + w * pts[q];
    }
  }
  if (out.charge == 0.0) return out;
  out.centroid = (1.0 / out.charge) * moment;

  if (strategy == HartreeStrategy::poisson) {
    if (kernel) throw DomainError("the poisson strategy supports only the Coulomb kernel");
    if (options.degree != 1 && options.degree != 2) throw DomainError("Hartree potential degree must be 1 or 2");
    const int pdeg = std::max(options.degree, space.degree());
    const auto& mesh_ptr = space.mesh_ptr();
    std::shared_ptr<const FESpace> P;
    const bool reuse_guess = options.guess && options.guess->space->mesh_ptr() == mesh_ptr &&
                             options.guess->space->degree() == pdeg && options.guess->space->volume_rule().size() == nq;
    if (reuse_guess) {
      P = options.guess->space;
    } else if (pdeg == space.degree()) {
      P = space.weak_from_this().lock();
      if (!P) P = std::shared_ptr<const FESpace>(std::shared_ptr<const FESpace>(), &space);
    } else {
      P = build_space(mesh_ptr, pdeg, QuadratureOptions{rule.degree, space.face_rule().degree});
    }
    if (P->volume_rule().size() != nq) throw Error("Hartree potential space does not share the quadrature rule");
    const FESpace& Ps = *P;
    const SparseMatrix K = assemble_stiffness(Ps);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(Ps.n_dofs()));
    for (DofId d : Ps.boundary_dofs()) g(d) = out.charge / distance(Ps.dof_node(d), out.centroid);
    const Eigen::VectorXd rhs_full = 4.0 * std::numbers::pi * load_vector(Ps, rho_q) - K * g;
    const Eigen::VectorXd rhs = restrict_to_interior(rhs_full, Ps);
    Eigen::VectorXd x;
    if (rhs.size() > 0) {
      const SparseMatrix Kii = interior_block(K, Ps);
      Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>> cg;
      cg.setTolerance(options.tolerance);
      cg.setMaxIterations(std::max<Eigen::Index>(1000, 4 * rhs.size()));
      cg.compute(Kii);
      if (cg.info() != Eigen::Success) throw Error("incomplete Cholesky factorisation failed in the Poisson solve");
      if (options.guess && options.guess->space == P)
        x = cg.solveWithGuess(rhs, restrict_to_interior(options.guess->coefficients, Ps));
      else
        x = cg.solve(rhs);
      if (cg.info() != Eigen::Success) throw Error("Poisson solve did not converge");
    } else {
      x = rhs;
    }
    Eigen::VectorXd phi = extend_from_interior(x, Ps) + g;
    FEFunction f(std::move(P), std::move(phi));
    out.values = values_at_quadrature(f);
    out.potential = std::move(f);
    return out;
  }

  // direct
  std::vector<Vec3> pts(ne * nq);
  std::vector<double> charge(ne * nq);
  std::vector<double> eps(ne);
  for (std::size_t t = 0; t < ne; ++t) {
    const auto g = mesh.geometry(static_cast<ElementId>(t));
    eps[t] = g.diameter / 10.0;
    const auto p = quadrature_points(space, static_cast<ElementId>(t));
    for (std::size_t q = 0; q < nq; ++q) {
      pts[t * nq + q] = p[q];
      charge[t * nq + q] = rule.weights[q] * g.volume * rho_q(t, q);
    }
  }
  const std::size_t np = pts.size();
  parallel_for(ne, [&](std::size_t t) {
    const double e2 = eps[t] * eps[t];
    for (std::size_t q = 0; q < nq; ++q) {
      const Vec3& x = pts[t * nq + q];
      double s = 0.0;
      for (std::size_t j = 0; j < np; ++j) {
        if (charge[j] == 0.0) continue;
        const Vec3 d = x - pts[j];
        const bool near = j / nq == t;
        if (kernel) {
          s += charge[j] * kernel(near && dot(d, d) == 0.0 ? Vec3{eps[t], 0.0, 0.0} : d);
        } else {
          const double r2 = dot(d, d) + (near ? e2 : 0.0);
          s += charge[j] / std::sqrt(r2);
        }
      }
      out.values(t, q) = s;
    }
  });
  return out;
}

QuadField sample_potential(const ProblemModel& model, const FESpace& space) {
  return sample_at_quadrature(space, model.potential);
}

QuadField hamiltonian_weight(const ProblemModel& model, const QuadField& v, const QuadField& rho,
                             const QuadField* phi) {
  if (model.nonlocal.active() && !phi) throw DomainError("nonlocal model requires the Hartree field");
  QuadField w(v.n_elements, v.n_points);
  parallel_for(w.values.size(), [&](std::size_t i) {
    w.values[i] = v.values[i] + model.nonlinear_weight(rho.values[i], phi ? phi->values[i] : 0.0);
  });
  return w;
}

SparseMatrix assemble_hamiltonian(const ProblemModel& model, const FESpace& space, const QuadField& rho,
                                  const QuadField* phi, const SparseMatrix* stiffness, const QuadField* v) {
  std::optional<QuadField> v_local;
  if (!v) v = &v_local.emplace(sample_potential(model, space));
  const QuadField w = hamiltonian_weight(model, *v, rho, phi);
  SparseMatrix H = assemble_mass(space, &w);
  if (stiffness) {
    H += model.alpha * (*stiffness);
  } else {
    H += model.alpha * assemble_stiffness(space);
  }
  return H;
}

}  // namespace afem
