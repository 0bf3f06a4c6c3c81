#include "afem/solver.hpp"

#include <cmath>
#include <sstream>

#include "afem/parallel.hpp"

namespace afem {

void validate(const ScfOptions& o) {
  if (!(o.mixing > 0.0 && o.mixing <= 1.0)) throw DomainError("scf.mixing must lie in (0, 1]");
  if (!(o.density_tol > 0.0)) throw DomainError("scf.density_tol must be positive");
  if (!(o.eig_tol > 0.0)) throw DomainError("scf.eig_tol must be positive");
  if (o.max_iter < 1) throw DomainError("scf.max_iter must be at least 1");
  if (o.anderson_depth < 0) throw DomainError("scf.anderson_depth must be nonnegative");
  if (o.eigen_block < 1) throw DomainError("scf.eigen_block must be at least 1");
}

QuadField density_of(const FEFunction& u) {
  QuadField rho = values_at_quadrature(u);
  for (double& v : rho.values) v *= v;
  return rho;
}

namespace {

QuadField power(const QuadField& rho, double q) {
  if (q == 1.0) return rho;
  QuadField out = rho;
  for (double& v : out.values) v = std::pow(std::max(v, 0.0), q);
  return out;
}

HartreeField hartree_of_density(const ProblemModel& model, const FESpace& space, const QuadField& rho,
                                const FEFunction* guess) {
  HartreeOptions ho;
  ho.guess = guess;
  const std::function<double(const Vec3&)> kernel =
      model.nonlocal.kernel == KernelKind::custom ? model.nonlocal.custom_kernel : nullptr;
  return hartree_potential(space, power(rho, model.nonlocal.q), model.nonlocal.strategy, ho, kernel);
}

// Sign-fixed w scaled to ||w||_0^2 = Z (full coefficients). The density w^2
// equals |w|^2, so mixing is unaffected by the sign of small tail values.
void normalise(Eigen::VectorXd& w, const SparseMatrix& M, double Z) {
  if (w.sum() < 0.0) w = -w;
  w *= std::sqrt(Z / w.dot(M * w));
}

}  // namespace

HartreeField hartree_of(const ProblemModel& model, const FEFunction& u, const FEFunction* guess) {
  return hartree_of_density(model, *u.space, density_of(u), guess);
}

EigenPair scf_solve(const ProblemModel& model, std::shared_ptr<const FESpace> space, const ScfOptions& options,
                    const FEFunction* warm_start) {
  validate(options);
  if (space->interior_dofs().empty()) throw DomainError("the space has no interior degrees of freedom");
  const FESpace& S = *space;
  const SparseMatrix K = assemble_stiffness(S);
  const SparseMatrix M = assemble_mass(S);
  const SparseMatrix Mi = interior_block(M, S);
  const SparseMatrix Ki = interior_block(K, S);
  const QuadField V = sample_potential(model, S);
  // Preconditioner alpha K + M[max(V, 0) + 1], factored once per mesh.
  QuadField vplus = V;
  for (double& x : vplus.values) x = std::max(x, 0.0) + 1.0;
  const SparseMatrix B = SparseMatrix(model.alpha * Ki + interior_block(assemble_mass(S, &vplus), S));
  const SpdPreconditioner prec(B, options.preconditioner);

  EigenOptions eo;
  eo.tol = 0.1 * options.eig_tol;
  eo.block = options.eigen_block;

  auto solve = [&](const QuadField& rho, const QuadField* phi, const Eigen::VectorXd* guess) {
    const SparseMatrix H = assemble_hamiltonian(model, S, rho, phi, &K, &V);
    const SparseMatrix Hi = interior_block(H, S);
    return smallest_eigenpair(Hi, Mi, eo, guess, &prec);
  };

  EigenPair out;
  Eigen::VectorXd guess;
  QuadField rho;
  if (warm_start) {
    if (warm_start->space.get() != space.get()) throw DomainError("warm start must live on the target space");
    Eigen::VectorXd w = warm_start->coefficients;
    for (DofId d : S.boundary_dofs()) w(d) = 0.0;
    if (w.norm() == 0.0) throw DomainError("warm start vanishes");
    normalise(w, M, model.Z);
    guess = restrict_to_interior(w, S);
    rho = density_of(FEFunction(space, w));
  } else {
    // Ground state of the linear part.
    const QuadField zero(S.mesh().n_elements(), S.volume_rule().size(), 0.0);
    ProblemModel linear = model;
    linear.local = make_linear_model(1.0, 1.0, nullptr, model.domain).local;
    linear.nonlocal = NonlocalSpec{};
    const SparseMatrix H = assemble_hamiltonian(linear, S, zero, nullptr, &K, &V);
    const auto r = smallest_eigenpair(interior_block(H, S), Mi, eo, nullptr, &prec);
    Eigen::VectorXd w = extend_from_interior(r.vector, S);
    normalise(w, M, model.Z);
    guess = restrict_to_interior(w, S);
    rho = density_of(FEFunction(space, w));
  }

  // Quadrature weights for the L2 inner product of densities.
  Eigen::VectorXd qw(static_cast<Eigen::Index>(rho.values.size()));
  for (std::size_t t = 0; t < rho.n_elements; ++t) {
    const double vol = S.mesh().geometry(static_cast<ElementId>(t)).volume;
    for (std::size_t q = 0; q < rho.n_points; ++q) qw(t * rho.n_points + q) = vol * S.volume_rule().weights[q];
  }
  auto as_vec = [](const QuadField& f) { return Eigen::Map<const Eigen::VectorXd>(f.values.data(), f.values.size()); };

  std::optional<HartreeField> phi;
  double prev_theta = std::numeric_limits<double>::quiet_NaN();
  const double m = options.mixing;
  std::vector<Eigen::VectorXd> d_rho, d_res;  // Anderson differences
  Eigen::VectorXd prev_rho, prev_res;
  Eigen::VectorXd w;
  EigenResult er;
  bool converged = false;
  for (int k = 1; k <= options.max_iter; ++k) {
    if (model.nonlocal.active()) {
      const FEFunction* pg = phi && phi->potential ? &*phi->potential : nullptr;
      phi = hartree_of_density(model, S, rho, pg);
    }
    // Inner accuracy follows the density residual, down to the SCF tolerance.
    const double last = out.history.empty() ? 1.0 : out.history.back().density_change;
    eo.tol = std::min(0.1 * options.eig_tol, std::max(0.1 * options.density_tol, 0.01 * last));
    try {
      er = solve(rho, phi ? &phi->values : nullptr, &guess);
    } catch (const EigenSolverError& e) {
      throw ScfError(std::string("SCF iteration ") + std::to_string(k) + ": " + e.what(), out.history);
    }
    guess = er.vector;
    w = extend_from_interior(er.vector, S);
    normalise(w, M, model.Z);

    ScfStep step;
    step.iteration = k;
    step.eigenvalue = er.value;
    step.eigen_iterations = er.iterations;
    step.mixing = m;
    if (model.is_linear()) {
      out.history.push_back(step);
      out.rho = rho;
      converged = true;
      break;
    }
    const Eigen::VectorXd x = as_vec(rho);
    const Eigen::VectorXd f = as_vec(density_of(FEFunction(space, w))) - x;
    // Size of the plain linear-mixing update m (w^2 - rho).
    step.density_change = m * std::sqrt(std::max(f.dot(qw.cwiseProduct(f)), 0.0)) / model.Z;
    out.history.push_back(step);

    const bool eig_ok = std::abs(er.value - prev_theta) <= options.eig_tol * std::max(1.0, std::abs(er.value));
    if (step.density_change < options.density_tol && eig_ok) {
      out.rho = rho;  // the operator of this iteration was assembled at rho
      converged = true;
      break;
    }
    prev_theta = er.value;

    Eigen::VectorXd next = x + m * f;
    if (options.anderson_depth > 0) {
      if (prev_res.size() > 0) {
        d_rho.push_back(x - prev_rho);
        d_res.push_back(f - prev_res);
        if (static_cast<int>(d_res.size()) > options.anderson_depth) {
          d_rho.erase(d_rho.begin());
          d_res.erase(d_res.begin());
        }
      }
      prev_rho = x;
      prev_res = f;
      const Eigen::Index h = static_cast<Eigen::Index>(d_res.size());
      if (h > 0) {
        // gamma = argmin ||f - dF gamma|| in the weighted L2 norm.
        Eigen::MatrixXd G(h, h);
        Eigen::VectorXd b(h);
        for (Eigen::Index i = 0; i < h; ++i) {
          b(i) = d_res[i].dot(qw.cwiseProduct(f));
          for (Eigen::Index j = 0; j <= i; ++j) G(i, j) = G(j, i) = d_res[i].dot(qw.cwiseProduct(d_res[j]));
        }
        G.diagonal().array() += 1e-12 * G.diagonal().maxCoeff();
        const Eigen::VectorXd gamma = G.ldlt().solve(b);
        if (gamma.allFinite())
          for (Eigen::Index i = 0; i < h; ++i) next -= gamma(i) * (d_rho[i] + m * d_res[i]);
      }
      // Keep the density admissible: nonnegative with total mass Z.
      next = next.cwiseMax(0.0);
      next *= model.Z / next.dot(qw);
    }
    std::copy(next.data(), next.data() + next.size(), rho.values.begin());
  }
  if (!converged) {
    std::ostringstream os;
    os << "SCF did not converge in " << options.max_iter << " iterations (last density change "
       << out.history.back().density_change << "); consider lowering scf.mixing";
    throw ScfError(os.str(), out.history);
  }

  out.lambda = er.value;
  out.u = FEFunction(space, w);
  out.residual_norm = er.residual;
  out.scf_iterations = static_cast<int>(out.history.size());
  out.hartree = std::move(phi);
  {
    const Eigen::VectorXd& c = out.u.coefficients;
    const double top = c.cwiseAbs().maxCoeff();
    out.sign_defect = top > 0.0 ? std::max(0.0, -c.minCoeff()) / top : 0.0;
  }

  std::optional<HartreeField> phi_u;
  if (model.nonlocal.active()) {
    const FEFunction* pg = out.hartree && out.hartree->potential ? &*out.hartree->potential : nullptr;
    phi_u = hartree_of(model, out.u, pg);
  }
  out.energy = energy_terms(model, out.u, phi_u ? &phi_u->values : nullptr, &V);
  const double zl = model.Z * out.lambda;
  out.eq34_defect = std::abs(zl - model.Z * lambda_from_energy(model, out.energy)) / std::abs(zl);
  return out;
}

}  // namespace afem
