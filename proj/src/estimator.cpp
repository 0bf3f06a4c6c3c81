#include "afem/estimator.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <numbers>

#include "afem/parallel.hpp"

namespace afem {

std::vector<double> IndicatorField::eta() const {
  std::vector<double> out(eta_sq.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(eta_sq[i]);
  return out;
}

namespace {

const QuadField* hartree_values(const ProblemModel& model, const FESpace& space, const HartreeField* hartree) {
  if (!model.nonlocal.active()) return nullptr;
  if (!hartree) throw DomainError("nonlocal model requires the Hartree field of the solve");
  if (!hartree->values.matches(space)) throw DomainError("Hartree field does not match the space");
  return &hartree->values;
}

// Residual at the volume quadrature points of t, with u and phi on the same space.
void residual_on(const ProblemModel& model, const FEFunction& u, double lambda, const QuadField* phi, ElementId t,
                 std::vector<double>& out) {
  const FESpace& S = *u.space;
  const auto& rule = S.volume_rule();
  const auto g = S.mesh().geometry(t);
  const auto dofs = S.element_dofs(t);
  const int nb = S.dofs_per_element();

  double lap = 0.0;
  if (S.degree() > 1) {
    double L[10];
    basis::laplacians(S.degree(), g.grad_barycentric, L);
    for (int i = 0; i < nb; ++i) lap += L[i] * u.coefficients(dofs[i]);
  }
  const auto& B = S.volume_basis();
  const std::vector<Vec3> x = model.potential ? quadrature_points(S, t) : std::vector<Vec3>{};
  out.resize(rule.size());
  for (std::size_t q = 0; q < rule.size(); ++q) {
    double uq = 0.0;
    for (int i = 0; i < nb; ++i) uq += B[q * nb + i] * u.coefficients(dofs[i]);
    const double v = model.potential ? model.potential(x[q]) : 0.0;
    const double n = model.nonlinear_weight(uq * uq, phi ? (*phi)(t, q) : 0.0);
    out[q] = lambda * uq + model.alpha * lap - v * uq - n * uq;
  }
}

// h_T^2 ||R||^2 and h_T^2 ||R - P R||^2 with P the quadrature L2 projection
// onto polynomials of degree n - 1.
std::pair<double, double> element_terms(const FESpace& S, ElementId t, const std::vector<double>& r) {
  const auto& rule = S.volume_rule();
  const auto g = S.mesh().geometry(t);
  double norm = 0.0;
  for (std::size_t q = 0; q < rule.size(); ++q) norm += rule.weights[q] * r[q] * r[q];
  double osc = 0.0;
  if (S.degree() == 1) {
    double mean = 0.0, wsum = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      mean += rule.weights[q] * r[q];
      wsum += rule.weights[q];
    }
    mean /= wsum;
    for (std::size_t q = 0; q < rule.size(); ++q) osc += rule.weights[q] * (r[q] - mean) * (r[q] - mean);
  } else {
    Eigen::Matrix4d G = Eigen::Matrix4d::Zero();
    Eigen::Vector4d b = Eigen::Vector4d::Zero();
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Eigen::Vector4d l(rule.points[q][0], rule.points[q][1], rule.points[q][2], rule.points[q][3]);
      G += rule.weights[q] * l * l.transpose();
      b += rule.weights[q] * r[q] * l;
    }
    const Eigen::Vector4d c = G.ldlt().solve(b);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Eigen::Vector4d l(rule.points[q][0], rule.points[q][1], rule.points[q][2], rule.points[q][3]);
      const double d = r[q] - c.dot(l);
      osc += rule.weights[q] * d * d;
    }
  }
  const double h2v = g.diameter * g.diameter * g.volume;
  return {h2v * norm, h2v * osc};
}

}  // namespace

std::vector<double> element_residual(const ProblemModel& model, const FEFunction& u, double lambda,
                                     const HartreeField* hartree, ElementId t) {
  const QuadField* phi = hartree_values(model, *u.space, hartree);
  std::vector<double> r;
  residual_on(model, u, lambda, phi, t, r);
  return r;
}

std::vector<double> jump_residual(const FEFunction& u, FaceId f, double alpha, int first) {
  const Mesh& mesh = u.space->mesh();
  const Face& face = mesh.faces()[f];
  if (face.boundary()) throw DomainError("jump residual requested on a boundary face");
  const int a = first == 0 ? 0 : 1;
  const int b = 1 - a;
  const ElementId t1 = face.elements[a], t2 = face.elements[b];
  const auto& rule = u.space->face_rule();
  std::vector<std::array<double, 4>> p1(rule.size()), p2(rule.size());
  for (std::size_t q = 0; q < rule.size(); ++q) {
    p1[q] = face_to_element(mesh, t1, face.local_face[a], rule.points[q]);
    p2[q] = face_to_element(mesh, t2, face.local_face[b], rule.points[q]);
  }
  const PointEvaluation e1 = evaluate(u, t1, p1);
  const PointEvaluation e2 = evaluate(u, t2, p2);
  const Vec3 n = mesh.outward_normal(t1, face.local_face[a]);
  std::vector<double> out(rule.size());
  for (std::size_t q = 0; q < rule.size(); ++q) out[q] = alpha * dot(e1.gradients[q] - e2.gradients[q], n);
  return out;
}

IndicatorField indicators(const ProblemModel& model, const FEFunction& u, double lambda,
                          const HartreeField* hartree) {
  const FESpace& S = *u.space;
  const Mesh& mesh = S.mesh();
  const QuadField* phi = hartree_values(model, S, hartree);
  const std::size_t ne = mesh.n_elements(), nf = mesh.n_faces();

  IndicatorField out;
  out.element_sq.assign(ne, 0.0);
  out.osc_sq.assign(ne, 0.0);
  out.jump_sq.assign(nf, 0.0);
  parallel_for(ne, [&](std::size_t t) {
    std::vector<double> r;
    residual_on(model, u, lambda, phi, static_cast<ElementId>(t), r);
    const auto [e, o] = element_terms(S, static_cast<ElementId>(t), r);
    out.element_sq[t] = e;
    out.osc_sq[t] = o;
  });
  const auto& frule = S.face_rule();
  parallel_for(nf, [&](std::size_t f) {
    if (mesh.faces()[f].boundary()) return;
    const std::vector<double> j = jump_residual(u, static_cast<FaceId>(f), model.alpha);
    double s = 0.0;
    for (std::size_t q = 0; q < frule.size(); ++q) s += frule.weights[q] * j[q] * j[q];
    out.jump_sq[f] = mesh.face_diameter(static_cast<FaceId>(f)) * mesh.face_area(static_cast<FaceId>(f)) * s;
  });
  out.face_sq.assign(ne, 0.0);
  out.eta_sq.assign(ne, 0.0);
  double eta2 = 0.0, osc2 = 0.0;
  for (std::size_t t = 0; t < ne; ++t) {
    for (FaceId f : mesh.element_faces(static_cast<ElementId>(t))) out.face_sq[t] += out.jump_sq[f];
    out.eta_sq[t] = out.element_sq[t] + out.face_sq[t];
    eta2 += out.eta_sq[t];
    osc2 += out.osc_sq[t];
    if (out.eta_sq[t] > out.eta_sq[out.argmax]) out.argmax = static_cast<ElementId>(t);
  }
  out.global_eta = std::sqrt(eta2);
  out.global_osc = std::sqrt(osc2);
  out.max_eta = ne ? std::sqrt(out.eta_sq[out.argmax]) : 0.0;
  return out;
}

double global_residual_apply(const ProblemModel& model, const FEFunction& u, double lambda,
                             const HartreeField* hartree, const FEFunction& v) {
  const FESpace& V = *v.space;
  if (V.degree() < u.space->degree()) throw DomainError("test space must have at least the degree of u");
  FEFunction uf = u;
  QuadField phi_f;
  const QuadField* phi = nullptr;
  const bool same = &V.mesh() == &u.space->mesh() || V.mesh().serial() == u.space->mesh().serial();
  if (same && V.degree() == u.space->degree()) {
    uf = FEFunction(v.space, u.coefficients);
    phi = hartree_values(model, *u.space, hartree);
  } else {
    uf = transfer(u, v.space);
    if (model.nonlocal.active()) {
      if (!hartree || !hartree->potential)
        throw DomainError("a finite element Hartree potential is needed to integrate on another mesh");
      const FEFunction& pot = *hartree->potential;
      if (pot.space->degree() <= V.degree()) {
        phi_f = values_at_quadrature(transfer(pot, v.space));
      } else {
        // Higher-degree potential: transfer exactly, then sample at V's points.
        const FEFunction fine = transfer(pot, build_space(V.mesh_ptr(), pot.space->degree()));
        const auto& vr = V.volume_rule();
        const std::vector<std::array<double, 4>> pts(vr.points.begin(), vr.points.end());
        phi_f = QuadField(V.mesh().n_elements(), vr.size());
        parallel_for(V.mesh().n_elements(), [&](std::size_t t) {
          const PointEvaluation e = evaluate(fine, static_cast<ElementId>(t), pts);
          for (std::size_t q = 0; q < vr.size(); ++q) phi_f(t, q) = e.values[q];
        });
      }
      phi = &phi_f;
    }
  }

  const auto& rule = V.volume_rule();
  const std::size_t ne = V.mesh().n_elements();
  std::vector<double> part(ne, 0.0);
  parallel_for(ne, [&](std::size_t t) {
    const auto tid = static_cast<ElementId>(t);
    std::vector<std::array<double, 4>> pts(rule.points.begin(), rule.points.end());
    const PointEvaluation eu = evaluate(uf, tid, pts);
    const PointEvaluation ev = evaluate(v, tid, pts);
    const std::vector<Vec3> x = model.potential ? quadrature_points(V, tid) : std::vector<Vec3>{};
    double s = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double uq = eu.values[q];
      const double pot = model.potential ? model.potential(x[q]) : 0.0;
      const double n = model.nonlinear_weight(uq * uq, phi ? (*phi)(t, q) : 0.0);
      s += rule.weights[q] * ((lambda - pot - n) * uq * ev.values[q] - model.alpha * dot(eu.gradients[q], ev.gradients[q]));
    }
    part[t] = V.mesh().geometry(tid).volume * s;
  });
  double total = 0.0;
  for (double p : part) total += p;
  return total;
}

SecondVariationResult second_variation_gap(const ProblemModel& model, const FEFunction& u, double lambda,
                                           const HartreeField* hartree, int dense_limit) {
  const FESpace& S = *u.space;
  const QuadField* phi = hartree_values(model, S, hartree);
  SecondVariationResult out;

  const QuadField uq = values_at_quadrature(u);
  const QuadField V = sample_potential(model, S);
  QuadField w(uq.n_elements, uq.n_points), wabs(uq.n_elements, uq.n_points);
  for (std::size_t i = 0; i < w.values.size(); ++i) {
    const double rho = uq.values[i] * uq.values[i];
    const double n = model.nonlinear_weight(rho, phi ? phi->values[i] : 0.0);
    const double d = model.local.vanishes ? 0.0 : 2.0 * model.local.scaled_derivative(rho);
    w.values[i] = V.values[i] + n - lambda + d;
    wabs.values[i] = std::abs(V.values[i]) + std::abs(n) + std::abs(d) + 1.0;
  }
  const SparseMatrix Ki = interior_block(assemble_stiffness(S), S);
  const SparseMatrix Ai = SparseMatrix(model.alpha * Ki + interior_block(assemble_mass(S, &w), S));
  const Eigen::VectorXd ui = restrict_to_interior(u.coefficients, S);
  const Eigen::MatrixXd C = interior_block(assemble_mass(S), S) * ui;

  // Coulomb cross term 2q D_K(u v, u w) = 8 pi (M_u K^-1 M_u) for q = 1.
  SparseMatrix Mu;
  std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)> coulomb;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>> cg;
  if (model.nonlocal.active()) {
    if (model.nonlocal.kernel == KernelKind::coulomb && model.nonlocal.q == 1.0) {
      Mu = interior_block(assemble_mass(S, &uq), S);
      const bool exact = Ki.rows() <= 20000;
      if (exact)
        ldlt.compute(Ki);
      else {
        cg.setTolerance(1e-10);
        cg.compute(Ki);
      }
      coulomb = [&, exact](const Eigen::MatrixXd& X) -> Eigen::MatrixXd {
        const Eigen::MatrixXd b = Mu * X;
        Eigen::MatrixXd y(b.rows(), b.cols());
        for (Eigen::Index j = 0; j < b.cols(); ++j) {
          if (exact)
            y.col(j) = ldlt.solve(b.col(j));
          else
            y.col(j) = cg.solve(b.col(j));
        }
        return 8.0 * std::numbers::pi * (Mu * y);
      };
    } else {
      out.nonlocal_included = false;
      out.warning = "nonlocal cross terms omitted: only the Coulomb kernel with q = 1 is supported";
    }
  }
  const BlockOperator A = [&](const Eigen::MatrixXd& X) -> Eigen::MatrixXd {
    Eigen::MatrixXd y = Ai * X;
    if (coulomb) y += coulomb(X);
    return y;
  };

  const Eigen::Index n = Ki.rows();
  if (n <= dense_limit) {
    const Eigen::MatrixXd Ad = A(Eigen::MatrixXd::Identity(n, n));
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
    dense_eigenpairs(0.5 * (Ad + Ad.transpose()), Eigen::MatrixXd(Ki), values, vectors, &C);
    out.gamma = values(0);
    out.vector = extend_from_interior(vectors.col(0), S);
    return out;
  }
  EigenOptions eo;
  eo.tol = 1e-6;
  eo.max_iter = 2000;
  eo.constraints = &C;
  eo.dense_limit = 0;
  const SpdPreconditioner prec(SparseMatrix(model.alpha * Ki + interior_block(assemble_mass(S, &wabs), S)));
  EigenResult r;
  try {
    r = smallest_eigenpair(A, Ki, eo, nullptr, &prec);
  } catch (const EigenSolverError& e) {
    r = e.best();
    out.warning += (out.warning.empty() ? "" : "; ") + std::string("eigensolver not converged: ") + e.what();
  }
  out.gamma = r.value;
  out.vector = extend_from_interior(r.vector, S);
  return out;
}

}  // namespace afem
