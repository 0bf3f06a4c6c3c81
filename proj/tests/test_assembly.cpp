#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "afem/assembly.hpp"
#include "afem/parallel.hpp"

using namespace afem;

namespace {

constexpr double kPi = std::numbers::pi;

std::shared_ptr<const Mesh> cube_mesh(const Box& box, int n, int sweeps = 0) {
  Mesh m = Mesh::box(box, {n, n, n});
  for (int s = 0; s < sweeps; ++s) {
    std::vector<ElementId> all(m.n_elements());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<ElementId>(i);
    m = m.bisect(all);
  }
  return std::make_shared<const Mesh>(std::move(m));
}

std::shared_ptr<const Mesh> reference_tet() {
  Element e;
  e.vertices = {0, 1, 2, 3};
  return std::make_shared<const Mesh>(Mesh::from_elements({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, {e}));
}

double max_abs(const SparseMatrix& A) {
  double m = 0.0;
  for (int k = 0; k < A.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

double max_asymmetry(const SparseMatrix& A) {
  SparseMatrix At = A.transpose();
  return max_abs(A - At);
}

}  // namespace

TEST_CASE("reference tetrahedron local matrices") {
  auto space = build_space(reference_tet(), 1);
  const auto K = local_stiffness(*space, 0);
  const double ref[16] = {3, -1, -1, -1, -1, 1, 0, 0, -1, 0, 1, 0, -1, 0, 0, 1};
  for (int i = 0; i < 16; ++i) CHECK(K[i] == doctest::Approx(ref[i] / 6.0).epsilon(1e-14));
  const auto M = local_mass(*space, 0);
  const double V = 1.0 / 6.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(M[i * 4 + j] == doctest::Approx(V * (1.0 + (i == j)) / 20.0).epsilon(1e-13));
}

TEST_CASE("stiffness rows sum to zero on every element") {
  auto mesh = cube_mesh(Box{{0, 0, 0}, {1, 2, 1}}, 2, 2);
  for (int deg : {1, 2}) {
    auto space = build_space(mesh, deg);
    const int n = space->dofs_per_element();
    for (ElementId t = 0; t < static_cast<ElementId>(mesh->n_elements()); t += 7) {
      const auto K = local_stiffness(*space, t);
      for (int i = 0; i < n; ++i) {
        double s = 0, scale = 0;
        for (int j = 0; j < n; ++j) {
          s += K[i * n + j];
          scale += std::abs(K[i * n + j]);
        }
        CHECK(std::abs(s) < 1e-13 * scale);
      }
    }
  }
}

TEST_CASE("P2 stiffness and mass against direct quadrature") {
  auto mesh = cube_mesh(Box{{0, 0, 0}, {1, 1, 1}}, 1, 1);
  auto space = build_space(mesh, 2);
  const ElementId t = 3;
  const auto g = mesh->geometry(t);
  const auto rule = tetrahedron_rule(6);
  std::vector<double> K(100, 0.0), M(100, 0.0);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    double phi[10];
    Vec3 grad[10];
    basis::values(2, rule.points[q], phi);
    basis::gradients(2, rule.points[q], g.grad_barycentric, grad);
    for (int i = 0; i < 10; ++i)
      for (int j = 0; j < 10; ++j) {
        K[i * 10 + j] += rule.weights[q] * g.volume * dot(grad[i], grad[j]);
        M[i * 10 + j] += rule.weights[q] * g.volume * phi[i] * phi[j];
      }
  }
  const auto Ka = local_stiffness(*space, t);
  const auto Ma = local_mass(*space, t);
  for (int i = 0; i < 100; ++i) {
    CHECK(std::abs(Ka[i] - K[i]) < 1e-13);
    CHECK(std::abs(Ma[i] - M[i]) < 1e-15);
  }
}

TEST_CASE("global matrices: symmetry, volume, definiteness") {
  const Box box{{0, 0, 0}, {1, 2, 1}};
  auto mesh = cube_mesh(box, 2, 1);
  for (int deg : {1, 2}) {
    auto space = build_space(mesh, deg);
    const auto K = assemble_stiffness(*space);
    const auto M = assemble_mass(*space);
    CHECK(max_asymmetry(K) == 0.0);
    CHECK(max_asymmetry(M) == 0.0);
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(M.rows());
    CHECK(one.dot(M * one) == doctest::Approx(box.volume()).epsilon(1e-12));
    CHECK((K * one).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::MatrixXd Kii = Eigen::MatrixXd(interior_block(K, *space));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Kii);
    CHECK(es.eigenvalues()(0) > 0.0);
  }
}

TEST_CASE("weighted mass") {
  auto mesh = cube_mesh(Box{{0, 0, 0}, {1, 1, 1}}, 2);
  auto space = build_space(mesh, 2);
  const auto M = assemble_mass(*space);
  QuadField zero(mesh->n_elements(), space->volume_rule().size(), 0.0);
  CHECK(max_abs(assemble_mass(*space, &zero)) == 0.0);
  QuadField c(mesh->n_elements(), space->volume_rule().size(), 2.5);
  SparseMatrix diff = assemble_mass(*space, &c) - 2.5 * M;
  CHECK(max_abs(diff) < 1e-12);
  QuadField wrong(3, 3);
  CHECK_THROWS_AS(assemble_mass(*space, &wrong), DomainError);
}

TEST_CASE("assembly is independent of the thread count") {
  auto mesh = cube_mesh(Box{{0, 0, 0}, {1, 1, 1}}, 4, 2);
  auto space = build_space(mesh, 2);
  auto w = sample_at_quadrature(*space, [](const Vec3& x) { return std::exp(x[0] - x[1] * x[2]); });
  set_num_threads(1);
  const auto A1 = assemble_mass(*space, &w);
  const auto K1 = assemble_stiffness(*space);
  set_num_threads(4);
  const auto A4 = assemble_mass(*space, &w);
  const auto K4 = assemble_stiffness(*space);
  set_num_threads(0);
  CHECK(max_abs(A1 - A4) == 0.0);
  CHECK(max_abs(K1 - K4) == 0.0);
}

TEST_CASE("discrete Dirichlet energy of the ground mode converges") {
  // int |grad(sin sin sin)|^2 over the unit cube = 3 pi^2 / 8.
  const double exact = 3.0 * kPi * kPi / 8.0;
  auto f = [](const Vec3& x) { return std::sin(kPi * x[0]) * std::sin(kPi * x[1]) * std::sin(kPi * x[2]); };
  for (int deg : {1, 2}) {
    std::vector<double> err;
    for (int sweeps : {0, 3, 6}) {
      auto space = build_space(cube_mesh(Box{{0, 0, 0}, {1, 1, 1}}, 2, sweeps), deg);
      auto u = interpolate(f, space);
      const auto K = assemble_stiffness(*space);
      err.push_back(std::abs(u.coefficients.dot(K * u.coefficients) - exact));
    }
    const double rate = deg == 1 ? 3.0 : 10.0;
    CHECK(err[1] * rate < err[0]);
    CHECK(err[2] * rate < err[1]);
  }
}

TEST_CASE("Hamiltonian assembly") {
  const Box box{{-8, -6, -4}, {8, 6, 4}};
  auto mesh = cube_mesh(box, 2, 1);
  auto space = build_space(mesh, 1);
  const std::size_t nq = space->volume_rule().size();

  auto lin = make_linear_model(0.5, 1.0, nullptr, box);
  QuadField rho0(mesh->n_elements(), nq, 0.0);
  SparseMatrix d = assemble_hamiltonian(lin, *space, rho0) - 0.5 * assemble_stiffness(*space);
  CHECK(max_abs(d) == 0.0);

  // GPE: weight V + beta rho; compare one element against a hand-written quadrature.
  auto gpe = make_gpe_model(200.0, {1, 2, 4}, box);
  auto rho = sample_at_quadrature(*space, [](const Vec3& x) { return 0.01 * std::exp(-dot(x, x) / 4.0); });
  const auto v = sample_potential(gpe, *space);
  const auto w = hamiltonian_weight(gpe, v, rho, nullptr);
  const ElementId t = 5;
  const auto g = mesh->geometry(t);
  const auto pts = quadrature_points(*space, t);
  const auto Ml = local_mass(*space, t, &w);
  const auto Kl = local_stiffness(*space, t);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      double ref = 0.5 * g.volume * dot(g.grad_barycentric[i], g.grad_barycentric[j]);
      for (std::size_t q = 0; q < nq; ++q) {
        const auto& l = space->volume_rule().points[q];
        const double r = 0.01 * std::exp(-dot(pts[q], pts[q]) / 4.0);
        ref += space->volume_rule().weights[q] * g.volume * (gpe.potential(pts[q]) + 200.0 * r) * l[i] * l[j];
      }
      CHECK(0.5 * Kl[i * 4 + j] + Ml[i * 4 + j] == doctest::Approx(ref).epsilon(1e-12));
    }
  const auto H = assemble_hamiltonian(gpe, *space, rho);
  CHECK(max_asymmetry(H) == 0.0);

  // TFW weight at rho = 3/(4 pi) with V = 0 and phi = 0.
  auto tfw = make_tfw_helium_model(Box{{-5, -5, -5}, {5, 5, 5}});
  QuadField r1(1, 1, 3.0 / (4.0 * kPi)), z(1, 1, 0.0);
  const auto wt = hamiltonian_weight(tfw, z, r1, &z);
  const double tf = 5.0 / 3.0 * thomas_fermi_constant() * std::pow(3.0 / (4.0 * kPi), 2.0 / 3.0);
  CHECK(std::abs(wt.values[0] - tf - (-0.6777)) < 1e-3);
  CHECK_THROWS_AS(hamiltonian_weight(tfw, z, r1, nullptr), DomainError);
}

TEST_CASE("Hartree potential: zero density and negative density") {
  auto mesh = cube_mesh(Box{{-5, -5, -5}, {5, 5, 5}}, 2);
  auto space = build_space(mesh, 1);
  QuadField zero(mesh->n_elements(), space->volume_rule().size(), 0.0);
  for (auto s : {HartreeStrategy::poisson, HartreeStrategy::direct}) {
    auto h = hartree_potential(*space, zero, s);
    CHECK(*std::max_element(h.values.values.begin(), h.values.values.end()) == 0.0);
    CHECK(*std::min_element(h.values.values.begin(), h.values.values.end()) == 0.0);
  }
  QuadField neg = zero;
  neg.values[3] = -1e-6;
  CHECK_THROWS_AS(hartree_potential(*space, neg, HartreeStrategy::direct), DomainError);
}

TEST_CASE("Hartree potential: monopole far field") {
  // Unit charge Gaussian of width 0.5 at the centre of (-5,5)^3.
  const double s = 0.5;
  auto density = [s](const Vec3& x) { return std::exp(-dot(x, x) / (2 * s * s)) / std::pow(2 * kPi * s * s, 1.5); };
  auto space_p = build_space(cube_mesh(Box{{-5, -5, -5}, {5, 5, 5}}, 4, 6), 1);
  auto space_d = build_space(cube_mesh(Box{{-5, -5, -5}, {5, 5, 5}}, 4, 1), 1);
  for (auto [space, strategy] : {std::pair{space_p, HartreeStrategy::poisson}, std::pair{space_d, HartreeStrategy::direct}}) {
    auto rho = sample_at_quadrature(*space, density);
    auto h = hartree_potential(*space, rho, strategy);
    CHECK(h.charge == doctest::Approx(1.0).epsilon(0.1));
    double worst = 0;
    int count = 0;
    for (ElementId t = 0; t < static_cast<ElementId>(space->mesh().n_elements()); ++t) {
      const auto pts = quadrature_points(*space, t);
      for (std::size_t q = 0; q < pts.size(); ++q) {
        if (norm(pts[q]) < 4.0) continue;
        const double exact = h.charge / distance(pts[q], h.centroid);
        worst = std::max(worst, std::abs(h.values(t, q) - exact) / exact);
        ++count;
      }
    }
    MESSAGE(to_string(strategy) << ": far-field max relative error " << worst << " over " << count << " points");
    CHECK(count > 0);
    CHECK(worst < 0.05);
  }
}

TEST_CASE("Hartree potential: quadratic Poisson space beats linear on a coarse mesh") {
  // Gaussian charge: phi(r) = erf(r / (s sqrt 2)) / r.
  const double s = 0.7;
  auto density = [s](const Vec3& x) { return std::exp(-dot(x, x) / (2 * s * s)) / std::pow(2 * kPi * s * s, 1.5); };
  auto exact = [s](const Vec3& x) {
    const double r = norm(x);
    return r < 1e-12 ? std::sqrt(2.0 / kPi) / s : std::erf(r / (s * std::sqrt(2.0))) / r;
  };
  auto space = build_space(cube_mesh(Box{{-5, -5, -5}, {5, 5, 5}}, 4, 2), 1);
  auto rho = sample_at_quadrature(*space, density);
  const auto ref = sample_at_quadrature(*space, exact);
  auto rel_l2 = [&](const QuadField& f) {
    double num = 0.0, den = 0.0;
    for (ElementId t = 0; t < static_cast<ElementId>(space->mesh().n_elements()); ++t) {
      const double vol = space->mesh().geometry(t).volume;
      const auto& w = space->volume_rule().weights;
      for (std::size_t q = 0; q < w.size(); ++q) {
        num += vol * w[q] * std::pow(f(t, q) - ref(t, q), 2);
        den += vol * w[q] * std::pow(ref(t, q), 2);
      }
    }
    return std::sqrt(num / den);
  };
  HartreeOptions o1, o2;
  o1.degree = 1;
  const auto h1 = hartree_potential(*space, rho, HartreeStrategy::poisson, o1);
  const auto h2 = hartree_potential(*space, rho, HartreeStrategy::poisson, o2);
  REQUIRE(h1.potential);
  REQUIRE(h2.potential);
  CHECK(h1.potential->space->degree() == 1);
  CHECK(h2.potential->space->degree() == 2);
  const double e1 = rel_l2(h1.values), e2 = rel_l2(h2.values);
  MESSAGE("relative L2 error: degree 1 " << e1 << ", degree 2 " << e2);
  CHECK(e2 < 0.5 * e1);
  CHECK(e2 < 0.03);
}
