#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "afem/assembly.hpp"
#include "afem/cli.hpp"

namespace afem {

namespace {

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

AuditCheck eigen_oracle(const std::string& name, const ProblemModel& model, std::array<int, 3> divisions,
                        std::size_t max_dofs, double exact, double tol, bool relative) {
  AdaptOptions o;
  o.initial_divisions = divisions;
  o.degree = 2;
  o.stop.max_dofs = max_dofs;
  AuditCheck c{name, false, ""};
  const ConvergenceHistory h = afem_run(model, o);
  if (h.failed || h.records.empty()) {
    c.detail = "run failed: " + h.failure;
    return c;
  }
  const auto& r = h.records.back();
  const double err = std::abs(r.lambda - exact) / (relative ? exact : 1.0);
  c.passed = err <= tol;
  c.detail = fmt("lambda = %.10f, exact = %.10f, ", r.lambda, exact) +
             fmt(relative ? "relative error %.3e (tol %.0e)" : "abs error %.3e (tol %.0e)", err, tol) +
             ", dofs = " + std::to_string(r.n_dofs);
  return c;
}

AuditCheck local_matrices() {
  AuditCheck c{"local P1/P2 matrices on the reference tetrahedron", true, ""};
  std::vector<Vec3> v{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  Element e;
  e.vertices = {0, 1, 2, 3};
  auto mesh = std::make_shared<const Mesh>(Mesh::from_elements(v, {e}));
  double worst = 0.0;
  {
    auto S = build_space(mesh, 1);
    const auto M = local_mass(*S, 0);
    const auto K = local_stiffness(*S, 0);
    const double kref[4][4] = {{0.5, -1.0 / 6, -1.0 / 6, -1.0 / 6},
                               {-1.0 / 6, 1.0 / 6, 0, 0},
                               {-1.0 / 6, 0, 1.0 / 6, 0},
                               {-1.0 / 6, 0, 0, 1.0 / 6}};
    const auto dofs = S->element_dofs(0);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        // map local index to the vertex each dof sits on
        const Vec3 xi = S->dof_node(dofs[i]), xj = S->dof_node(dofs[j]);
        auto vid = [&](const Vec3& x) {
          for (int k = 0; k < 4; ++k)
            if (distance(x, v[k]) < 1e-14) return k;
          return -1;
        };
        const int a = vid(xi), b = vid(xj);
        worst = std::max(worst, std::abs(M[i * 4 + j] - (a == b ? 1.0 / 60 : 1.0 / 120)));
        worst = std::max(worst, std::abs(K[i * 4 + j] - kref[a][b]));
      }
  }
  {
    auto S = build_space(mesh, 2);
    const auto M = local_mass(*S, 0);
    const auto K = local_stiffness(*S, 0);
    const int n = S->dofs_per_element();
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double row = 0.0, krow = 0.0;
      for (int j = 0; j < n; ++j) {
        row += M[i * n + j];
        krow += K[i * n + j];
        worst = std::max(worst, std::abs(M[i * n + j] - M[j * n + i]));
      }
      total += row;
      // int phi_i = -|T|/20 at vertices, |T|/5 at edge midpoints
      const bool vertex = i < 4;
      worst = std::max(worst, std::abs(row - (vertex ? -1.0 / 120 : 1.0 / 30)));
      worst = std::max(worst, std::abs(krow));
    }
    worst = std::max(worst, std::abs(total - 1.0 / 6));
  }
  c.passed = worst < 1e-13;
  c.detail = fmt("max entry deviation %.2e", worst);
  return c;
}

AuditCheck lda_value() {
  const double rho = 3.0 / (4.0 * std::numbers::pi);
  const double v = eval_vxc(rho);
  return {"LDA exchange-correlation at r_s = 1", std::abs(v - (-0.6777)) <= 1e-3,
          fmt("vxc(3/(4 pi)) = %.6f, reference -0.6777", v)};
}

AuditCheck doerfler_enumeration() {
  AuditCheck c{"Doerfler marking equals exhaustive minimal sets", true, ""};
  const MarkResult four = mark(std::vector<double>{16, 9, 4, 1}, {MarkKind::doerfler, 0.8});
  if (four.elements != std::vector<ElementId>{0, 1}) c.passed = false;
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int trials = 0;
  for (int n = 1; n <= 10; ++n)
    for (int rep = 0; rep < 20; ++rep, ++trials) {
      std::vector<double> eta(n);
      for (double& x : eta) x = u(rng);
      double total = 0.0;
      for (double x : eta) total += x;
      const double theta = 0.3 + 0.6 * u(rng);
      int best = n;
      for (unsigned mask = 1; mask < (1u << n); ++mask) {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
          if (mask & (1u << i)) s += eta[i];
        if (s >= theta * theta * total) best = std::min(best, __builtin_popcount(mask));
      }
      if (static_cast<int>(mark(eta, {MarkKind::doerfler, theta}).elements.size()) != best) c.passed = false;
    }
  c.detail = std::to_string(trials) + " random fields plus the {16,9,4,1} example";
  return c;
}

}  // namespace

bool ValidationReport::all_passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

ValidationReport validate_oracles(std::ostream* log) {
  ValidationReport report;
  auto add = [&](AuditCheck c) {
    if (log) *log << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << std::endl;
    report.checks.push_back(std::move(c));
  };
  const double pi2 = std::numbers::pi * std::numbers::pi;
  add(eigen_oracle("Laplacian eigenvalue on the unit cube (P2)",
                   make_linear_model(0.5, 1.0, nullptr, Box{{0, 0, 0}, {1, 1, 1}}), {2, 2, 2}, 4000, 1.5 * pi2,
                   1e-2, true));
  add(eigen_oracle("harmonic oscillator eigenvalue (P2)",
                   make_gpe_model(0.0, {1.0, 2.0, 4.0}, Box{{-8, -6, -4}, {8, 6, 4}}), {8, 6, 4}, 8000, 3.5, 1e-2,
                   false));
  add(local_matrices());
  add(lda_value());
  add(doerfler_enumeration());
  return report;
}

}  // namespace afem
