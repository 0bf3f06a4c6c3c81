#include "afem/model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "afem/parallel.hpp"

namespace afem {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kRsMax = 1e12;
const double kCx = std::cbrt(3.0 / kPi);         // (3/pi)^(1/3)
const double kRhoRs1 = 3.0 / (4.0 * kPi);       // density at r_s = 1

// Correlation branches in terms of r_s.
double vc_low(double r) { return 0.0311 * std::log(r) - 0.0584 + 0.0013 * r * std::log(r) - 0.0084 * r; }

double vc_pade(double r) {
  const double s = std::sqrt(r);
  const double d = 1.0 + 1.0529 * s + 0.3334 * r;
  return -(0.1423 + 0.0633 * r + 0.1748 * s) / (d * d);
}

double dvc_low(double r) { return 0.0311 / r + 0.0013 * (std::log(r) + 1.0) - 0.0084; }

double dvc_pade(double r) {
  const double s = std::sqrt(r);
  const double n = 0.1423 + 0.0633 * r + 0.1748 * s;
  const double dn = 0.0633 + 0.0874 / s;
  const double d = 1.0 + 1.0529 * s + 0.3334 * r;
  const double dd = 0.52645 / s + 0.3334;
  return -(dn * d - 2.0 * n * dd) / (d * d * d);
}

// G with dG/drho = vc_low(r_s(rho)), G = rho (A ln r + B + C r ln r + D r).
double vc_low_primitive(double rho) {
  constexpr double A = 0.0311;
  constexpr double B = -0.0584 + 0.0311 / 3.0;
  constexpr double C = 1.5 * 0.0013;
  constexpr double D = (3.0 * -0.0084 + C) / 2.0;
  const double r = wigner_seitz_radius(rho);
  const double l = std::log(r);
  return rho * (A * l + B + C * r * l + D * r);
}

// int_0^s vc_pade for s <= rho(r_s = 1), substituting t = s v^6:
// 6 s int_0^1 vc(r_s(s) / v^2) v^5 dv, smooth in v.
double vc_pade_primitive(double s) {
  static const auto rule = [] {
    std::vector<double> x, w;
    gauss_jacobi01(40, 0.0, x, w);
    return std::make_pair(x, w);
  }();
  if (s <= 0.0) return 0.0;
  const double r = wigner_seitz_radius(s);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.first.size(); ++i) {
    const double v = rule.first[i];
    const double v2 = v * v;
    acc += rule.second[i] * vc_pade(r / v2) * v2 * v2 * v;
  }
  return 6.0 * s * acc;
}

}  // namespace

std::string to_string(HartreeStrategy s) { return s == HartreeStrategy::poisson ? "poisson" : "direct"; }

HartreeStrategy parse_hartree_strategy(const std::string& s) {
  if (s == "poisson") return HartreeStrategy::poisson;
  if (s == "direct") return HartreeStrategy::direct;
  throw DomainError("unknown hartree strategy '" + s + "'");
}

double NonlocalSpec::kernel_value(const Vec3& d) const {
  switch (kernel) {
    case KernelKind::coulomb: return 1.0 / norm(d);
    case KernelKind::custom: return custom_kernel(d);
    default: return 0.0;
  }
}

double ProblemModel::nonlinear_weight(double rho, double phi) const {
  double w = local.vanishes ? 0.0 : local.value(rho);
  if (nonlocal.active()) w += (nonlocal.q == 1.0 ? 1.0 : std::pow(rho, nonlocal.q - 1.0)) * phi;
  return w;
}

double thomas_fermi_constant() { return 0.3 * std::pow(3.0 * kPi * kPi, 2.0 / 3.0); }

double wigner_seitz_radius(double rho) {
  if (!(rho > 0.0)) return kRsMax;
  return std::min(std::cbrt(3.0 / (4.0 * kPi * rho)), kRsMax);
}

double eval_vx(double rho) { return rho > 0.0 ? -kCx * std::cbrt(rho) : 0.0; }

double eval_vc(double rho) {
  if (!(rho > 0.0)) return 0.0;
  const double r = wigner_seitz_radius(rho);
  return r < 1.0 ? vc_low(r) : vc_pade(r);
}

double eval_vxc(double rho) { return eval_vx(rho) + eval_vc(rho); }

double eval_vxc_scaled_derivative(double rho) {
  if (!(rho > 0.0)) return 0.0;
  const double r = wigner_seitz_radius(rho);
  // rho d/drho = -(r/3) d/dr
  const double dvc = r < 1.0 ? dvc_low(r) : dvc_pade(r);
  return eval_vx(rho) / 3.0 - r / 3.0 * dvc;
}

double vxc_antiderivative(double s) {
  if (!(s > 0.0)) return 0.0;
  const double ex = -0.75 * kCx * s * std::cbrt(s);
  double ec;
  if (s <= kRhoRs1) {
    ec = vc_pade_primitive(s);
  } else {
    static const double base = vc_pade_primitive(kRhoRs1) - vc_low_primitive(kRhoRs1);
    ec = base + vc_low_primitive(s);
  }
  return ex + ec;
}

ProblemModel make_gpe_model(double beta, const Vec3& gamma, const Box& box) {
  if (beta < 0.0) throw DomainError("beta must be non-negative");
  ProblemModel m;
  m.name = "gpe";
  m.alpha = 0.5;
  m.Z = 1.0;
  m.domain = box;
  const Vec3 g2{gamma[0] * gamma[0], gamma[1] * gamma[1], gamma[2] * gamma[2]};
  m.potential = [g2](const Vec3& x) { return 0.5 * (g2[0] * x[0] * x[0] + g2[1] * x[1] * x[1] + g2[2] * x[2] * x[2]); };
  auto& n = m.local;
  n.value = [beta](double t) { return beta * t; };
  n.derivative = [beta](double) { return beta; };
  n.scaled_derivative = [beta](double t) { return beta * t; };
  n.antiderivative = [beta](double s) { return 0.5 * beta * s * s; };
  n.vanishes = beta == 0.0;
  n.p = beta > 0.0 ? 2.0 : 0.0;
  n.p1 = beta > 0.0 ? 1.0 : 0.0;
  n.p2 = 0.0;
  n.c1 = 0.5 * beta;
  n.c2 = beta;
  return m;
}

ProblemModel make_tfw_helium_model(const Box& box) {
  if (!box.contains_strictly({0.0, 0.0, 0.0})) throw DomainError("the nucleus (origin) must lie inside the box");
  ProblemModel m;
  m.name = "tfw_helium";
  m.alpha = 0.1;
  m.Z = 2.0;
  m.domain = box;
  m.nucleus = Vec3{0.0, 0.0, 0.0};
  m.potential = [](const Vec3& x) { return -2.0 / norm(x); };
  const double ctf = thomas_fermi_constant();
  auto& n = m.local;
  n.value = [ctf](double t) { return t > 0.0 ? 5.0 / 3.0 * ctf * std::cbrt(t * t) + eval_vxc(t) : 0.0; };
  n.derivative = [ctf](double t) {
    return t > 0.0 ? (10.0 / 9.0 * ctf * std::cbrt(t * t) + eval_vxc_scaled_derivative(t)) / t : 0.0;
  };
  n.scaled_derivative = [ctf](double t) {
    return t > 0.0 ? 10.0 / 9.0 * ctf * std::cbrt(t * t) + eval_vxc_scaled_derivative(t) : 0.0;
  };
  n.antiderivative = [ctf](double s) { return s > 0.0 ? ctf * s * std::cbrt(s * s) + vxc_antiderivative(s) : 0.0; };
  n.p = 5.0 / 3.0;
  n.p1 = 2.0 / 3.0;
  n.p2 = 0.0;
  n.c1 = ctf;
  n.c2 = 5.0 / 3.0 * ctf;
  m.nonlocal.kernel = KernelKind::coulomb;
  m.nonlocal.q = 1.0;
  return m;
}

ProblemModel make_linear_model(double alpha, double Z, ScalarField potential, const Box& box, std::string name) {
  if (!(alpha > 0.0) || !(Z > 0.0)) throw DomainError("alpha and Z must be positive");
  ProblemModel m;
  m.name = std::move(name);
  m.alpha = alpha;
  m.Z = Z;
  m.domain = box;
  m.potential = potential ? std::move(potential) : [](const Vec3&) { return 0.0; };
  auto& n = m.local;
  n.value = [](double) { return 0.0; };
  n.derivative = [](double) { return 0.0; };
  n.scaled_derivative = [](double) { return 0.0; };
  n.antiderivative = [](double) { return 0.0; };
  n.vanishes = true;
  return m;
}

EnergyTerms energy_terms(const ProblemModel& model, const FEFunction& u, const QuadField* phi,
                         const QuadField* v_samples) {
  const auto& space = *u.space;
  if (model.nonlocal.active() && (!phi || !phi->matches(space)))
    throw DomainError("energy of a nonlocal model requires the matching Hartree field");
  const auto& rule = space.volume_rule();
  const auto& mesh = space.mesh();
  const std::size_t ne = mesh.n_elements();
  const std::size_t nq = rule.size();
  const double q = model.nonlocal.q;
  std::vector<std::array<double, 6>> parts(ne);
  parallel_for(ne, [&](std::size_t t) {
    const auto tid = static_cast<ElementId>(t);
    const auto ev = evaluate(u, tid, rule.points);
    const double vol = mesh.geometry(tid).volume;
    std::vector<Vec3> pts;
    if (!v_samples) pts = quadrature_points(space, tid);
    std::array<double, 6> a{};
    for (std::size_t k = 0; k < nq; ++k) {
      const double w = rule.weights[k] * vol;
      const double val = ev.values[k];
      const double rho = val * val;
      const double V = v_samples ? (*v_samples)(t, k) : model.potential(pts[k]);
      a[0] += w * dot(ev.gradients[k], ev.gradients[k]);
      a[1] += w * V * rho;
      if (!model.local.vanishes) {
        a[2] += w * model.local.antiderivative(rho);
        a[3] += w * model.local.value(rho) * rho;
      }
      if (model.nonlocal.active()) a[4] += w * (q == 1.0 ? rho : std::pow(rho, q)) * (*phi)(t, k);
      a[5] += w * rho;
    }
    parts[t] = a;
  });
  std::array<double, 6> s{};
  for (const auto& a : parts)
    for (int i = 0; i < 6; ++i) s[i] += a[i];
  EnergyTerms e;
  e.kinetic = model.alpha * s[0];
  e.potential = s[1];
  e.local = s[2];
  e.local_response = s[3];
  e.hartree = s[4];
  e.mass = s[5];
  e.total = e.kinetic + e.potential + e.local + (model.nonlocal.active() ? e.hartree / (2.0 * q) : 0.0);
  return e;
}

double energy(const ProblemModel& model, const FEFunction& u, const QuadField* phi) {
  return energy_terms(model, u, phi).total;
}

double lambda_from_energy(const ProblemModel& model, const EnergyTerms& t) {
  if (std::abs(t.mass - model.Z) > 1e-8 * model.Z) {
    std::ostringstream os;
    os << "lambda_from_energy: ||u||^2 = " << t.mass << " differs from Z = " << model.Z;
    throw DomainError(os.str());
  }
  const double q = model.nonlocal.q;
  double zl = t.total + t.local_response - t.local;
  if (model.nonlocal.active()) zl += (1.0 - 1.0 / (2.0 * q)) * t.hartree;
  return zl / model.Z;
}

double lambda_from_energy(const ProblemModel& model, const FEFunction& u, double E, const QuadField* phi) {
  auto t = energy_terms(model, u, phi);
  t.total = E;
  return lambda_from_energy(model, t);
}

bool AssumptionReport::all_passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

AssumptionReport audit_assumptions(const ProblemModel& model) {
  AssumptionReport r;
  auto add = [&](std::string name, bool ok, std::string detail) { r.checks.push_back({std::move(name), ok, std::move(detail)}); };
  auto num = [](double x) {
    std::ostringstream os;
    os << x;
    return os.str();
  };
  add("alpha > 0", model.alpha > 0.0, "alpha = " + num(model.alpha));
  add("Z > 0", model.Z > 0.0, "Z = " + num(model.Z));

  // V in L2: finite at sample points away from a declared nucleus.
  bool finite = true;
  const Box& b = model.domain;
  for (int i = 1; i < 8; ++i)
    for (int j = 1; j < 8; ++j)
      for (int k = 1; k < 8; ++k) {
        const Vec3 x{b.lo[0] + (b.hi[0] - b.lo[0]) * (i + 0.37) / 8.5, b.lo[1] + (b.hi[1] - b.lo[1]) * (j + 0.21) / 8.5,
                     b.lo[2] + (b.hi[2] - b.lo[2]) * (k + 0.13) / 8.5};
        finite = finite && std::isfinite(model.potential(x));
      }
  add("(i) V in L2", finite,
      model.nucleus ? "finite at samples; Coulomb singularity is square integrable in 3D" : "finite at samples");

  const auto& n = model.local;
  const bool e_ok = n.vanishes || n.c1 > 0.0 || (n.p >= 0.0 && n.p <= 4.0 / 3.0);
  add("(ii) E growth", e_ok, "p = " + num(n.p) + ", c1 = " + num(n.c1));
  add("(iii) p1 in [0,2)", n.p1 >= 0.0 && n.p1 < 2.0, "p1 = " + num(n.p1));
  add("(iii) p2 in [0,1)", n.p2 >= 0.0 && n.p2 < 1.0, "p2 = " + num(n.p2));

  if (model.nonlocal.active()) {
    const double q = model.nonlocal.q;
    add("(iv) q in [1,3/2)", q >= 1.0 && q < 1.5, "q = " + num(q));
    bool nonneg = true, even = true;
    for (int i = 0; i < 64; ++i) {
      const Vec3 d{std::sin(1.3 * i + 0.2) * (1 + i % 5), std::cos(0.7 * i) * (1 + i % 3), 0.1 + 0.05 * i};
      const double k1 = model.nonlocal.kernel_value(d);
      const double k2 = model.nonlocal.kernel_value(-1.0 * d);
      nonneg = nonneg && k1 >= 0.0;
      even = even && std::abs(k1 - k2) <= 1e-12 * std::abs(k1);
    }
    add("(iv) K nonnegative and even", nonneg && even, "64 sampled offsets");
  }
  add("condition on inf |grad u|^2 / |u|^2p", true, "assumed, not verified");
  return r;
}

}  // namespace afem
