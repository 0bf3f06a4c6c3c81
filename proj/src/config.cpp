#include "afem/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

namespace afem {

using json = nlohmann::json;

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::gpe: return "gpe";
    case ModelKind::tfw_helium: return "tfw_helium";
    case ModelKind::linear: return "linear";
  }
  return "unknown";
}

std::string to_string(LinearPotential potential) {
  switch (potential) {
    case LinearPotential::zero: return "zero";
    case LinearPotential::harmonic: return "harmonic";
    case LinearPotential::coulomb: return "coulomb";
  }
  return "unknown";
}

namespace {

LinearPotential parse_potential(const std::string& s) {
  if (s == "zero") return LinearPotential::zero;
  if (s == "harmonic") return LinearPotential::harmonic;
  if (s == "coulomb") return LinearPotential::coulomb;
  throw DomainError("unknown linear potential '" + s + "'");
}

// Reads one JSON object and rejects keys that were never requested.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw DomainError(where() + " must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& at(const std::string& key) {
    if (!j_.contains(key)) throw DomainError("missing key " + sub(key));
    seen_.insert(key);
    return j_.at(key);
  }

  Reader object(const std::string& key) { return Reader(at(key), sub(key)); }

  double number(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number()) throw DomainError(sub(key) + " must be a number");
    return v.get<double>();
  }

  long long integer(const std::string& key) {
    const json& v = at(key);
    if (v.is_number_integer()) return v.get<long long>();
    if (v.is_number_float() && v.get<double>() == static_cast<double>(static_cast<long long>(v.get<double>())))
      return static_cast<long long>(v.get<double>());
    throw DomainError(sub(key) + " must be an integer");
  }

  std::string string(const std::string& key) {
    const json& v = at(key);
    if (!v.is_string()) throw DomainError(sub(key) + " must be a string");
    return v.get<std::string>();
  }

  Vec3 vec3(const std::string& key) {
    const json& v = at(key);
    if (!v.is_array() || v.size() != 3) throw DomainError(sub(key) + " must be an array of 3 numbers");
    Vec3 out{};
    for (int i = 0; i < 3; ++i) {
      if (!v[i].is_number()) throw DomainError(sub(key) + " must be an array of 3 numbers");
      out[i] = v[i].get<double>();
    }
    return out;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw DomainError("unknown key " + sub(it.key()));
  }

  std::string sub(const std::string& key) const { return path_.empty() ? "'" + key + "'" : "'" + path_ + "." + key + "'"; }

 private:
  std::string where() const { return path_.empty() ? "the document" : "'" + path_ + "'"; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

int to_int(long long v, const std::string& what) {
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    throw DomainError(what + " is out of range");
  return static_cast<int>(v);
}

void read_model(Reader r, ModelConfig& m) {
  int tags = 0;
  if (r.has("gpe")) {
    ++tags;
    m.kind = ModelKind::gpe;
    Reader g = r.object("gpe");
    m.beta = g.number("beta");
    m.gamma = g.vec3("gamma");
    g.finish();
  }
  if (r.has("tfw_helium")) {
    ++tags;
    m.kind = ModelKind::tfw_helium;
    r.object("tfw_helium").finish();
  }
  if (r.has("linear")) {
    ++tags;
    m.kind = ModelKind::linear;
    Reader l = r.object("linear");
    m.potential = parse_potential(l.string("potential"));
    if (l.has("alpha")) m.alpha = l.number("alpha");
    if (l.has("Z")) m.Z = l.number("Z");
    if (l.has("gamma")) m.gamma = l.vec3("gamma");
    l.finish();
  }
  r.finish();
  if (tags != 1) throw DomainError("'model' must hold exactly one of gpe, tfw_helium, linear");
}

}  // namespace

void validate(const AdaptConfig& c) {
  for (int i = 0; i < 3; ++i)
    if (!(c.domain.hi[i] > c.domain.lo[i]) || !std::isfinite(c.domain.lo[i]) || !std::isfinite(c.domain.hi[i]))
      throw DomainError("domain: hi must exceed lo in every direction");
  const auto& m = c.model;
  switch (m.kind) {
    case ModelKind::gpe:
      if (!(m.beta >= 0.0) || !std::isfinite(m.beta)) throw DomainError("model.gpe.beta must be finite and >= 0");
      break;
    case ModelKind::tfw_helium:
      if (!c.domain.contains_strictly({0.0, 0.0, 0.0})) throw DomainError("tfw_helium requires the origin inside the domain");
      break;
    case ModelKind::linear:
      if (!(m.alpha > 0.0) || !std::isfinite(m.alpha)) throw DomainError("model.linear.alpha must be positive");
      if (!(m.Z > 0.0) || !std::isfinite(m.Z)) throw DomainError("model.linear.Z must be positive");
      if (m.potential == LinearPotential::coulomb && !c.domain.contains_strictly({0.0, 0.0, 0.0}))
        throw DomainError("a coulomb potential requires the origin inside the domain");
      break;
  }
  for (double g : m.gamma)
    if (!std::isfinite(g)) throw DomainError("gamma must be finite");
  if (c.output.vtk_every < 0) throw DomainError("output.vtk_every must be >= 0");
  if (!(c.adapt.scf.mixing > 0.0 && c.adapt.scf.mixing <= 1.0)) throw DomainError("scf.mixing must lie in (0, 1]");
  validate(c.adapt);
}

AdaptConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text, nullptr, true, /*ignore_comments=*/false);
  } catch (const json::parse_error& e) {
    throw DomainError(std::string("config is not valid JSON: ") + e.what());
  }
  AdaptConfig c;
  Reader r(doc, "");
  read_model(r.object("model"), c.model);
  {
    Reader d = r.object("domain");
    c.domain.lo = d.vec3("lo");
    c.domain.hi = d.vec3("hi");
    d.finish();
  }
  auto& a = c.adapt;
  if (r.has("initial_divisions")) {
    const json& v = r.at("initial_divisions");
    if (!v.is_array() || v.size() != 3) throw DomainError("'initial_divisions' must be an array of 3 integers");
    for (int i = 0; i < 3; ++i) {
      if (!v[i].is_number_integer()) throw DomainError("'initial_divisions' must be an array of 3 integers");
      a.initial_divisions[i] = to_int(v[i].get<long long>(), "initial_divisions");
    }
  }
  if (r.has("degree")) a.degree = to_int(r.integer("degree"), "degree");
  if (r.has("strategy")) {
    Reader s = r.object("strategy");
    a.strategy.kind = parse_mark_kind(s.string("kind"));
    if (s.has("parameter")) a.strategy.parameter = s.number("parameter");
    s.finish();
  }
  if (r.has("refine")) {
    Reader s = r.object("refine");
    if (s.has("bisections")) a.refine.bisections = to_int(s.integer("bisections"), "refine.bisections");
    if (s.has("max_depth")) a.refine.max_depth = to_int(s.integer("max_depth"), "refine.max_depth");
    s.finish();
  }
  if (r.has("scf")) {
    Reader s = r.object("scf");
    auto& o = a.scf;
    if (s.has("mixing")) o.mixing = s.number("mixing");
    if (s.has("density_tol")) o.density_tol = s.number("density_tol");
    if (s.has("eig_tol")) o.eig_tol = s.number("eig_tol");
    if (s.has("max_iter")) o.max_iter = to_int(s.integer("max_iter"), "scf.max_iter");
    if (s.has("anderson_depth")) o.anderson_depth = to_int(s.integer("anderson_depth"), "scf.anderson_depth");
    if (s.has("eigen_block")) o.eigen_block = to_int(s.integer("eigen_block"), "scf.eigen_block");
    s.finish();
  }
  if (r.has("hartree_strategy")) c.hartree_strategy = parse_hartree_strategy(r.string("hartree_strategy"));
  {
    Reader s = r.object("stop");
    if (s.has("max_dofs")) {
      const long long v = s.integer("max_dofs");
      if (v < 1) throw DomainError("stop.max_dofs must be positive");
      a.stop.max_dofs = static_cast<std::size_t>(v);
    }
    if (s.has("eta_tol")) a.stop.eta_tol = s.number("eta_tol");
    if (s.has("max_iters")) a.stop.max_iters = to_int(s.integer("max_iters"), "stop.max_iters");
    s.finish();
  }
  if (r.has("output")) {
    Reader s = r.object("output");
    if (s.has("dir")) c.output.dir = s.string("dir");
    if (s.has("vtk_every")) c.output.vtk_every = to_int(s.integer("vtk_every"), "output.vtk_every");
    s.finish();
  }
  r.finish();
  validate(c);
  return c;
}

AdaptConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const DomainError& e) {
    throw DomainError(path + ": " + e.what());
  }
}

std::string dump_config(const AdaptConfig& c) {
  json j;
  const auto& m = c.model;
  switch (m.kind) {
    case ModelKind::gpe:
      j["model"]["gpe"] = {{"beta", m.beta}, {"gamma", m.gamma}};
      break;
    case ModelKind::tfw_helium:
      j["model"]["tfw_helium"] = json::object();
      break;
    case ModelKind::linear:
      j["model"]["linear"] = {{"potential", to_string(m.potential)}, {"alpha", m.alpha}, {"Z", m.Z}, {"gamma", m.gamma}};
      break;
  }
  const auto& a = c.adapt;
  j["domain"] = {{"lo", c.domain.lo}, {"hi", c.domain.hi}};
  j["initial_divisions"] = a.initial_divisions;
  j["degree"] = a.degree;
  j["strategy"] = {{"kind", to_string(a.strategy.kind)}, {"parameter", a.strategy.parameter}};
  j["refine"] = {{"bisections", a.refine.bisections}, {"max_depth", a.refine.max_depth}};
  j["scf"] = {{"mixing", a.scf.mixing},         {"density_tol", a.scf.density_tol},
              {"eig_tol", a.scf.eig_tol},       {"max_iter", a.scf.max_iter},
              {"anderson_depth", a.scf.anderson_depth}, {"eigen_block", a.scf.eigen_block}};
  j["hartree_strategy"] = to_string(c.hartree_strategy);
  j["stop"] = json::object();
  if (a.stop.max_dofs) j["stop"]["max_dofs"] = *a.stop.max_dofs;
  if (a.stop.eta_tol) j["stop"]["eta_tol"] = *a.stop.eta_tol;
  if (a.stop.max_iters) j["stop"]["max_iters"] = *a.stop.max_iters;
  j["output"] = {{"dir", c.output.dir}, {"vtk_every", c.output.vtk_every}};
  return j.dump(2);
}

ProblemModel build_model(const AdaptConfig& c) {
  const auto& m = c.model;
  switch (m.kind) {
    case ModelKind::gpe:
      return make_gpe_model(m.beta, m.gamma, c.domain);
    case ModelKind::tfw_helium: {
      ProblemModel model = make_tfw_helium_model(c.domain);
      model.nonlocal.strategy = c.hartree_strategy;
      return model;
    }
    case ModelKind::linear: {
      ScalarField v;
      std::optional<Vec3> nucleus;
      if (m.potential == LinearPotential::harmonic) {
        const Vec3 g2{m.gamma[0] * m.gamma[0], m.gamma[1] * m.gamma[1], m.gamma[2] * m.gamma[2]};
        v = [g2](const Vec3& x) { return 0.5 * (g2[0] * x[0] * x[0] + g2[1] * x[1] * x[1] + g2[2] * x[2] * x[2]); };
      } else if (m.potential == LinearPotential::coulomb) {
        const double z = m.Z;
        v = [z](const Vec3& x) { return -z / norm(x); };
        nucleus = Vec3{0.0, 0.0, 0.0};
      }
      ProblemModel model = make_linear_model(m.alpha, m.Z, v, c.domain, "linear_" + to_string(m.potential));
      model.nucleus = nucleus;
      return model;
    }
  }
  throw DomainError("unknown model kind");
}

}  // namespace afem
