#include <doctest.h>

#include "afem/config.hpp"

using namespace afem;

#ifndef AFEM_CONFIG_DIR
#error "AFEM_CONFIG_DIR must point at the presets"
#endif

namespace {

const char* kMinimal = R"({
  "model": {"linear": {"potential": "zero"}},
  "domain": {"lo": [0, 0, 0], "hi": [1, 1, 1]},
  "stop": {"max_iters": 3}
})";

std::string with(const std::string& from, const std::string& to) {
  std::string s = kMinimal;
  const auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

}  // namespace

TEST_CASE("Example 1 preset") {
  const AdaptConfig c = load_config(std::string(AFEM_CONFIG_DIR) + "/example1_gpe.json");
  CHECK(c.model.kind == ModelKind::gpe);
  CHECK(c.model.beta == 200.0);
  CHECK(c.model.gamma == Vec3{1.0, 2.0, 4.0});
  CHECK(c.domain.lo == Vec3{-8.0, -6.0, -4.0});
  CHECK(c.domain.hi == Vec3{8.0, 6.0, 4.0});
  const ProblemModel m = build_model(c);
  CHECK(m.alpha == 0.5);
  CHECK(m.Z == 1.0);
  CHECK(m.potential({1.0, 1.0, 1.0}) == doctest::Approx(0.5 * (1 + 4 + 16)));
}

TEST_CASE("Example 2 preset") {
  const AdaptConfig c = load_config(std::string(AFEM_CONFIG_DIR) + "/example2_tfw_helium.json");
  const ProblemModel m = build_model(c);
  CHECK(m.alpha == doctest::Approx(0.1));
  CHECK(m.Z == 2.0);
  CHECK(c.domain.lo == Vec3{-5.0, -5.0, -5.0});
  CHECK(c.domain.hi == Vec3{5.0, 5.0, 5.0});
  CHECK(m.nonlocal.active());
  CHECK(m.nonlocal.strategy == HartreeStrategy::poisson);
}

TEST_CASE("all presets parse") {
  for (const char* name : {"linear_laplacian.json", "harmonic_oscillator.json"}) {
    const AdaptConfig c = load_config(std::string(AFEM_CONFIG_DIR) + "/" + name);
    CHECK(build_model(c).is_linear());
  }
}

TEST_CASE("minimal config and defaults") {
  const AdaptConfig c = parse_config(kMinimal);
  CHECK(c.model.kind == ModelKind::linear);
  CHECK(c.adapt.stop.max_iters == 3);
  CHECK(c.adapt.degree == 1);
  CHECK(c.adapt.refine.bisections == 1);
  CHECK(c.output.vtk_every == 0);
}

TEST_CASE("strict parsing rejects bad documents") {
  CHECK_THROWS_AS(parse_config(with(R"("stop": {"max_iters": 3})", R"("stop": {})")), DomainError);
  CHECK_THROWS_AS(parse_config(with(R"("stop": {"max_iters": 3})", R"("stop": {"max_iters": 3}, "extra": 1)")),
                  DomainError);
  CHECK_THROWS_AS(parse_config(with(R"("potential": "zero")", R"("potential": "zero", "betta": 1)")), DomainError);
  CHECK_THROWS_AS(parse_config(with(R"("potential": "zero")", R"("potential": "yukawa")")), DomainError);
  CHECK_THROWS_AS(parse_config(with(R"({"linear": {"potential": "zero"}})", R"({"dft": {}})")), DomainError);
  CHECK_THROWS_AS(parse_config(with(R"({"linear": {"potential": "zero"}})",
                                    R"({"linear": {"potential": "zero"}, "tfw_helium": {}})")),
                  DomainError);
  CHECK_THROWS_AS(parse_config(with(R"("stop")", R"("degree": 3, "stop")")), DomainError);
  CHECK_THROWS_AS(parse_config(with(R"("stop")", R"("degree": "1", "stop")")), DomainError);
  CHECK_THROWS_AS(parse_config(with(R"("stop")", R"("strategy": {"kind": "maximum", "parameter": 1.5}, "stop")")),
                  DomainError);
  CHECK_THROWS_AS(parse_config(with(R"("stop")", R"("strategy": {"kind": "bulk"}, "stop")")), DomainError);
  CHECK_THROWS_AS(parse_config(with(R"("stop")", R"("scf": {"mixing": 0}, "stop")")), DomainError);
  CHECK_THROWS_AS(parse_config(with(R"("stop")", R"("hartree_strategy": "fft", "stop")")), DomainError);
  CHECK_THROWS_AS(parse_config(with(R"("hi": [1, 1, 1])", R"("hi": [1, 0, 1])")), DomainError);
  CHECK_THROWS_AS(parse_config(with(R"("stop": {"max_iters": 3})", R"("stop": {"max_dofs": -5})")), DomainError);
  CHECK_THROWS_AS(parse_config("{not json"), DomainError);
  CHECK_THROWS_AS(parse_config(with(R"("potential": "zero")", R"("potential": "coulomb")")), DomainError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), Error);
}

TEST_CASE("dump and parse round trip") {
  AdaptConfig c = load_config(std::string(AFEM_CONFIG_DIR) + "/example2_tfw_helium.json");
  c.hartree_strategy = HartreeStrategy::direct;
  c.adapt.stop.eta_tol = 0.25;
  c.adapt.refine.bisections = 2;
  const AdaptConfig d = parse_config(dump_config(c));
  CHECK(dump_config(d) == dump_config(c));
  CHECK(d.hartree_strategy == HartreeStrategy::direct);
  CHECK(d.adapt.refine.bisections == 2);
  CHECK(*d.adapt.stop.eta_tol == 0.25);
}
