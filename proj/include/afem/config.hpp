#pragma once

#include <optional>
#include <string>

#include "afem/adapt.hpp"

namespace afem {

enum class ModelKind { gpe, tfw_helium, linear };
enum class LinearPotential { zero, harmonic, coulomb };

std::string to_string(ModelKind kind);
std::string to_string(LinearPotential potential);

struct ModelConfig {
  ModelKind kind = ModelKind::gpe;
  double beta = 200.0;      // gpe
  Vec3 gamma{1.0, 2.0, 4.0};  // gpe, linear harmonic
  LinearPotential potential = LinearPotential::zero;  // linear
  double alpha = 0.5;       // linear
  double Z = 1.0;           // linear; coulomb charge is Z as well
};

struct OutputConfig {
  std::string dir = "afem_output";
  int vtk_every = 0;  // 0 disables snapshots
};

/// Complete description of one adaptive run.
struct AdaptConfig {
  ModelConfig model;
  Box domain{{-8.0, -6.0, -4.0}, {8.0, 6.0, 4.0}};
  HartreeStrategy hartree_strategy = HartreeStrategy::poisson;
  AdaptOptions adapt;  // observer is left empty
  OutputConfig output;
};

/// Throws DomainError on out-of-range values or a missing stop criterion.
void validate(const AdaptConfig& config);

/// Parses a JSON document. Unknown keys, wrong types and unknown tags are
/// errors (DomainError); the result is validated.
AdaptConfig parse_config(const std::string& text);
AdaptConfig load_config(const std::string& path);

/// JSON text that parse_config maps back to the same config.
std::string dump_config(const AdaptConfig& config);

ProblemModel build_model(const AdaptConfig& config);

}  // namespace afem
