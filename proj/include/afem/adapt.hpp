#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "afem/estimator.hpp"

namespace afem {

enum class MarkKind { maximum, doerfler, equidistribution };

std::string to_string(MarkKind kind);
MarkKind parse_mark_kind(const std::string& name);

struct MarkStrategy {
  MarkKind kind = MarkKind::maximum;
  double parameter = 0.5;  // mu for maximum, theta for doerfler, unused otherwise
};

void validate(const MarkStrategy& strategy);

struct MarkResult {
  std::vector<ElementId> elements;  // ascending ids
  bool converged = false;           // every indicator is zero
};

/// Marks elements from squared indicators. Every strategy includes the
/// element of largest indicator (lowest id among ties).
MarkResult mark(std::span<const double> eta_sq, const MarkStrategy& strategy);
inline MarkResult mark(const IndicatorField& ind, const MarkStrategy& strategy) { return mark(ind.eta_sq, strategy); }

struct StopCriteria {
  std::optional<std::size_t> max_dofs;  // stop once a solve has at least this many dofs
  std::optional<double> eta_tol;        // stop once global eta <= eta_tol
  std::optional<int> max_iters;         // stop after this many solves

  bool any() const { return max_dofs || eta_tol || max_iters; }
};

struct IterationRecord {
  int iteration = 0;
  std::size_t n_dofs = 0;
  std::size_t n_elements = 0;
  double energy = 0.0;
  double lambda = 0.0;
  double global_eta = 0.0;
  double max_eta = 0.0;
  double global_osc = 0.0;
  double eq34_defect = 0.0;
  double h_max_marked = 0.0;  // 0 when nothing was marked
  double wall_time = 0.0;     // seconds since the start of the run
  std::size_t n_marked = 0;
  int scf_iterations = 0;
};

/// Everything an observer may inspect after the estimate and mark steps.
struct IterationState {
  const IterationRecord& record;
  const EigenPair& solution;
  const IndicatorField& indicators;
  const std::vector<ElementId>& marked;
};

struct AdaptOptions {
  std::array<int, 3> initial_divisions{4, 4, 4};
  int degree = 1;
  MarkStrategy strategy;
  BisectOptions refine;  // bisections per marked element and closure depth
  ScfOptions scf;
  StopCriteria stop;
  std::function<void(const IterationState&)> observer;
};

struct ConvergenceHistory {
  std::vector<IterationRecord> records;
  bool failed = false;
  std::string failure;      // message of the aborting error
  std::string stop_reason;  // "max_dofs", "eta_tol", "max_iters", "converged" or "failure"
  std::vector<std::string> warnings;
  std::optional<EigenPair> final_solution;
};

void validate(const AdaptOptions& options);

/// Solve, estimate, mark, refine until the first stop criterion holds. An SCF
/// failure ends the loop with the partial history and failed = true.
ConvergenceHistory afem_run(const ProblemModel& model, const AdaptOptions& options);

}  // namespace afem
