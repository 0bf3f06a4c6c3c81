#include "afem/adapt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace afem {

std::string to_string(MarkKind kind) {
  switch (kind) {
    case MarkKind::maximum: return "maximum";
    case MarkKind::doerfler: return "doerfler";
    case MarkKind::equidistribution: return "equidistribution";
  }
  return "unknown";
}

MarkKind parse_mark_kind(const std::string& name) {
  if (name == "maximum") return MarkKind::maximum;
  if (name == "doerfler") return MarkKind::doerfler;
  if (name == "equidistribution") return MarkKind::equidistribution;
  throw DomainError("unknown marking strategy '" + name + "'");
}

void validate(const MarkStrategy& s) {
  if (s.kind != MarkKind::equidistribution && !(s.parameter > 0.0 && s.parameter <= 1.0))
    throw DomainError("marking parameter must lie in (0, 1]");
}

MarkResult mark(std::span<const double> eta_sq, const MarkStrategy& strategy) {
  validate(strategy);
  if (eta_sq.empty()) throw DomainError("cannot mark an empty indicator field");
  MarkResult out;
  std::size_t arg = 0;
  double total = 0.0;
  for (std::size_t i = 0; i < eta_sq.size(); ++i) {
    if (!(std::isfinite(eta_sq[i]) && eta_sq[i] >= 0.0)) throw DomainError("indicators must be finite and nonnegative");
    if (eta_sq[i] > eta_sq[arg]) arg = i;
    total += eta_sq[i];
  }
  if (eta_sq[arg] == 0.0) {
    out.converged = true;
    return out;
  }
  const std::size_t n = eta_sq.size();
  switch (strategy.kind) {
    case MarkKind::maximum: {
      const double cut = strategy.parameter * std::sqrt(eta_sq[arg]);
      for (std::size_t i = 0; i < n; ++i)
        if (std::sqrt(eta_sq[i]) >= cut) out.elements.push_back(static_cast<ElementId>(i));
      break;
    }
    case MarkKind::equidistribution: {
      const double cut = std::sqrt(total) / std::sqrt(static_cast<double>(n));
      for (std::size_t i = 0; i < n; ++i)
        if (std::sqrt(eta_sq[i]) >= cut) out.elements.push_back(static_cast<ElementId>(i));
      break;
    }
    case MarkKind::doerfler: {
      std::vector<ElementId> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](ElementId a, ElementId b) { return eta_sq[a] > eta_sq[b]; });
      const double goal = strategy.parameter * strategy.parameter * total;
      double acc = 0.0;
      for (ElementId t : order) {
        out.elements.push_back(t);
        acc += eta_sq[t];
        if (acc >= goal) break;
      }
      std::sort(out.elements.begin(), out.elements.end());
      break;
    }
  }
  if (!std::binary_search(out.elements.begin(), out.elements.end(), static_cast<ElementId>(arg)))
    out.elements.insert(std::lower_bound(out.elements.begin(), out.elements.end(), static_cast<ElementId>(arg)),
                        static_cast<ElementId>(arg));
  return out;
}

void validate(const AdaptOptions& o) {
  for (int d : o.initial_divisions)
    if (d < 1) throw DomainError("initial divisions must be positive");
  if (o.degree != 1 && o.degree != 2) throw DomainError("degree must be 1 or 2");
  validate(o.strategy);
  if (o.refine.bisections < 1) throw DomainError("refine.bisections must be at least 1");
  if (o.refine.max_depth < 1) throw DomainError("refine.max_depth must be positive");
  validate(o.scf);
  if (!o.stop.any()) throw DomainError("at least one stop criterion (max_dofs, eta_tol, max_iters) is required");
  if (o.stop.max_dofs && *o.stop.max_dofs < 1) throw DomainError("stop.max_dofs must be positive");
  if (o.stop.eta_tol && !(*o.stop.eta_tol > 0.0)) throw DomainError("stop.eta_tol must be positive");
  if (o.stop.max_iters && *o.stop.max_iters < 1) throw DomainError("stop.max_iters must be positive");
}

ConvergenceHistory afem_run(const ProblemModel& model, const AdaptOptions& options) {
  validate(options);
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  ConvergenceHistory history;

  auto mesh = std::make_shared<const Mesh>(Mesh::box(model.domain, options.initial_divisions));
  if (!model.is_linear() && mesh->n_elements() < 100)
    history.warnings.push_back("initial mesh has " + std::to_string(mesh->n_elements()) +
                               " elements; nonlinear models assume a sufficiently fine initial mesh");

  std::optional<FEFunction> previous;
  for (int k = 1;; ++k) {
    auto space = build_space(mesh, options.degree);
    EigenPair sol;
    try {
      if (previous) {
        const FEFunction warm = transfer(*previous, space);
        sol = scf_solve(model, space, options.scf, &warm);
      } else {
        sol = scf_solve(model, space, options.scf);
      }
    } catch (const Error& e) {
      history.failed = true;
      history.failure = e.what();
      history.stop_reason = "failure";
      return history;
    }
    const IndicatorField ind = indicators(model, sol);
    const MarkResult marked = mark(ind, options.strategy);

    IterationRecord rec;
    rec.iteration = k;
    rec.n_dofs = space->n_dofs();
    rec.n_elements = mesh->n_elements();
    rec.energy = sol.energy.total;
    rec.lambda = sol.lambda;
    rec.global_eta = ind.global_eta;
    rec.max_eta = ind.max_eta;
    rec.global_osc = ind.global_osc;
    rec.eq34_defect = sol.eq34_defect;
    for (ElementId t : marked.elements) rec.h_max_marked = std::max(rec.h_max_marked, mesh->geometry(t).diameter);
    rec.n_marked = marked.elements.size();
    rec.scf_iterations = sol.scf_iterations;
    rec.wall_time = std::chrono::duration<double>(clock::now() - start).count();
    history.records.push_back(rec);
    if (options.observer) options.observer(IterationState{history.records.back(), sol, ind, marked.elements});

    const auto& stop = options.stop;
    if (marked.converged)
      history.stop_reason = "converged";
    else if (stop.eta_tol && ind.global_eta <= *stop.eta_tol)
      history.stop_reason = "eta_tol";
    else if (stop.max_dofs && rec.n_dofs >= *stop.max_dofs)
      history.stop_reason = "max_dofs";
    else if (stop.max_iters && k >= *stop.max_iters)
      history.stop_reason = "max_iters";
    if (!history.stop_reason.empty()) {
      history.final_solution = std::move(sol);
      return history;
    }

    try {
      mesh = std::make_shared<const Mesh>(mesh->bisect(marked.elements, options.refine));
    } catch (const Error& e) {
      history.failed = true;
      history.failure = e.what();
      history.stop_reason = "failure";
      history.final_solution = std::move(sol);
      return history;
    }
    previous = std::move(sol.u);
  }
}

}  // namespace afem
