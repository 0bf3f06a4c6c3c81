#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "afem/cli.hpp"
#include "afem/history.hpp"
#include "afem/vtk.hpp"

namespace afem {

namespace fs = std::filesystem;

namespace {

std::string snapshot_name(int iteration) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "mesh_%04d.vtk", iteration);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

}  // namespace

RunResult run(const AdaptConfig& config, std::ostream* log) {
  validate(config);
  const fs::path dir(config.output.dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());

  RunResult result;
  result.history_path = (dir / "history.csv").string();
  write_text(dir / "config.json", dump_config(config) + "\n");

  const ProblemModel model = build_model(config);
  AdaptOptions options = config.adapt;
  std::vector<IterationRecord> records;
  options.observer = [&](const IterationState& s) {
    records.push_back(s.record);
    write_history_csv(result.history_path, records);
    const int every = config.output.vtk_every;
    if (every > 0 && s.record.iteration % every == 0) {
      const Mesh& mesh = s.solution.u.space->mesh();
      VtkData data;
      data.cell["eta"] = s.indicators.eta();
      std::vector<double> osc(s.indicators.osc_sq.size());
      for (std::size_t t = 0; t < osc.size(); ++t) osc[t] = std::sqrt(s.indicators.osc_sq[t]);
      data.cell["osc"] = std::move(osc);
      std::vector<double> marked(mesh.n_elements(), 0.0);
      for (ElementId t : s.marked) marked[t] = 1.0;
      data.cell["marked"] = std::move(marked);
      data.point["u"] = vertex_values(s.solution.u);
      const std::string path = (dir / snapshot_name(s.record.iteration)).string();
      write_vtk(path, mesh, data);
      result.vtk_files.push_back(path);
    }
    if (log) {
      char line[256];
      std::snprintf(line, sizeof line, "iter %3d  dofs %8zu  E %.10f  lambda %.10f  eta %.4e  scf %d\n",
                    s.record.iteration, s.record.n_dofs, s.record.energy, s.record.lambda, s.record.global_eta,
                    s.record.scf_iterations);
      *log << line << std::flush;
    }
  };

  result.history = afem_run(model, options);
  write_history_csv(result.history_path, result.history.records);
  if (log) {
    for (const auto& w : result.history.warnings) *log << "warning: " << w << '\n';
    *log << "stop: " << result.history.stop_reason;
    if (result.history.failed) *log << " (" << result.history.failure << ")";
    *log << '\n';
  }
  result.exit_code = result.history.failed ? kExitSolverFailure : kExitOk;
  return result;
}

}  // namespace afem
