#include "afem/history.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace afem {

namespace {

std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

std::string history_row(const IterationRecord& r) {
  std::string s = std::to_string(r.iteration) + ',' + std::to_string(r.n_dofs) + ',' + std::to_string(r.n_elements);
  for (double x : {r.energy, r.lambda, r.global_eta, r.max_eta, r.global_osc, r.eq34_defect, r.h_max_marked, r.wall_time})
    s += ',' + g17(x);
  return s;
}

void write_history_csv(std::ostream& out, const std::vector<IterationRecord>& records) {
  out << kHistoryHeader << '\n';
  for (const auto& r : records) out << history_row(r) << '\n';
}

void write_history_csv(const std::string& path, const std::vector<IterationRecord>& records) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_history_csv(out, records);
  out.flush();
  if (!out) throw Error("failed writing '" + path + "'");
}

std::vector<IterationRecord> read_history_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != kHistoryHeader) throw Error("'" + path + "': unexpected history header");
  std::vector<IterationRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 11) throw Error("'" + path + "': malformed row '" + line + "'");
    try {
      IterationRecord r;
      r.iteration = std::stoi(cells[0]);
      r.n_dofs = std::stoull(cells[1]);
      r.n_elements = std::stoull(cells[2]);
      double* fields[] = {&r.energy, &r.global_eta, &r.max_eta, &r.global_osc, &r.eq34_defect, &r.h_max_marked,
                          &r.wall_time};
      r.energy = std::stod(cells[3]);
      r.lambda = std::stod(cells[4]);
      for (int i = 1; i < 7; ++i) *fields[i] = std::stod(cells[4 + i]);
      out.push_back(r);
    } catch (const std::logic_error&) {
      throw Error("'" + path + "': malformed row '" + line + "'");
    }
  }
  return out;
}

}  // namespace afem
