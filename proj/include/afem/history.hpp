#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "afem/adapt.hpp"

namespace afem {

/// Column names of history.csv, in order.
inline constexpr const char* kHistoryHeader =
    "iter,ndofs,nelems,energy,lambda,eta_global,eta_max,osc_global,eq34_defect,hmax_marked,wall_s";

/// One CSV row (no newline); floats with 17 significant digits.
std::string history_row(const IterationRecord& record);

/// Writes header and rows; throws Error with the path on I/O failure.
void write_history_csv(const std::string& path, const std::vector<IterationRecord>& records);
void write_history_csv(std::ostream& out, const std::vector<IterationRecord>& records);

/// Parses a file written by write_history_csv (wall_s included).
std::vector<IterationRecord> read_history_csv(const std::string& path);

}  // namespace afem
