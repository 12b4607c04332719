#pragma once

#include <string>
#include <vector>

#include "incstab/sim.hpp"

namespace incstab {

/// Trace CSV: event-log comment lines, then a header
/// `t,<states...>[,d_<states...>]`, then one `%.17g` row per time point.
std::string trace_csv(const Trace& trace);

/// Distance-series CSV with header `t,dist`.
std::string distance_csv(const DistanceSeries& series);

/// Parsed CSV table; comment lines are skipped.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    [[nodiscard]] int column_index(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path);

/// Write via a temporary file in the same directory plus an atomic rename,
/// so an aborted run leaves no partial artifact behind.
void atomic_write_file(const std::string& path, const std::string& content);

}  // namespace incstab
