#pragma once

#include "jointsparse/core.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace jointsparse::app {

using HeaderLines = std::vector<std::pair<std::string, std::string>>;

/// Shortest round-trip decimal text, independent of the global locale.
/// Non-finite values print as nan, inf or -inf.
std::string format_number(double x);

inline constexpr const char* kTelemetryColumns = "n,m,J,K,step_norm,measured_ratio";

/// Telemetry CSV: optional `# key=value` lines, the header row, then one
/// row per (n, m) in order. Rows with m = 0 hold the objective at the start
/// of outer pass n, with the outer step ||u^(n,0) - u^(n-1,0)|| as step norm.
void write_telemetry_csv(std::ostream& out, const SolverTelemetry<double>& t,
                         const HeaderLines& header = {});

/// Writes a matrix as CSV, one row per line, no header.
void write_matrix_csv(std::ostream& out, const Matrix<double>& m);

/// Opens a file for binary writing (LF line endings), throwing on failure.
std::ofstream open_output(const std::filesystem::path& path);

}  // namespace jointsparse::app
