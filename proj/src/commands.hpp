#pragma once

#include "config.hpp"
#include "image_io.hpp"
#include "synthetic.hpp"
#include "telemetry_io.hpp"

#include <iosfwd>
#include <array>
#include <optional>

namespace jointsparse::app {

/// Exit codes shared by all commands.
enum ExitCode : int { kOk = 0, kFailed = 1, kUsage = 2 };

/// Color recovery from a full-resolution gray image and low-resolution
/// chrominance, solved in the coefficient domain of an orthonormal Haar
/// transform.
struct DemoResult {
  Image reconstruction;
  Solution<double> solution;
  RegularizationParams<double> params;
  HeaderLines header;  ///< settings and derived constants
  /// (n, m, l2 error of I, l2 error of Q), empty without a ground truth.
  std::vector<std::array<double, 4>> errors;
  double operator_scale = 1;
};

DemoResult run_demo(const RunConfig& cfg);

struct SolveResult {
  Solution<double> solution;
  RegularizationParams<double> params;
  HeaderLines header;
  double operator_scale = 1;
  std::optional<double> relative_error;  ///< against the stored truth, if nonzero
};

SolveResult run_solve(const RunConfig& cfg);

MmvSpec mmv_spec(const RunConfig& cfg);

int cmd_gen(const RunConfig& cfg, std::ostream& log);
int cmd_solve(const RunConfig& cfg, std::ostream& log);
int cmd_demo_color(const RunConfig& cfg, std::ostream& log);
int cmd_rates(const RunConfig& cfg, std::ostream& log);
int cmd_verify(const std::vector<std::string>& scopes, std::uint64_t seed, std::ostream& log);

}  // namespace jointsparse::app
