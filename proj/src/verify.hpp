#pragma once

#include "jointsparse/solver.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace jointsparse::app {

/// shrink against the grid oracle for one q.
struct ProxReport {
  ChannelNorm q = ChannelNorm::Two;
  int triples = 0;
  double max_defect = 0;              ///< max |shrink - brute_prox|_inf
  double max_certificate_defect = 0;  ///< worst subgradient defect of shrink
  bool boundary_hit = false;
};

/// `per_q` seeded (x, v) pairs for each q with M drawn from {1, 2, 3}.
std::vector<ProxReport> check_prox_oracle(std::uint64_t seed, int per_q, double step);

/// Dense random problem with ||T|| scaled to `target`; the residual
/// ||I - T*T|| comes from a dense symmetric eigensolver.
struct RateInstance {
  std::shared_ptr<const LinearOperator<double>> op;
  MeasurementData<double> g;
  double residual = 1;
};

RateInstance make_rate_instance(std::uint64_t seed, Index lambda_count, Index channels,
                                Index rows, double target);

/// Uniform parameters with theta * omega = `product` and omega = gamma.
RegularizationParams<double> rate_params(ChannelNorm q, Index lambda_count, Index channels,
                                         double gamma, double product, double rho);

/// Measured ratios d_{k+1} / d_k against a certified bound.
struct RatioStats {
  int count = 0;
  double bound = 0;
  double worst_ratio = 0;
  bool monotone = true;  ///< outer objective values nonincreasing (1e-12 slack)
  double worst_increase = 0;

  bool holds(double slack) const { return worst_ratio <= bound + slack; }
};

/// Inner loop with v fixed: distances of u^(m) to a long-run fixed point,
/// bound alpha = ||I - T*T|| / (1 + gamma). Per-index omega may exceed gamma.
RatioStats check_inner_rate(const RateInstance& inst, const RegularizationParams<double>& p,
                            const Weights<double>& v, Index steps, double floor);

/// Outer loop with inner solves run to a fixed-point residual below 1e-12,
/// against beta from the exact residual.
RatioStats check_outer_rate(const RateInstance& inst, const RegularizationParams<double>& p,
                            double floor);

/// Outer loop with L from choose_inner_iters at delta = (1 + beta) / 2.
RatioStats check_combined_rate(const RateInstance& inst, const RegularizationParams<double>& p,
                               double floor, Index* inner_iters = nullptr);

struct StationarityReport {
  double v_mismatch = 0;            ///< max |v* - update_v(u*)|
  double fixed_point_residual = 0;  ///< at (u*, v*)
  double certificate_defect = 0;    ///< worst per-index subgradient defect
  bool v_in_range = true;
};

/// Solves to convergence and checks the optimality conditions at the output.
StationarityReport check_stationarity(const RateInstance& inst,
                                      const RegularizationParams<double>& p);

/// Runs the named scopes (prox, rates, stationarity), printing one line per
/// check. Returns true when all pass.
bool run_verify(const std::vector<std::string>& scopes, std::uint64_t seed, std::ostream& out);

}  // namespace jointsparse::app
