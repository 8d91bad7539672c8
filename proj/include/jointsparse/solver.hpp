#pragma once

#include "jointsparse/functionals.hpp"
#include "jointsparse/linop.hpp"
#include "jointsparse/proximity.hpp"

#include <functional>
#include <optional>

namespace jointsparse {

/// Data of one inverse problem: forward map (with ||T|| < 1) and data g.
template <typename Scalar>
struct Problem {
  OperatorPtr<Scalar> op;
  MeasurementData<Scalar> g;
};

/// One thresholded Landweber step u <- U_{v,omega}(u + T*(g - Tu)).
template <typename Scalar>
Coefficients<Scalar> landweber_step(const Coefficients<Scalar>& u, const Weights<Scalar>& v,
                                    const RegularizationParams<Scalar>& p,
                                    const LinearOperator<Scalar>& op,
                                    const MeasurementData<Scalar>& g) {
  auto r = op.apply(u);
  for (std::size_t j = 0; j < r.size(); ++j) r[j] = g[j] - r[j];
  return threshold_block<Scalar>(u + op.adjoint(r), v, p.omega, p.q);
}

/// ||u - landweber_step(u)||_2, zero exactly at the inner fixed point.
template <typename Scalar>
Scalar fixed_point_residual(const Coefficients<Scalar>& u, const Weights<Scalar>& v,
                            const RegularizationParams<Scalar>& p,
                            const LinearOperator<Scalar>& op,
                            const MeasurementData<Scalar>& g) {
  return (landweber_step(u, v, p, op, g) - u).norm();
}

/// Exact minimizer of J(u, .) over v >= 0:
/// v = rho - ||u_lambda||_q / (2 theta) while that is positive, else 0.
template <typename Scalar>
Weights<Scalar> update_v(const Coefficients<Scalar>& u, const Weights<Scalar>& theta,
                         const Weights<Scalar>& rho, ChannelNorm q) {
  if (theta.size() != u.rows() || rho.size() != u.rows())
    detail::violate("update_v: lambda_count mismatch");
  Weights<Scalar> v(u.rows());
  for (Index l = 0; l < u.rows(); ++l) {
    if (!(theta[l] > Scalar(0))) detail::violate("update_v: theta[", l, "] must be > 0");
    const Scalar n = channel_norm(u.row(l), q);
    v[l] = n < Scalar(2) * theta[l] * rho[l]
               ? std::clamp(rho[l] - n / (Scalar(2) * theta[l]), Scalar(0), rho[l])
               : Scalar(0);
  }
  return v;
}

struct InnerBudget {
  Index max_iters = 0;
  double step_tol = 0.0;  ///< stop early once ||u^(m+1) - u^(m)|| < step_tol
};

template <typename Scalar>
struct InnerResult {
  Coefficients<Scalar> u;
  std::vector<InnerRecord<Scalar>> records;
  Index iterations = 0;
};

/// Called after every inner step with (n, m, u^(n,m)).
template <typename Scalar>
using InnerObserver = std::function<void(Index, Index, const Coefficients<Scalar>&)>;

/// Runs landweber_step until the budget or the step tolerance is reached.
/// `outer` only labels the telemetry records.
template <typename Scalar>
InnerResult<Scalar> inner_solve(const Coefficients<Scalar>& u0, const Weights<Scalar>& v,
                                const RegularizationParams<Scalar>& p,
                                const LinearOperator<Scalar>& op,
                                const MeasurementData<Scalar>& g, const InnerBudget& budget,
                                Index outer = 0, const InnerObserver<Scalar>& observer = {}) {
  op.check_input(u0);
  op.check_measurement(g);
  InnerResult<Scalar> res;
  res.u = u0;
  if (budget.max_iters <= 0) return res;

  const Scalar coupling = eval_coupling(v, p);  // constant in the inner loop

  auto tu = op.apply(res.u);
  Scalar prev_step = std::numeric_limits<Scalar>::quiet_NaN();
  for (Index m = 1; m <= budget.max_iters; ++m) {
    MeasurementData<Scalar> r(tu.size());
    for (std::size_t j = 0; j < tu.size(); ++j) r[j] = g[j] - tu[j];
    Coefficients<Scalar> next =
        threshold_block<Scalar>(res.u + op.adjoint(r), v, p.omega, p.q);
    tu = op.apply(next);

    InnerRecord<Scalar> rec;
    rec.outer = outer;
    rec.inner = m;
    rec.step_norm = (next - res.u).norm();
    Scalar disc(0);
    for (std::size_t j = 0; j < tu.size(); ++j) disc += (tu[j] - g[j]).squaredNorm();
    rec.objective_k = disc + eval_psi(next, v, p.omega, p.q);
    rec.objective_j = rec.objective_k + coupling;
    rec.ratio = m > 1 && prev_step > Scalar(0) ? rec.step_norm / prev_step
                                               : std::numeric_limits<Scalar>::quiet_NaN();
    prev_step = rec.step_norm;
    res.records.push_back(rec);
    res.u = std::move(next);
    res.iterations = m;
    if (observer) observer(outer, m, res.u);
    if (rec.step_norm < Scalar(budget.step_tol)) break;
  }
  return res;
}

/// Inner contraction factor alpha = ||I - T*T|| / (1 + gamma).
template <typename Scalar>
struct AlphaRate {
  Scalar value = Scalar(0);
  /// alpha so close to 1 that certified inner budgets become impractical.
  bool budget_risk = false;
};

template <typename Scalar>
AlphaRate<Scalar> rate_alpha(Scalar gamma, Scalar residual_norm) {
  if (!(gamma > Scalar(0))) detail::violate("rate_alpha: gamma must be > 0, got ", gamma);
  if (!(residual_norm >= Scalar(0) && residual_norm <= Scalar(1)))
    detail::violate("rate_alpha: ||I - T*T|| must lie in [0,1], got ", residual_norm);
  AlphaRate<Scalar> a;
  a.value = residual_norm / (Scalar(1) + gamma);
  a.budget_risk = a.value >= Scalar(0.999);
  return a;
}

/// Outer contraction factor
/// beta = sup phi_q / (4 theta omega + 4 theta (1 - ||I - T*T||)).
template <typename Scalar>
Scalar rate_beta(const RegularizationParams<Scalar>& p, Scalar residual_norm) {
  const auto cert = check_strong_rate(p);
  if (!cert.ok)
    detail::violate("rate_beta: theta*omega = ", cert.sigma, " at lambda=", cert.worst_index,
                    " does not exceed phi_q/4 = ", cert.phi_q / Scalar(4));
  if (!(residual_norm >= Scalar(0) && residual_norm <= Scalar(1)))
    detail::violate("rate_beta: ||I - T*T|| must lie in [0,1], got ", residual_norm);
  Scalar beta(0);
  for (Index l = 0; l < p.theta.size(); ++l) {
    const Scalar denom = Scalar(4) * p.theta[l] * p.omega[l] +
                         Scalar(4) * p.theta[l] * (Scalar(1) - residual_norm);
    beta = std::max(beta, cert.phi_q / denom);
  }
  return beta;
}

/// Smallest L >= 0 with alpha^L (1 + beta) + beta <= delta_target.
template <typename Scalar>
Index choose_inner_iters(Scalar alpha, Scalar beta, Scalar delta_target) {
  if (!(alpha >= Scalar(0) && alpha < Scalar(1)))
    detail::violate("choose_inner_iters: alpha = ", alpha,
                    " is not < 1, no finite inner budget certifies contraction");
  if (!(beta >= Scalar(0) && beta < delta_target && delta_target < Scalar(1)))
    detail::violate("choose_inner_iters: need beta < delta < 1, got beta = ", beta,
                    ", delta = ", delta_target);
  const Scalar need = (delta_target - beta) / (Scalar(1) + beta);
  if (alpha == Scalar(0)) return 1;
  Index L = static_cast<Index>(std::ceil(std::log(need) / std::log(alpha)));
  L = std::max<Index>(L, 0);
  // Guard the closed form against rounding at the boundary.
  while (L > 0 && std::pow(alpha, Scalar(L - 1)) * (Scalar(1) + beta) + beta <= delta_target) --L;
  while (std::pow(alpha, Scalar(L)) * (Scalar(1) + beta) + beta > delta_target) ++L;
  return L;
}

template <typename Scalar>
struct Schedule {
  Index n_max = 0;                      ///< outer passes run for n = 0..n_max
  std::optional<Index> inner_iters;     ///< fixed L_n; overrides delta_target
  std::optional<Scalar> delta_target;   ///< certified combined rate
  std::optional<Weights<Scalar>> v0;    ///< defaults to rho
  std::optional<Coefficients<Scalar>> u0;  ///< defaults to zero
  double inner_step_tol = 0.0;
  double outer_tol = 1e-8;
  /// Known ||I - T*T||; estimated by power iteration when absent.
  std::optional<Scalar> residual_norm;
};

template <typename Scalar>
struct Observers {
  InnerObserver<Scalar> inner;
  /// Called with (n, u^(n,0), v^(n)) before each outer pass.
  std::function<void(Index, const Coefficients<Scalar>&, const Weights<Scalar>&)> outer;
};

/// Refuses parameterizations the convergence theory does not cover.
class CertificateFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Alternating minimization of J(u, v): inner thresholded Landweber
/// iterations in u, then the closed-form update of v.
template <typename Scalar>
Solution<Scalar> jointsparse(const Problem<Scalar>& problem,
                             const RegularizationParams<Scalar>& p,
                             const Schedule<Scalar>& schedule,
                             const Observers<Scalar>& observers = {}) {
  if (!problem.op) detail::violate("jointsparse: null operator");
  const auto& op = *problem.op;
  op.check_measurement(problem.g);
  p.validate();
  if (p.lambda_count() != op.lambda_count() || p.channels != op.channels())
    detail::violate("jointsparse: parameters describe ", p.lambda_count(), "x", p.channels,
                    " coefficients, operator expects ", op.lambda_count(), "x",
                    op.channels());
  if (schedule.n_max < 0) detail::violate("jointsparse: n_max must be >= 0");

  const auto convex = check_convexity(p);
  if (!convex.strict) {
    std::ostringstream os;
    os << "J is not certified strictly convex: theta*omega = " << convex.min_product
       << " at lambda=" << convex.worst_index << ", need > kappa/4 = " << convex.kappa / 4;
    throw CertificateFailure(os.str());
  }

  const auto bound = op.declared_norm_bound();
  const Scalar op_norm = bound ? *bound : estimate_norm(op).value;
  if (!(op_norm < Scalar(1))) {
    std::ostringstream os;
    os << "operator norm estimate " << op_norm << " is not < 1; rescale the operator first";
    throw CertificateFailure(os.str());
  }

  Solution<Scalar> sol;
  auto& rates = sol.telemetry.rates;
  Index L = 0;
  if (schedule.inner_iters) {
    L = *schedule.inner_iters;
    if (L < 0) detail::violate("jointsparse: inner iteration count must be >= 0");
  } else {
    rates.residual_norm = schedule.residual_norm
                              ? *schedule.residual_norm
                              : estimate_landweber_residual(op).value;
    const auto strong = check_strong_rate(p);
    if (!strong.ok) {
      std::ostringstream os;
      os << "no certified inner budget: theta*omega = " << strong.sigma << " at lambda="
         << strong.worst_index << ", need > phi_q/4 = " << strong.phi_q / 4;
      throw CertificateFailure(os.str());
    }
    rates.alpha = rate_alpha(p.gamma, rates.residual_norm).value;
    rates.beta = rate_beta(p, rates.residual_norm);
    rates.delta = schedule.delta_target ? *schedule.delta_target
                                        : (Scalar(1) + rates.beta) / Scalar(2);
    L = choose_inner_iters(rates.alpha, rates.beta, rates.delta);
  }
  rates.inner_iters = L;

  Coefficients<Scalar> u = schedule.u0
                               ? *schedule.u0
                               : Coefficients<Scalar>::Zero(op.lambda_count(), op.channels());
  op.check_input(u);
  require_finite(u, "jointsparse: u0");
  Weights<Scalar> v = schedule.v0 ? *schedule.v0 : p.rho;
  if (v.size() != p.lambda_count()) detail::violate("jointsparse: v0 length mismatch");
  for (Index l = 0; l < v.size(); ++l)
    if (!(v[l] >= Scalar(0) && v[l] <= p.rho[l]))
      detail::violate("jointsparse: v0[", l, "] = ", v[l], " outside [0, rho]");

  const InnerBudget budget{L, schedule.inner_step_tol};
  auto outer_record = [&](Index n, Scalar step) {
    const Scalar j = eval_J(u, v, op, problem.g, p);
    return OuterRecord<Scalar>{n, j, j - eval_coupling(v, p), step};
  };
  Scalar outer_step(0);
  Index n = 0;
  for (; n <= schedule.n_max; ++n) {
    sol.telemetry.append(outer_record(n, outer_step));
    if (observers.outer) observers.outer(n, u, v);
    auto inner = inner_solve(u, v, p, op, problem.g, budget, n, observers.inner);
    for (auto& r : inner.records) sol.telemetry.append(r);
    sol.telemetry.inner_iterations += inner.iterations;
    outer_step = (inner.u - u).norm();
    u = std::move(inner.u);
    v = update_v(u, p.theta, p.rho, p.q);
    if (outer_step < Scalar(schedule.outer_tol)) {
      sol.telemetry.stopped_on_tolerance = true;
      ++n;
      break;
    }
  }
  sol.telemetry.append(outer_record(n, outer_step));
  sol.u = std::move(u);
  sol.v = std::move(v);
  return sol;
}

}  // namespace jointsparse
