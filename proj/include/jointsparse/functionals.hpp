#pragma once

#include "jointsparse/core.hpp"
#include "jointsparse/linop.hpp"

namespace jointsparse {

/// ||Tu - g||^2 summed over the measurement blocks.
template <typename Scalar>
Scalar eval_discrepancy(const LinearOperator<Scalar>& op, const Coefficients<Scalar>& u,
                        const MeasurementData<Scalar>& g) {
  op.check_measurement(g);
  const auto tu = op.apply(u);
  Scalar s(0);
  for (std::size_t j = 0; j < tu.size(); ++j) s += (tu[j] - g[j]).squaredNorm();
  return s;
}

/// Phi_lambda(x, y) = y ||x||_q + omega ||x||_2^2 + theta (rho - y)^2.
/// Returns +inf for y < 0.
template <typename Scalar, typename Derived>
Scalar eval_phi_row(const Eigen::MatrixBase<Derived>& x, Scalar y,
                    const RegularizationParams<Scalar>& p, Index lambda) {
  if (y < Scalar(0)) return std::numeric_limits<Scalar>::infinity();
  const Scalar d = p.rho[lambda] - y;
  return y * channel_norm(x, p.q) + p.omega[lambda] * x.squaredNorm() +
         p.theta[lambda] * d * d;
}

/// Joint sparsity measure Phi^(q)(u, v); decouples over lambda.
template <typename Scalar>
Scalar eval_phi(const Coefficients<Scalar>& u, const Weights<Scalar>& v,
                const RegularizationParams<Scalar>& p) {
  if (v.size() != u.rows() || p.lambda_count() != u.rows())
    detail::violate("eval_phi: lambda_count mismatch (u ", u.rows(), ", v ", v.size(),
                    ", params ", p.lambda_count(), ")");
  Scalar s(0);
  for (Index l = 0; l < u.rows(); ++l) s += eval_phi_row(u.row(l), v[l], p, l);
  return s;
}

/// J(u, v) = ||Tu - g||^2 + Phi^(q)(u, v), +inf outside v >= 0.
template <typename Scalar>
Scalar eval_J(const Coefficients<Scalar>& u, const Weights<Scalar>& v,
              const LinearOperator<Scalar>& op, const MeasurementData<Scalar>& g,
              const RegularizationParams<Scalar>& p) {
  const Scalar phi = eval_phi(u, v, p);
  if (std::isinf(phi)) return phi;
  return eval_discrepancy(op, u, g) + phi;
}

/// Psi(u) = sum v ||u_lambda||_q + sum omega ||u_lambda||_2^2.
template <typename Scalar>
Scalar eval_psi(const Coefficients<Scalar>& u, const Weights<Scalar>& v,
                const Weights<Scalar>& omega, ChannelNorm q) {
  if (v.size() != u.rows() || omega.size() != u.rows())
    detail::violate("eval_psi: lambda_count mismatch");
  Scalar s(0);
  for (Index l = 0; l < u.rows(); ++l)
    s += v[l] * channel_norm(u.row(l), q) + omega[l] * u.row(l).squaredNorm();
  return s;
}

/// Coupling term sum theta (rho - v)^2, the part of J that K omits.
template <typename Scalar>
Scalar eval_coupling(const Weights<Scalar>& v, const RegularizationParams<Scalar>& p) {
  if (v.size() != p.lambda_count()) detail::violate("eval_coupling: lambda_count mismatch");
  Scalar s(0);
  for (Index l = 0; l < v.size(); ++l) {
    const Scalar d = p.rho[l] - v[l];
    s += p.theta[l] * d * d;
  }
  return s;
}

/// Inner objective K(u) = ||Tu - g||^2 + Psi(u) for fixed v.
template <typename Scalar>
Scalar eval_K(const Coefficients<Scalar>& u, const LinearOperator<Scalar>& op,
              const MeasurementData<Scalar>& g, const Weights<Scalar>& v,
              const Weights<Scalar>& omega, ChannelNorm q) {
  return eval_discrepancy(op, u, g) + eval_psi(u, v, omega, q);
}

/// Constant kappa with Phi^(q) convex iff omega * theta >= kappa / 4.
template <typename Scalar = double>
Scalar convexity_kappa(ChannelNorm q, Index channels) {
  return q == ChannelNorm::One ? static_cast<Scalar>(channels) : Scalar(1);
}

/// Constant phi_q of the outer contraction bound.
template <typename Scalar = double>
Scalar rate_phi(ChannelNorm q, Index channels) {
  switch (q) {
    case ChannelNorm::One: return static_cast<Scalar>(channels);
    case ChannelNorm::Two: return Scalar(1);
    case ChannelNorm::Inf: return std::sqrt(static_cast<Scalar>(channels));
  }
  return Scalar(1);
}

template <typename Scalar>
struct ConvexityCertificate {
  bool convex = false;
  bool strict = false;
  Scalar kappa = Scalar(0);
  Scalar min_product = Scalar(0);  ///< inf over lambda of omega * theta
  Index worst_index = 0;

  /// Phi's convexity is an equivalence; for J it is a sufficient condition.
  bool j_sufficient_condition() const { return convex; }
};

template <typename Scalar>
struct StrongRateCertificate {
  bool ok = false;
  Scalar sigma = Scalar(0);
  Scalar phi_q = Scalar(0);
  Index worst_index = 0;
};

namespace detail {

template <typename Scalar>
std::pair<Scalar, Index> min_theta_omega(const RegularizationParams<Scalar>& p) {
  if (p.theta.size() < 1 || p.omega.size() != p.theta.size())
    violate("regularization weights are empty or mismatched");
  Index worst = 0;
  Scalar best = std::numeric_limits<Scalar>::infinity();
  for (Index l = 0; l < p.theta.size(); ++l) {
    const Scalar prod = p.theta[l] * p.omega[l];
    if (prod < best) {
      best = prod;
      worst = l;
    }
  }
  return {best, worst};
}

}  // namespace detail

template <typename Scalar>
ConvexityCertificate<Scalar> check_convexity(const RegularizationParams<Scalar>& p) {
  ConvexityCertificate<Scalar> c;
  c.kappa = convexity_kappa<Scalar>(p.q, p.channels);
  std::tie(c.min_product, c.worst_index) = detail::min_theta_omega(p);
  c.convex = c.min_product >= c.kappa / Scalar(4);
  c.strict = c.min_product > c.kappa / Scalar(4);
  return c;
}

template <typename Scalar>
StrongRateCertificate<Scalar> check_strong_rate(const RegularizationParams<Scalar>& p) {
  StrongRateCertificate<Scalar> c;
  c.phi_q = rate_phi<Scalar>(p.q, p.channels);
  std::tie(c.sigma, c.worst_index) = detail::min_theta_omega(p);
  c.ok = c.sigma > c.phi_q / Scalar(4);
  return c;
}

}  // namespace jointsparse
