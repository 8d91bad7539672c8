#pragma once

#include "jointsparse/core.hpp"

#include <algorithm>
#include <numeric>

namespace jointsparse {

namespace detail {

template <typename Scalar>
Scalar sign(Scalar x) {
  return Scalar((x > Scalar(0)) - (x < Scalar(0)));
}

/// q = inf shrinkage by the sorted clipping scheme. The `n` largest
/// magnitudes are clipped to a common level t; the rest pass through.
template <typename Scalar>
Vector<Scalar> shrink_inf(const Vector<Scalar>& x, Scalar v) {
  const Index m = x.size();
  const Scalar half = v / Scalar(2);
  const Scalar l1 = x.template lpNorm<1>();
  if (l1 <= half) return Vector<Scalar>::Zero(m);

  std::vector<Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Index(0));
  // Ties keep ascending original index.
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return std::abs(x[a]) > std::abs(x[b]);
  });

  Index n = 1;
  Scalar prefix = std::abs(x[order[0]]);  // sum of the first n magnitudes
  for (Index k = 2; k <= m; ++k) {
    const Scalar mag = std::abs(x[order[static_cast<std::size_t>(k - 1)]]);
    if (mag >= (prefix - half) / Scalar(k - 1)) {
      n = k;
      prefix += mag;
    } else {
      break;
    }
  }
  const Scalar level = (prefix - half) / Scalar(n);

  Vector<Scalar> z = x;
  for (Index j = 0; j < n; ++j) {
    const Index i = order[static_cast<std::size_t>(j)];
    z[i] = sign(x[i]) * level;
  }
  return z;
}

}  // namespace detail

/// Euclidean projection of x onto the l_q ball of the given radius.
template <typename Derived>
Vector<typename Derived::Scalar> project_ball(const Eigen::MatrixBase<Derived>& x,
                                              typename Derived::Scalar radius,
                                              ChannelNorm q) {
  using Scalar = typename Derived::Scalar;
  if (!(radius >= Scalar(0)))
    detail::violate("project_ball: radius must be >= 0, got ", radius);
  Vector<Scalar> y = x;
  switch (q) {
    case ChannelNorm::Two: {
      const Scalar nrm = y.norm();
      if (nrm > radius) y *= radius / nrm;
      return y;
    }
    case ChannelNorm::Inf:
      return y.cwiseMax(-radius).cwiseMin(radius);
    case ChannelNorm::One:
      // l1-ball projection is the residual of the q = inf shrinkage.
      return y - detail::shrink_inf<Scalar>(y, Scalar(2) * radius);
  }
  return y;
}

/// Proximity map S_v^(q)(x) = argmin_z ||z - x||_2^2 + v ||z||_q.
///
/// q = 1 is componentwise soft-thresholding at v/2, q = 2 shrinks the
/// vector radially and q = inf clips the largest entries to a common level.
/// All three equal x - project_ball(x, v/2, dual_norm(q)).
template <typename Derived>
Vector<typename Derived::Scalar> shrink(const Eigen::MatrixBase<Derived>& x,
                                        typename Derived::Scalar v,
                                        ChannelNorm q) {
  using Scalar = typename Derived::Scalar;
  if (!(v >= Scalar(0))) detail::violate("shrink: v must be >= 0, got ", v);
  Vector<Scalar> y = x;
  if (v == Scalar(0)) return y;
  const Scalar half = v / Scalar(2);
  switch (q) {
    case ChannelNorm::One:
      for (Index i = 0; i < y.size(); ++i) {
        const Scalar a = std::abs(y[i]);
        y[i] = a <= half ? Scalar(0) : detail::sign(y[i]) * (a - half);
      }
      return y;
    case ChannelNorm::Two: {
      const Scalar nrm = y.norm();
      if (nrm <= half) return Vector<Scalar>::Zero(y.size());
      return ((nrm - half) / nrm) * y;
    }
    case ChannelNorm::Inf:
      return detail::shrink_inf<Scalar>(y, v);
  }
  return y;
}

/// U_{v,omega}^(q): row-wise shrinkage followed by the 1/(1+omega) damping.
template <typename Scalar>
Coefficients<Scalar> threshold_block(const Coefficients<Scalar>& u,
                                     const Weights<Scalar>& v,
                                     const Weights<Scalar>& omega,
                                     ChannelNorm q) {
  if (v.size() != u.rows() || omega.size() != u.rows())
    detail::violate("threshold_block: lambda_count mismatch: u has ", u.rows(),
                    " rows, v has ", v.size(), ", omega has ", omega.size());
  Coefficients<Scalar> out(u.rows(), u.cols());
  for (Index l = 0; l < u.rows(); ++l) {
    if (!(v[l] >= Scalar(0)) || !(omega[l] >= Scalar(0)))
      detail::violate("threshold_block: negative weight at lambda=", l);
    out.row(l) =
        shrink(u.row(l).transpose(), v[l], q).transpose() / (Scalar(1) + omega[l]);
  }
  return out;
}

/// Lipschitz constant of r -> project_ball(x, r, q) in the Euclidean norm.
template <typename Scalar = double>
Scalar radius_lipschitz_constant(ChannelNorm q, Index channels) {
  if (channels < 1) detail::violate("channel count must be >= 1");
  return q == ChannelNorm::Two ? Scalar(1)
                               : std::sqrt(static_cast<Scalar>(channels));
}

}  // namespace jointsparse
