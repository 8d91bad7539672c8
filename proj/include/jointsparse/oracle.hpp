#pragma once

// Independent reference computations used to check the closed forms:
// exhaustive grid minimizers, subgradient optimality certificates,
// dense singular values and convexity witnesses. None of these call into
// proximity.hpp or solver.hpp.

#include "jointsparse/core.hpp"
#include "jointsparse/linop.hpp"

#include <Eigen/SVD>

#include <array>

namespace jointsparse::oracle {

template <typename Scalar>
struct GridResult {
  Vector<Scalar> z;
  Scalar objective = Scalar(0);
  bool on_boundary = false;
  Index evaluations = 0;
};

namespace detail {

/// Exhaustive scan of the lattice points step * (lo[d] + i * stride),
/// i < count[d], over at most 3 axes. Ties keep the first point in scan
/// order. `best` holds lattice indices.
template <typename Scalar, typename F>
void scan_lattice(const std::array<Index, 3>& lo, const std::array<Index, 3>& count, Index stride,
                  Scalar step, Index dims, const F& f, std::array<Index, 3>& best,
                  Scalar& best_value, Index& evals) {
  Vector<Scalar> z(dims);
  const Index c0 = count[0], c1 = dims > 1 ? count[1] : 1, c2 = dims > 2 ? count[2] : 1;
  for (Index i = 0; i < c0; ++i) {
    const Index a = lo[0] + i * stride;
    z[0] = Scalar(a) * step;
    for (Index j = 0; j < c1; ++j) {
      const Index b = dims > 1 ? lo[1] + j * stride : 0;
      if (dims > 1) z[1] = Scalar(b) * step;
      for (Index k = 0; k < c2; ++k) {
        const Index c = dims > 2 ? lo[2] + k * stride : 0;
        if (dims > 2) z[2] = Scalar(c) * step;
        const Scalar val = f(z);
        ++evals;
        if (val < best_value) {
          best_value = val;
          best = {a, b, c};
        }
      }
    }
  }
}

template <typename Scalar>
Scalar norm_q(const Vector<Scalar>& z, ChannelNorm q) {
  switch (q) {
    case ChannelNorm::One: return z.cwiseAbs().sum();
    case ChannelNorm::Two: return std::sqrt(z.squaredNorm());
    case ChannelNorm::Inf: return z.cwiseAbs().maxCoeff();
  }
  return Scalar(0);
}

}  // namespace detail

/// Grid minimizer of ||z - x||_2^2 + v ||z||_q over [-h, h]^M, M <= 3.
///
/// The lattice is step * Z^M, so the origin (where the objective has its
/// kink) is always a candidate. Small grids (<= 1e6 points) are scanned in
/// full. Larger ones are scanned coarse-to-fine: each level scans a window
/// of +-4 coarse steps around the previous winner at half the step, down
/// to `step`.
template <typename Scalar>
GridResult<Scalar> brute_prox(const Vector<Scalar>& x, Scalar v, ChannelNorm q,
                              Scalar box_halfwidth, Scalar step) {
  const Index dims = x.size();
  if (dims < 1 || dims > 3) jointsparse::detail::violate("brute_prox supports 1 <= M <= 3, got ", dims);
  if (!(step > Scalar(0)) || !(box_halfwidth > Scalar(0)))
    jointsparse::detail::violate("brute_prox: step and box must be positive");
  auto f = [&](const Vector<Scalar>& z) {
    return (z - x).squaredNorm() + v * detail::norm_q(z, q);
  };

  GridResult<Scalar> res;
  // Lattice step * k, |k| <= K, always containing the origin.
  const Index K = static_cast<Index>(std::ceil(box_halfwidth / step - 1e-9));
  Scalar best_value = std::numeric_limits<Scalar>::infinity();
  std::array<Index, 3> best{0, 0, 0};
  Index stride = 1;
  while (2 * K / stride > 64) stride *= 2;
  if (std::pow(double(2 * K + 1), double(dims)) <= 1e6) stride = 1;
  {
    const Index k0 = K / stride;
    const std::array<Index, 3> lo{-k0 * stride, -k0 * stride, -k0 * stride};
    const std::array<Index, 3> count{2 * k0 + 1, 2 * k0 + 1, 2 * k0 + 1};
    detail::scan_lattice<Scalar>(lo, count, stride, step, dims, f, best, best_value,
                                 res.evaluations);
  }
  while (stride > 1) {
    const Index coarse = stride;
    stride /= 2;
    std::array<Index, 3> lo{}, count{1, 1, 1};
    for (Index d = 0; d < dims; ++d) {
      const auto sd = static_cast<std::size_t>(d);
      Index a = std::max(-K, best[sd] - 4 * coarse);
      Index b = std::min(K, best[sd] + 4 * coarse);
      // Snap to multiples of the new stride.
      a = a >= 0 ? (a + stride - 1) / stride * stride : -((-a) / stride * stride);
      b = b >= 0 ? b / stride * stride : -((-b + stride - 1) / stride * stride);
      lo[sd] = a;
      count[sd] = (b - a) / stride + 1;
    }
    detail::scan_lattice<Scalar>(lo, count, stride, step, dims, f, best, best_value,
                                 res.evaluations);
  }
  Vector<Scalar> zbest(dims);
  bool boundary = false;
  for (Index d = 0; d < dims; ++d) {
    zbest[d] = Scalar(best[static_cast<std::size_t>(d)]) * step;
    boundary = boundary || std::abs(best[static_cast<std::size_t>(d)]) >= K;
  }
  res.z = zbest;
  res.objective = best_value;
  res.on_boundary = boundary;
  return res;
}

/// Default box for brute_prox: 1.5 ||x||_inf + 1.
template <typename Scalar>
Scalar default_halfwidth(const Vector<Scalar>& x) {
  return Scalar(1.5) * (x.size() ? x.cwiseAbs().maxCoeff() : Scalar(0)) + Scalar(1);
}

template <typename Scalar>
struct Certificate {
  bool valid = false;
  Scalar defect = Scalar(0);
};

/// Checks 2(x - z)/v ∈ ∂||.||_q(z) through the dual description
/// ||xi||_{q'} <= 1 and <xi, z> = ||z||_q.
template <typename Scalar>
Certificate<Scalar> subgradient_certificate(const Vector<Scalar>& z, const Vector<Scalar>& x,
                                            Scalar v, ChannelNorm q, Scalar tol = Scalar(1e-9)) {
  if (!(v > Scalar(0))) jointsparse::detail::violate("subgradient_certificate needs v > 0");
  if (z.size() != x.size()) jointsparse::detail::violate("subgradient_certificate: size mismatch");
  const Vector<Scalar> xi = Scalar(2) * (x - z) / v;
  const ChannelNorm dual = q == ChannelNorm::One ? ChannelNorm::Inf
                           : q == ChannelNorm::Inf ? ChannelNorm::One
                                                   : ChannelNorm::Two;
  Scalar defect = std::max(Scalar(0), detail::norm_q(xi, dual) - Scalar(1));
  if (z.cwiseAbs().maxCoeff() > Scalar(0))
    defect = std::max(defect, std::abs(detail::norm_q(z, q) - xi.dot(z)));
  return {defect <= tol, defect};
}

/// Dense matrix of a joint operator, columns indexed by lambda * M + l.
template <typename Scalar>
Matrix<Scalar> dense_matrix(const LinearOperator<Scalar>& op) {
  const Index n = op.lambda_count() * op.channels();
  Index rows = 0;
  for (Index s : op.block_sizes()) rows += s;
  Matrix<Scalar> a(rows, n);
  for (Index c = 0; c < n; ++c) {
    Coefficients<Scalar> e = Coefficients<Scalar>::Zero(op.lambda_count(), op.channels());
    e.data()[c] = Scalar(1);
    const auto col = op.apply(e);
    Index r = 0;
    for (const auto& b : col) {
      a.col(c).segment(r, b.size()) = b;
      r += b.size();
    }
  }
  return a;
}

/// Largest singular value, via Eigen's Jacobi SVD.
template <typename Scalar>
Scalar dense_svd_norm(const Matrix<Scalar>& a) {
  if (a.rows() > 200 || a.cols() > 200)
    jointsparse::detail::violate("dense_svd_norm is limited to 200x200, got ", a.rows(), "x",
                                 a.cols());
  if (a.size() == 0) return Scalar(0);
  Eigen::JacobiSVD<Matrix<Scalar>> svd(a);
  return svd.singularValues()(0);
}

struct JointGridSpec {
  double u_halfwidth = 2.0;
  double u_step = 1e-3;
  double v_step = 1e-3;
};

template <typename Scalar>
struct JointGridResult {
  Coefficients<Scalar> u;
  Weights<Scalar> v;
  Scalar objective = Scalar(0);
  bool on_boundary = false;
};

/// Exhaustive minimizer of J over u ∈ [-h, h]^{|Lambda| M}, v ∈ [0, rho]
/// for problems with at most three unknowns in total. J is evaluated from
/// its definition on the dense matrix of T.
template <typename Scalar>
JointGridResult<Scalar> grid_joint_minimizer(const LinearOperator<Scalar>& op,
                                             const MeasurementData<Scalar>& g,
                                             const RegularizationParams<Scalar>& p,
                                             const JointGridSpec& spec) {
  const Index nl = op.lambda_count(), m = op.channels();
  const Index dims = nl * m + nl;
  if (dims > 3) jointsparse::detail::violate("grid_joint_minimizer handles at most 3 unknowns");
  const Matrix<Scalar> a = dense_matrix(op);
  Vector<Scalar> gflat(a.rows());
  {
    Index r = 0;
    for (const auto& b : g) {
      gflat.segment(r, b.size()) = b;
      r += b.size();
    }
  }

  std::array<Scalar, 3> lo{};
  std::array<Index, 3> count{1, 1, 1};
  std::array<Scalar, 3> step{};
  for (Index d = 0; d < dims; ++d) {
    const bool is_u = d < nl * m;
    const Scalar h = is_u ? Scalar(spec.u_step) : Scalar(spec.v_step);
    const Scalar a0 = is_u ? Scalar(-spec.u_halfwidth) : Scalar(0);
    const Scalar b0 = is_u ? Scalar(spec.u_halfwidth) : p.rho[d - nl * m];
    lo[static_cast<std::size_t>(d)] = a0;
    step[static_cast<std::size_t>(d)] = h;
    count[static_cast<std::size_t>(d)] = static_cast<Index>(std::floor((b0 - a0) / h + 1e-9)) + 1;
  }
  double total = 1;
  for (Index d = 0; d < dims; ++d) total *= double(count[static_cast<std::size_t>(d)]);
  if (total > 1e7) jointsparse::detail::violate("grid_joint_minimizer: grid exceeds 1e7 points");

  auto objective = [&](const Vector<Scalar>& z) {
    const Vector<Scalar> uflat = z.head(nl * m);
    Scalar val = (a * uflat - gflat).squaredNorm();
    for (Index l = 0; l < nl; ++l) {
      const Vector<Scalar> row = uflat.segment(l * m, m);
      const Scalar y = z[nl * m + l];
      const Scalar d = p.rho[l] - y;
      val += y * detail::norm_q(row, p.q) + p.omega[l] * row.squaredNorm() +
             p.theta[l] * d * d;
    }
    return val;
  };

  Vector<Scalar> z(dims), best(dims);
  Scalar best_value = std::numeric_limits<Scalar>::infinity();
  for (Index i = 0; i < count[0]; ++i) {
    z[0] = lo[0] + Scalar(i) * step[0];
    for (Index j = 0; j < count[1]; ++j) {
      if (dims > 1) z[1] = lo[1] + Scalar(j) * step[1];
      for (Index k = 0; k < count[2]; ++k) {
        if (dims > 2) z[2] = lo[2] + Scalar(k) * step[2];
        const Scalar val = objective(z);
        if (val < best_value) {
          best_value = val;
          best = z;
        }
      }
    }
  }

  JointGridResult<Scalar> res;
  res.u = Eigen::Map<const Coefficients<Scalar>>(best.data(), nl, m);
  res.v = best.tail(nl);
  res.objective = best_value;
  for (Index d = 0; d < nl * m; ++d)
    if (std::abs(best[d]) >= Scalar(spec.u_halfwidth) - Scalar(spec.u_step) / 2)
      res.on_boundary = true;
  return res;
}

/// Pair of (x, y) points whose midpoint violates convexity of a single
/// Phi_lambda, built along the negative-curvature direction of its
/// restriction to a smooth two-dimensional slice.
template <typename Scalar>
struct ConvexityWitness {
  bool found = false;
  Vector<Scalar> x1, x2;
  Scalar y1 = Scalar(0), y2 = Scalar(0);
};

/// The slice is x = t * (1, ..., 1) for q = 1 and x = t * e_1 otherwise,
/// around t = 1, y = rho / 2 (rho > 0 required).
template <typename Scalar>
ConvexityWitness<Scalar> convexity_witness(ChannelNorm q, Index channels, Scalar theta,
                                           Scalar omega, Scalar rho) {
  if (!(rho > Scalar(0))) jointsparse::detail::violate("convexity_witness needs rho > 0");
  const Scalar c = q == ChannelNorm::One ? Scalar(channels) : Scalar(1);
  Eigen::Matrix<Scalar, 2, 2> h;
  h << 2 * omega * c, c, c, 2 * theta;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Scalar, 2, 2>> es(h);
  ConvexityWitness<Scalar> w;
  if (!(es.eigenvalues()(0) < Scalar(0))) return w;
  Eigen::Matrix<Scalar, 2, 1> d = es.eigenvectors().col(0);
  const Scalar t0 = 1, y0 = rho / 2;
  const Scalar s = Scalar(0.5) * std::min(t0 / std::max(std::abs(d[0]), Scalar(1e-300)),
                                          y0 / std::max(std::abs(d[1]), Scalar(1e-300)));
  d *= s;
  Vector<Scalar> dir = Vector<Scalar>::Zero(channels);
  if (q == ChannelNorm::One)
    dir.setOnes();
  else
    dir[0] = Scalar(1);
  w.found = true;
  w.x1 = (t0 + d[0]) * dir;
  w.x2 = (t0 - d[0]) * dir;
  w.y1 = y0 + d[1];
  w.y2 = y0 - d[1];
  return w;
}

}  // namespace jointsparse::oracle
