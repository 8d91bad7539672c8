#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace jointsparse {

using Index = Eigen::Index;

/// Exponent of the per-index channel norm ||u_lambda||_q.
enum class ChannelNorm { One, Two, Inf };

/// Raised when a caller breaks an operation's shape or range contract.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Coefficient field u: one row per index lambda, one column per channel.
/// Row-major so that the channel vector u_lambda is contiguous.
template <typename Scalar>
using Coefficients =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Per-index nonnegative weights (v, rho, theta, omega).
template <typename Scalar>
using Weights = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Measurement blocks g_1..g_N, each living in its own space H_j.
template <typename Scalar>
using MeasurementData = std::vector<Vector<Scalar>>;

namespace detail {

template <typename... Args>
[[noreturn]] void violate(const Args&... args) {
  std::ostringstream os;
  (os << ... << args);
  throw ContractViolation(os.str());
}

}  // namespace detail

inline const char* to_string(ChannelNorm q) {
  switch (q) {
    case ChannelNorm::One: return "1";
    case ChannelNorm::Two: return "2";
    case ChannelNorm::Inf: return "inf";
  }
  return "?";
}

inline ChannelNorm parse_channel_norm(const std::string& s) {
  if (s == "1") return ChannelNorm::One;
  if (s == "2") return ChannelNorm::Two;
  if (s == "inf" || s == "Inf" || s == "INF") return ChannelNorm::Inf;
  detail::violate("unsupported channel norm '", s, "' (expected 1, 2 or inf)");
}

/// Dual exponent q' with 1/q + 1/q' = 1.
constexpr ChannelNorm dual_norm(ChannelNorm q) {
  switch (q) {
    case ChannelNorm::One: return ChannelNorm::Inf;
    case ChannelNorm::Two: return ChannelNorm::Two;
    case ChannelNorm::Inf: return ChannelNorm::One;
  }
  return q;
}

/// ||x||_q for a channel vector.
template <typename Derived>
typename Derived::Scalar channel_norm(const Eigen::MatrixBase<Derived>& x,
                                      ChannelNorm q) {
  using Scalar = typename Derived::Scalar;
  if (x.size() == 0) return Scalar(0);
  switch (q) {
    case ChannelNorm::One: return x.template lpNorm<1>();
    case ChannelNorm::Two: {
      const Scalar n = x.norm();
      return n == Scalar(0) && !x.isZero(0) ? x.stableNorm() : n;
    }
    case ChannelNorm::Inf: return x.template lpNorm<Eigen::Infinity>();
  }
  return Scalar(0);
}

/// Regularization weights of the joint functional.
///
/// theta couples v to its ceiling rho, omega is the quadratic damping and
/// gamma is a uniform lower bound on omega.
template <typename Scalar>
struct RegularizationParams {
  ChannelNorm q = ChannelNorm::Two;
  Index channels = 1;
  Weights<Scalar> theta;
  Weights<Scalar> rho;
  Weights<Scalar> omega;
  Scalar gamma = Scalar(0);

  Index lambda_count() const { return theta.size(); }

  /// Uniform parameters over `lambda_count` indices; gamma defaults to omega.
  static RegularizationParams uniform(ChannelNorm q, Index lambda_count,
                                      Index channels, Scalar theta,
                                      Scalar rho, Scalar omega) {
    RegularizationParams p;
    p.q = q;
    p.channels = channels;
    p.theta = Weights<Scalar>::Constant(lambda_count, theta);
    p.rho = Weights<Scalar>::Constant(lambda_count, rho);
    p.omega = Weights<Scalar>::Constant(lambda_count, omega);
    p.gamma = omega;
    return p;
  }

  /// Throws ContractViolation unless theta > 0, rho >= 0 and
  /// omega >= gamma > 0 hold everywhere.
  void validate() const {
    const Index n = theta.size();
    if (n < 1) detail::violate("regularization weights are empty");
    if (channels < 1) detail::violate("channel count must be >= 1");
    if (rho.size() != n || omega.size() != n)
      detail::violate("weight length mismatch: theta=", n, " rho=", rho.size(),
                      " omega=", omega.size());
    if (!(gamma > Scalar(0)) || !std::isfinite(gamma))
      detail::violate("gamma must be positive, got ", gamma);
    for (Index i = 0; i < n; ++i) {
      if (!(theta[i] > Scalar(0)) || !std::isfinite(theta[i]))
        detail::violate("theta[", i, "] = ", theta[i], " must be > 0");
      if (!(rho[i] >= Scalar(0)) || !std::isfinite(rho[i]))
        detail::violate("rho[", i, "] = ", rho[i], " must be >= 0");
      if (!(omega[i] >= gamma) || !std::isfinite(omega[i]))
        detail::violate("omega[", i, "] = ", omega[i], " below gamma = ", gamma);
    }
  }
};

/// One row per inner Landweber step, keyed by (outer, inner).
template <typename Scalar>
struct InnerRecord {
  Index outer = 0;
  Index inner = 0;
  Scalar objective_j = Scalar(0);
  Scalar objective_k = Scalar(0);
  Scalar step_norm = Scalar(0);
  /// step_norm divided by the previous step norm; NaN on the first step.
  Scalar ratio = std::numeric_limits<Scalar>::quiet_NaN();
};

/// J(u^(n,0), v^(n)) at the start of each outer pass, plus the final value.
template <typename Scalar>
struct OuterRecord {
  Index outer = 0;
  Scalar objective_j = Scalar(0);
  Scalar objective_k = Scalar(0);
  Scalar step_norm = Scalar(0);  ///< ||u^(n,0) - u^(n-1,0)||, 0 for n = 0
};

/// Rate constants the solver derived or was given; NaN when not computed.
template <typename Scalar>
struct RateSummary {
  Scalar residual_norm = std::numeric_limits<Scalar>::quiet_NaN();  ///< ||I - T*T||
  Scalar alpha = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar beta = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar delta = std::numeric_limits<Scalar>::quiet_NaN();
  Index inner_iters = 0;
};

template <typename Scalar>
struct SolverTelemetry {
  RateSummary<Scalar> rates;
  std::vector<InnerRecord<Scalar>> inner;
  std::vector<OuterRecord<Scalar>> outer;
  Index inner_iterations = 0;
  bool stopped_on_tolerance = false;

  void append(InnerRecord<Scalar> r) {
    if (!inner.empty()) {
      const auto& last = inner.back();
      if (r.outer < last.outer ||
          (r.outer == last.outer && r.inner <= last.inner))
        detail::violate("telemetry records must be appended in (n, m) order");
    }
    inner.push_back(r);
  }
  void append(OuterRecord<Scalar> r) {
    if (!outer.empty() && r.outer <= outer.back().outer)
      detail::violate("outer telemetry records must be appended in order");
    outer.push_back(r);
  }
};

template <typename Scalar>
struct Solution {
  Coefficients<Scalar> u;
  Weights<Scalar> v;
  SolverTelemetry<Scalar> telemetry;
};

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& x) {
  return x.allFinite();
}

template <typename Scalar>
void require_finite(const Coefficients<Scalar>& u, const char* what) {
  if (u.rows() < 1 || u.cols() < 1)
    detail::violate(what, ": empty coefficient field (", u.rows(), "x",
                    u.cols(), ")");
  if (!u.allFinite()) detail::violate(what, ": non-finite coefficient");
}

template <typename Scalar>
void require_nonnegative(const Weights<Scalar>& w, const char* what) {
  for (Index i = 0; i < w.size(); ++i)
    if (!(w[i] >= Scalar(0)) || !std::isfinite(w[i]))
      detail::violate(what, "[", i, "] = ", w[i], " must be finite and >= 0");
}

template <typename Scalar>
Scalar squared_norm(const MeasurementData<Scalar>& g) {
  Scalar s(0);
  for (const auto& b : g) s += b.squaredNorm();
  return s;
}

template <typename Scalar>
Scalar dot(const MeasurementData<Scalar>& a, const MeasurementData<Scalar>& b) {
  if (a.size() != b.size())
    detail::violate("measurement block count mismatch: ", a.size(), " vs ",
                    b.size());
  Scalar s(0);
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j].dot(b[j]);
  return s;
}

}  // namespace jointsparse
