#pragma once

#include "jointsparse/core.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>

namespace jointsparse {

/// Joint forward map T : l2(Lambda, R^M) -> H_1 x ... x H_N.
template <typename Scalar>
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;

  virtual Index lambda_count() const = 0;
  virtual Index channels() const = 0;
  virtual std::vector<Index> block_sizes() const = 0;

  virtual MeasurementData<Scalar> apply(const Coefficients<Scalar>& u) const = 0;
  virtual Coefficients<Scalar> adjoint(const MeasurementData<Scalar>& g) const = 0;

  /// Known upper bound on ||T||, if any.
  virtual std::optional<Scalar> declared_norm_bound() const { return std::nullopt; }

  MeasurementData<Scalar> zero_measurement() const {
    MeasurementData<Scalar> g;
    for (Index n : block_sizes()) g.push_back(Vector<Scalar>::Zero(n));
    return g;
  }

  void check_input(const Coefficients<Scalar>& u) const {
    if (u.rows() != lambda_count() || u.cols() != channels())
      detail::violate("operator expects coefficients of shape ", lambda_count(),
                      "x", channels(), ", got ", u.rows(), "x", u.cols());
  }

  void check_measurement(const MeasurementData<Scalar>& g) const {
    const auto sizes = block_sizes();
    if (g.size() != sizes.size())
      detail::violate("operator expects ", sizes.size(),
                      " measurement blocks, got ", g.size());
    for (std::size_t j = 0; j < sizes.size(); ++j)
      if (g[j].size() != sizes[j])
        detail::violate("measurement block ", j, " has length ", g[j].size(),
                        ", expected ", sizes[j]);
  }
};

template <typename Scalar>
using OperatorPtr = std::shared_ptr<const LinearOperator<Scalar>>;

/// Single-channel map from a length-|Lambda| vector to one measurement block.
template <typename Scalar>
class ScalarOperator {
 public:
  virtual ~ScalarOperator() = default;
  virtual Index rows() const = 0;
  virtual Index cols() const = 0;
  virtual Vector<Scalar> apply(const Vector<Scalar>& x) const = 0;
  virtual Vector<Scalar> adjoint(const Vector<Scalar>& y) const = 0;
};

template <typename Scalar>
using ScalarOperatorPtr = std::shared_ptr<const ScalarOperator<Scalar>>;

template <typename Scalar>
class MatrixOperator final : public ScalarOperator<Scalar> {
 public:
  explicit MatrixOperator(Matrix<Scalar> a) : a_(std::move(a)) {}
  Index rows() const override { return a_.rows(); }
  Index cols() const override { return a_.cols(); }
  Vector<Scalar> apply(const Vector<Scalar>& x) const override { return a_ * x; }
  Vector<Scalar> adjoint(const Vector<Scalar>& y) const override {
    return a_.transpose() * y;
  }
  const Matrix<Scalar>& matrix() const { return a_; }

 private:
  Matrix<Scalar> a_;
};

template <typename Scalar>
class IdentityOperator final : public ScalarOperator<Scalar> {
 public:
  explicit IdentityOperator(Index n) : n_(n) {}
  Index rows() const override { return n_; }
  Index cols() const override { return n_; }
  Vector<Scalar> apply(const Vector<Scalar>& x) const override { return x; }
  Vector<Scalar> adjoint(const Vector<Scalar>& y) const override { return y; }

 private:
  Index n_;
};

/// outer ∘ inner.
template <typename Scalar>
class ComposedOperator final : public ScalarOperator<Scalar> {
 public:
  ComposedOperator(ScalarOperatorPtr<Scalar> outer, ScalarOperatorPtr<Scalar> inner)
      : outer_(std::move(outer)), inner_(std::move(inner)) {
    if (outer_->cols() != inner_->rows())
      detail::violate("cannot compose: outer takes ", outer_->cols(),
                      " inputs but inner produces ", inner_->rows());
  }
  Index rows() const override { return outer_->rows(); }
  Index cols() const override { return inner_->cols(); }
  Vector<Scalar> apply(const Vector<Scalar>& x) const override {
    return outer_->apply(inner_->apply(x));
  }
  Vector<Scalar> adjoint(const Vector<Scalar>& y) const override {
    return inner_->adjoint(outer_->adjoint(y));
  }

 private:
  ScalarOperatorPtr<Scalar> outer_, inner_;
};

template <typename Scalar>
class ScaledScalarOperator final : public ScalarOperator<Scalar> {
 public:
  ScaledScalarOperator(ScalarOperatorPtr<Scalar> base, Scalar scale)
      : base_(std::move(base)), scale_(scale) {}
  Index rows() const override { return base_->rows(); }
  Index cols() const override { return base_->cols(); }
  Vector<Scalar> apply(const Vector<Scalar>& x) const override { return scale_ * base_->apply(x); }
  Vector<Scalar> adjoint(const Vector<Scalar>& y) const override {
    return scale_ * base_->adjoint(y);
  }

 private:
  ScalarOperatorPtr<Scalar> base_;
  Scalar scale_;
};

/// Orthonormal 2-D Haar synthesis on a square image of side `side`.
///
/// Coefficients use the usual pyramid layout (approximation block in the
/// top-left corner), flattened row-major; the image is flattened the same
/// way. Being orthonormal, adjoint() is the analysis transform.
template <typename Scalar>
class HaarSynthesis final : public ScalarOperator<Scalar> {
 public:
  HaarSynthesis(Index side, int depth) : side_(side), depth_(depth) {
    if (side < 1 || depth < 0) detail::violate("invalid Haar geometry");
    if (side % (Index(1) << depth) != 0)
      detail::violate("image side ", side, " is not divisible by 2^", depth);
  }
  Index rows() const override { return side_ * side_; }
  Index cols() const override { return side_ * side_; }
  Index side() const { return side_; }
  int depth() const { return depth_; }

  Vector<Scalar> apply(const Vector<Scalar>& coeffs) const override {
    check(coeffs);
    Coefficients<Scalar> img =
        Eigen::Map<const Coefficients<Scalar>>(coeffs.data(), side_, side_);
    for (int k = depth_ - 1; k >= 0; --k) {
      const Index s = side_ >> k;
      inverse_step_cols(img, s);
      inverse_step_rows(img, s);
    }
    return Eigen::Map<const Vector<Scalar>>(img.data(), img.size());
  }

  Vector<Scalar> adjoint(const Vector<Scalar>& pixels) const override {
    check(pixels);
    Coefficients<Scalar> img =
        Eigen::Map<const Coefficients<Scalar>>(pixels.data(), side_, side_);
    for (int k = 0; k < depth_; ++k) {
      const Index s = side_ >> k;
      forward_step_rows(img, s);
      forward_step_cols(img, s);
    }
    return Eigen::Map<const Vector<Scalar>>(img.data(), img.size());
  }

  /// Scale index j of each coefficient: 0 for the approximation block,
  /// 1 for the coarsest detail band up to `depth` for the finest.
  std::vector<int> scales() const {
    std::vector<int> out(static_cast<std::size_t>(side_ * side_));
    const Index coarse = side_ >> depth_;
    for (Index r = 0; r < side_; ++r)
      for (Index c = 0; c < side_; ++c) {
        const Index m = std::max(r, c);
        int j = 0;
        if (m >= coarse) {
          int k = 0;
          while (k + 1 <= depth_ && m < (side_ >> (k + 1))) ++k;
          j = depth_ - k;
        }
        out[static_cast<std::size_t>(r * side_ + c)] = j;
      }
    return out;
  }

 private:
  void check(const Vector<Scalar>& x) const {
    if (x.size() != side_ * side_)
      detail::violate("Haar transform expects ", side_ * side_,
                      " values, got ", x.size());
  }

  static void forward_step_rows(Coefficients<Scalar>& img, Index s) {
    const Scalar r = Scalar(1) / std::sqrt(Scalar(2));
    Vector<Scalar> tmp(s);
    for (Index i = 0; i < s; ++i) {
      for (Index k = 0; k < s / 2; ++k) {
        tmp[k] = r * (img(i, 2 * k) + img(i, 2 * k + 1));
        tmp[s / 2 + k] = r * (img(i, 2 * k) - img(i, 2 * k + 1));
      }
      img.row(i).head(s) = tmp.transpose();
    }
  }
  static void forward_step_cols(Coefficients<Scalar>& img, Index s) {
    const Scalar r = Scalar(1) / std::sqrt(Scalar(2));
    Vector<Scalar> tmp(s);
    for (Index j = 0; j < s; ++j) {
      for (Index k = 0; k < s / 2; ++k) {
        tmp[k] = r * (img(2 * k, j) + img(2 * k + 1, j));
        tmp[s / 2 + k] = r * (img(2 * k, j) - img(2 * k + 1, j));
      }
      img.col(j).head(s) = tmp;
    }
  }
  static void inverse_step_rows(Coefficients<Scalar>& img, Index s) {
    const Scalar r = Scalar(1) / std::sqrt(Scalar(2));
    Vector<Scalar> tmp(s);
    for (Index i = 0; i < s; ++i) {
      for (Index k = 0; k < s / 2; ++k) {
        tmp[2 * k] = r * (img(i, k) + img(i, s / 2 + k));
        tmp[2 * k + 1] = r * (img(i, k) - img(i, s / 2 + k));
      }
      img.row(i).head(s) = tmp.transpose();
    }
  }
  static void inverse_step_cols(Coefficients<Scalar>& img, Index s) {
    const Scalar r = Scalar(1) / std::sqrt(Scalar(2));
    Vector<Scalar> tmp(s);
    for (Index j = 0; j < s; ++j) {
      for (Index k = 0; k < s / 2; ++k) {
        tmp[2 * k] = r * (img(k, j) + img(s / 2 + k, j));
        tmp[2 * k + 1] = r * (img(k, j) - img(s / 2 + k, j));
      }
      img.col(j).head(s) = tmp;
    }
  }

  Index side_;
  int depth_;
};

/// Separable convolution with half-sample symmetric boundary extension,
/// followed by keeping every `factor`-th pixel in each direction.
template <typename Scalar>
class BlurDecimate final : public ScalarOperator<Scalar> {
 public:
  BlurDecimate(Index side, Vector<Scalar> kernel, Index factor)
      : side_(side), kernel_(std::move(kernel)), factor_(factor) {
    if (factor_ < 1) detail::violate("downsample factor must be >= 1");
    if (side_ % factor_ != 0)
      detail::violate("image side ", side_, " is not divisible by downsample ",
                      factor_);
    if (kernel_.size() < 1 || kernel_.size() % 2 == 0)
      detail::violate("blur kernel must have odd length, got ", kernel_.size());
    if (std::abs(kernel_.sum() - Scalar(1)) > Scalar(1e-12))
      detail::violate("blur kernel must sum to 1, sums to ", kernel_.sum());
  }
  Index rows() const override { return out_side() * out_side(); }
  Index cols() const override { return side_ * side_; }
  Index out_side() const { return side_ / factor_; }
  Index phase() const { return factor_ / 2; }

  Vector<Scalar> apply(const Vector<Scalar>& x) const override {
    if (x.size() != cols()) detail::violate("blur input length mismatch");
    Coefficients<Scalar> img = Eigen::Map<const Coefficients<Scalar>>(x.data(), side_, side_);
    Coefficients<Scalar> tmp(side_, side_);
    for (Index i = 0; i < side_; ++i) tmp.row(i) = convolve(img.row(i).transpose()).transpose();
    for (Index j = 0; j < side_; ++j) img.col(j) = convolve(tmp.col(j));
    const Index n = out_side();
    Vector<Scalar> y(n * n);
    for (Index r = 0; r < n; ++r)
      for (Index c = 0; c < n; ++c)
        y[r * n + c] = img(r * factor_ + phase(), c * factor_ + phase());
    return y;
  }

  Vector<Scalar> adjoint(const Vector<Scalar>& y) const override {
    if (y.size() != rows()) detail::violate("blur adjoint input length mismatch");
    const Index n = out_side();
    Coefficients<Scalar> img = Coefficients<Scalar>::Zero(side_, side_);
    for (Index r = 0; r < n; ++r)
      for (Index c = 0; c < n; ++c)
        img(r * factor_ + phase(), c * factor_ + phase()) = y[r * n + c];
    Coefficients<Scalar> tmp(side_, side_);
    for (Index j = 0; j < side_; ++j) tmp.col(j) = convolve_adjoint(img.col(j));
    for (Index i = 0; i < side_; ++i)
      img.row(i) = convolve_adjoint(tmp.row(i).transpose()).transpose();
    return Eigen::Map<const Vector<Scalar>>(img.data(), img.size());
  }

 private:
  Index reflect(Index i) const {
    const Index n = side_;
    const Index period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - 1 - i;
  }
  Vector<Scalar> convolve(const Vector<Scalar>& x) const {
    const Index c = kernel_.size() / 2;
    Vector<Scalar> out = Vector<Scalar>::Zero(side_);
    for (Index i = 0; i < side_; ++i)
      for (Index k = 0; k < kernel_.size(); ++k)
        out[i] += kernel_[k] * x[reflect(i + k - c)];
    return out;
  }
  Vector<Scalar> convolve_adjoint(const Vector<Scalar>& y) const {
    const Index c = kernel_.size() / 2;
    Vector<Scalar> out = Vector<Scalar>::Zero(side_);
    for (Index i = 0; i < side_; ++i)
      for (Index k = 0; k < kernel_.size(); ++k)
        out[reflect(i + k - c)] += kernel_[k] * y[i];
    return out;
  }

  Index side_;
  Vector<Scalar> kernel_;
  Index factor_;
};

/// Normalized 1-D Gaussian of the given width, truncated at +-radius.
template <typename Scalar = double>
Vector<Scalar> gaussian_kernel(Scalar sigma, Index radius) {
  if (!(sigma > Scalar(0)) || radius < 0)
    detail::violate("gaussian_kernel: need sigma > 0 and radius >= 0");
  Vector<Scalar> k(2 * radius + 1);
  for (Index i = -radius; i <= radius; ++i)
    k[i + radius] = std::exp(-Scalar(i * i) / (Scalar(2) * sigma * sigma));
  return k / k.sum();
}

/// Grid of scalar-channel operators; block j of Tu is sum_l blocks[j][l] u^l.
/// A null entry is the zero operator.
template <typename Scalar>
class BlockOperator final : public LinearOperator<Scalar> {
 public:
  using Grid = std::vector<std::vector<ScalarOperatorPtr<Scalar>>>;

  BlockOperator(Index lambda_count, std::vector<Index> block_sizes, Grid grid)
      : lambda_count_(lambda_count), sizes_(std::move(block_sizes)), grid_(std::move(grid)) {
    if (lambda_count_ < 1) detail::violate("lambda_count must be >= 1");
    if (sizes_.empty() || grid_.size() != sizes_.size())
      detail::violate("block grid has ", grid_.size(), " rows but ", sizes_.size(),
                      " block sizes were given");
    channels_ = static_cast<Index>(grid_.front().size());
    if (channels_ < 1) detail::violate("block grid has no channels");
    for (std::size_t j = 0; j < grid_.size(); ++j) {
      if (static_cast<Index>(grid_[j].size()) != channels_)
        detail::violate("block row ", j, " has ", grid_[j].size(),
                        " entries, expected ", channels_);
      for (std::size_t l = 0; l < grid_[j].size(); ++l) {
        const auto& b = grid_[j][l];
        if (!b) continue;
        if (b->cols() != lambda_count_ || b->rows() != sizes_[j])
          detail::violate("block (", j, ",", l, ") is ", b->rows(), "x", b->cols(),
                          ", expected ", sizes_[j], "x", lambda_count_);
      }
    }
  }

  /// Square block-diagonal model with one operator per channel.
  static BlockOperator diagonal(const std::vector<ScalarOperatorPtr<Scalar>>& diag) {
    if (diag.empty()) detail::violate("empty block diagonal");
    const Index n = diag.front()->cols();
    std::vector<Index> sizes;
    Grid grid(diag.size(), std::vector<ScalarOperatorPtr<Scalar>>(diag.size()));
    for (std::size_t j = 0; j < diag.size(); ++j) {
      sizes.push_back(diag[j]->rows());
      grid[j][j] = diag[j];
    }
    return BlockOperator(n, std::move(sizes), std::move(grid));
  }

  Index lambda_count() const override { return lambda_count_; }
  Index channels() const override { return channels_; }
  std::vector<Index> block_sizes() const override { return sizes_; }
  const ScalarOperatorPtr<Scalar>& block(std::size_t j, std::size_t l) const {
    return grid_.at(j).at(l);
  }

  MeasurementData<Scalar> apply(const Coefficients<Scalar>& u) const override {
    this->check_input(u);
    MeasurementData<Scalar> g = this->zero_measurement();
    for (Index l = 0; l < channels_; ++l) {
      const Vector<Scalar> channel = u.col(l);
      for (std::size_t j = 0; j < grid_.size(); ++j)
        if (const auto& b = grid_[j][static_cast<std::size_t>(l)]) g[j] += b->apply(channel);
    }
    return g;
  }

  Coefficients<Scalar> adjoint(const MeasurementData<Scalar>& g) const override {
    this->check_measurement(g);
    Coefficients<Scalar> u = Coefficients<Scalar>::Zero(lambda_count_, channels_);
    for (std::size_t j = 0; j < grid_.size(); ++j)
      for (Index l = 0; l < channels_; ++l)
        if (const auto& b = grid_[j][static_cast<std::size_t>(l)]) u.col(l) += b->adjoint(g[j]);
    return u;
  }

 private:
  Index lambda_count_;
  Index channels_ = 0;
  std::vector<Index> sizes_;
  Grid grid_;
};

/// One dense matrix acting on the row-major flattening of u
/// (index lambda * M + l) and producing a single measurement block.
template <typename Scalar>
class DenseJointOperator final : public LinearOperator<Scalar> {
 public:
  DenseJointOperator(Matrix<Scalar> a, Index lambda_count, Index channels)
      : a_(std::move(a)), lambda_count_(lambda_count), channels_(channels) {
    if (a_.cols() != lambda_count * channels)
      detail::violate("dense operator has ", a_.cols(), " columns, expected ",
                      lambda_count * channels);
  }
  Index lambda_count() const override { return lambda_count_; }
  Index channels() const override { return channels_; }
  std::vector<Index> block_sizes() const override { return {a_.rows()}; }
  const Matrix<Scalar>& matrix() const { return a_; }

  MeasurementData<Scalar> apply(const Coefficients<Scalar>& u) const override {
    this->check_input(u);
    return {a_ * Eigen::Map<const Vector<Scalar>>(u.data(), u.size())};
  }
  Coefficients<Scalar> adjoint(const MeasurementData<Scalar>& g) const override {
    this->check_measurement(g);
    const Vector<Scalar> flat = a_.transpose() * g[0];
    return Eigen::Map<const Coefficients<Scalar>>(flat.data(), lambda_count_, channels_);
  }

 private:
  Matrix<Scalar> a_;
  Index lambda_count_, channels_;
};

/// s * T, optionally carrying a known bound on the scaled norm.
template <typename Scalar>
class ScaledOperator final : public LinearOperator<Scalar> {
 public:
  ScaledOperator(OperatorPtr<Scalar> base, Scalar scale,
                 std::optional<Scalar> bound = std::nullopt)
      : base_(std::move(base)), scale_(scale), bound_(bound) {}
  Index lambda_count() const override { return base_->lambda_count(); }
  Index channels() const override { return base_->channels(); }
  std::vector<Index> block_sizes() const override { return base_->block_sizes(); }
  std::optional<Scalar> declared_norm_bound() const override {
    if (bound_) return bound_;
    if (auto b = base_->declared_norm_bound()) return std::abs(scale_) * *b;
    return std::nullopt;
  }
  Scalar scale() const { return scale_; }
  const OperatorPtr<Scalar>& base() const { return base_; }

  MeasurementData<Scalar> apply(const Coefficients<Scalar>& u) const override {
    auto g = base_->apply(u);
    for (auto& b : g) b *= scale_;
    return g;
  }
  Coefficients<Scalar> adjoint(const MeasurementData<Scalar>& g) const override {
    return scale_ * base_->adjoint(g);
  }

 private:
  OperatorPtr<Scalar> base_;
  Scalar scale_;
  std::optional<Scalar> bound_;
};

/// Safety factor applied to every power-iteration norm estimate.
inline constexpr double kNormSafetyFactor = 1.01;

template <typename Scalar>
struct NormEstimate {
  Scalar value = Scalar(0);  ///< raw * kNormSafetyFactor
  Scalar raw = Scalar(0);
  Index iterations = 0;
  bool converged = false;
};

/// Largest eigenvalue of a symmetric positive semidefinite map on
/// coefficient fields, by power iteration from a seeded Gaussian start.
template <typename Scalar>
NormEstimate<Scalar> power_iteration(
    const std::function<Coefficients<Scalar>(const Coefficients<Scalar>&)>& map,
    Index rows, Index cols, Index max_iters, Scalar tol,
    std::uint64_t seed = 0x5eed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<Scalar> normal;
  Coefficients<Scalar> x(rows, cols);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
  x /= x.norm();

  NormEstimate<Scalar> est;
  Scalar lambda(0);
  for (Index it = 1; it <= max_iters; ++it) {
    Coefficients<Scalar> y = map(x);
    const Scalar next = x.cwiseProduct(y).sum();  // Rayleigh quotient
    const Scalar ny = y.norm();
    est.iterations = it;
    if (ny == Scalar(0)) {
      lambda = Scalar(0);
      est.converged = true;
      break;
    }
    const bool done = it > 1 && std::abs(next - lambda) <= tol * std::abs(next);
    lambda = next;
    x = y / ny;
    if (done) {
      est.converged = true;
      break;
    }
  }
  est.raw = std::max(lambda, Scalar(0));
  est.value = est.raw * Scalar(kNormSafetyFactor);
  return est;
}

/// ||T|| via power iteration on T*T, reported inflated by kNormSafetyFactor.
/// `converged == false` marks a lower-confidence estimate.
template <typename Scalar>
NormEstimate<Scalar> estimate_norm(const LinearOperator<Scalar>& op,
                                   Index max_iters = 1000, Scalar tol = Scalar(1e-10)) {
  auto est = power_iteration<Scalar>(
      [&op](const Coefficients<Scalar>& x) { return op.adjoint(op.apply(x)); },
      op.lambda_count(), op.channels(), max_iters, tol);
  est.raw = std::sqrt(est.raw);
  est.value = est.raw * Scalar(kNormSafetyFactor);
  return est;
}

/// ||I - T*T|| by the same estimator, capped at 1 (valid when ||T|| <= 1).
template <typename Scalar>
NormEstimate<Scalar> estimate_landweber_residual(const LinearOperator<Scalar>& op,
                                                 Index max_iters = 1000,
                                                 Scalar tol = Scalar(1e-10)) {
  auto est = power_iteration<Scalar>(
      [&op](const Coefficients<Scalar>& x) -> Coefficients<Scalar> {
        return x - op.adjoint(op.apply(x));
      },
      op.lambda_count(), op.channels(), max_iters, tol);
  est.value = std::min(est.value, Scalar(1));
  return est;
}

template <typename Scalar>
struct RescaledOperator {
  std::shared_ptr<const ScaledOperator<Scalar>> op;
  Scalar scale = Scalar(1);
  NormEstimate<Scalar> original_norm;
};

/// Scales T by s = target / estimate so that ||sT|| <= target.
/// The same s must be applied to the data g.
template <typename Scalar>
RescaledOperator<Scalar> rescale_to_contraction(OperatorPtr<Scalar> op, Scalar target,
                                                Index max_iters = 1000,
                                                Scalar tol = Scalar(1e-10)) {
  if (!(target > Scalar(0) && target < Scalar(1)))
    detail::violate("rescale target must lie in (0,1), got ", target);
  const auto est = estimate_norm(*op, max_iters, tol);
  if (!(est.raw > Scalar(0)))
    throw std::domain_error("cannot rescale the zero operator");
  const Scalar s = target / est.value;
  RescaledOperator<Scalar> out;
  out.op = std::make_shared<ScaledOperator<Scalar>>(std::move(op), s, target);
  out.scale = s;
  out.original_norm = est;
  return out;
}

/// Block-diagonal (F, A∘F, A∘F) model: full-resolution luminance plus
/// blurred and decimated chrominance, all synthesized by `transform`.
/// `weights` rescales block rows by sqrt(w_j) (data must be scaled alike).
template <typename Scalar>
BlockOperator<Scalar> build_color_model(const Vector<Scalar>& blur_kernel, Index downsample,
                                        std::shared_ptr<const HaarSynthesis<Scalar>> transform,
                                        const std::array<Scalar, 3>& weights = {1, 1, 1}) {
  if (!transform) detail::violate("build_color_model: null transform");
  ScalarOperatorPtr<Scalar> reduce =
      std::make_shared<BlurDecimate<Scalar>>(transform->side(), blur_kernel, downsample);
  ScalarOperatorPtr<Scalar> f = transform;
  ScalarOperatorPtr<Scalar> af = std::make_shared<ComposedOperator<Scalar>>(reduce, f);
  std::vector<ScalarOperatorPtr<Scalar>> diag{f, af, af};
  for (std::size_t j = 0; j < 3; ++j) {
    if (!(weights[j] > Scalar(0))) detail::violate("discrepancy weights must be positive");
    if (weights[j] != Scalar(1))
      diag[j] = std::make_shared<ScaledScalarOperator<Scalar>>(diag[j], std::sqrt(weights[j]));
  }
  return BlockOperator<Scalar>::diagonal(diag);
}

}  // namespace jointsparse
