#pragma once

#include "image_io.hpp"
#include "jointsparse/linop.hpp"

#include <cstdint>
#include <filesystem>

namespace jointsparse::app {

/// Seeded multiple-measurement-vector instance: channel l is observed by
/// its own block. The first `full_channels` blocks are the identity, the
/// others are Gaussian `rows` x lambda_count matrices normalized to unit
/// norm. The assembled operator is then scaled to `target_norm`.
struct MmvSpec {
  Index lambda_count = 128;
  Index channels = 3;
  Index rows = 64;
  Index full_channels = 1;
  Index sparsity = 12;
  double overlap = 1.0;  ///< fraction of each support drawn from the shared set
  double noise = 0.0;    ///< standard deviation of additive Gaussian noise
  double signal_scale = 1.0;
  double target_norm = 0.9;
  std::uint64_t seed = 1;
};

struct MmvProblem {
  Index lambda_count = 0;
  Index channels = 0;
  std::vector<Matrix<double>> blocks;  ///< block l acts on channel l
  MeasurementData<double> g;
  Coefficients<double> truth;
  std::vector<std::vector<Index>> supports;
  double scale = 1.0;  ///< factor already applied to the blocks

  std::shared_ptr<const LinearOperator<double>> op() const;
  /// Every index sits at scale 0 (no multiscale structure).
  std::vector<int> scales() const {
    return std::vector<int>(static_cast<std::size_t>(lambda_count), 0);
  }
};

/// Throws ContractViolation for infeasible specs (e.g. sparsity > lambda_count).
MmvProblem make_mmv(const MmvSpec& spec);

void write_problem(const std::filesystem::path& path, const MmvProblem& p);
MmvProblem read_problem(const std::filesystem::path& path);

/// Seeded piecewise-smooth color test image: a shaded background with
/// a few colored discs and rectangles.
Image synthetic_color_image(Index side, std::uint64_t seed);

}  // namespace jointsparse::app
