#pragma once

#include "jointsparse/core.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace jointsparse::app {

/// Raised for malformed configuration files or inconsistent settings.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Settings shared by every command. Each command reads the keys it needs;
/// unknown keys are rejected at parse time.
struct RunConfig {
  // Regularization.
  ChannelNorm q = ChannelNorm::Two;
  double rho = 1.0;             ///< rho at scale 0
  double rho_exponent = 0.75;   ///< s in rho_lambda = rho * 2^(-j s)
  std::vector<double> theta{10.0};  ///< one value, or one per lambda
  double omega = 0.05;
  std::optional<double> gamma;  ///< defaults to omega

  // Schedule.
  Index n_max = 15;
  std::optional<Index> inner_iters;
  std::optional<double> delta_target;
  double inner_step_tol = 0.0;
  double outer_tol = 1e-8;
  double target_norm = 0.9;

  std::uint64_t seed = 1;
  std::filesystem::path out = ".";
  std::filesystem::path problem;

  // Color demo.
  std::filesystem::path color, gray, truth;
  Index downsample = 4;
  int depth = 3;
  double blur_sigma = 1.0;
  Index blur_radius = 3;
  double intensity_scale = 255.0;
  double weight_luma = 1.0;
  double weight_chroma = 1.0;

  // Generator.
  std::string kind = "mmv";  ///< mmv or image
  Index lambda_count = 128;
  Index channels = 3;
  Index rows = 64;           ///< measurements per undersampled channel
  Index full_channels = 1;   ///< leading channels observed in full
  Index sparsity = 12;
  double overlap = 1.0;
  double noise = 0.0;
  double signal_scale = 1.0;
  Index image_side = 64;

  /// Keys in the order they were set, for echoing into output headers.
  /// `out` is left out so reruns into another directory match byte for byte.
  std::vector<std::pair<std::string, std::string>> echo;

  /// Per-lambda regularization weights from the scale of every index.
  RegularizationParams<double> params(const std::vector<int>& scales, Index channels) const;
};

/// Parses key = value text. `#` starts a comment; blank lines are ignored.
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Applies one key; used by the parser and for command-line overrides.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

/// Throws ConfigError unless both parameter certificates hold.
void validate_certificates(const RegularizationParams<double>& p);

}  // namespace jointsparse::app
