#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "gml/grid.hpp"
#include "gml/rng.hpp"

namespace gml {

/// Two-layer convolutional segmenter:
///   conv(kernel, hidden_channels, zero same-padding) -> ReLU
///   -> conv(kernel, 1, zero same-padding) -> sigmoid
struct ArchSpec {
  int spatial_rank = 2;
  int in_channels = 1;
  int hidden_channels = 8;
  int kernel = 3;

  /// Throws InvalidSpec.
  void validate() const;
  std::size_t taps() const;  // kernel^spatial_rank
  std::size_t param_count() const;

  friend bool operator==(const ArchSpec&, const ArchSpec&) = default;
};

/// Offsets into ModelWeights::params. The flat order is fixed:
///   conv1 weights [hidden][in_channel][tap], conv1 bias [hidden],
///   conv2 weights [hidden][tap], conv2 bias [1]
/// where taps enumerate the kernel window in row-major order.
struct ParamLayout {
  std::size_t conv1_weight = 0;
  std::size_t conv1_bias = 0;
  std::size_t conv2_weight = 0;
  std::size_t conv2_bias = 0;
  std::size_t total = 0;

  static ParamLayout of(const ArchSpec& arch);
};

struct ModelWeights {
  ArchSpec arch;
  std::vector<double> params;

  bool all_finite() const noexcept;
  friend bool operator==(const ModelWeights&, const ModelWeights&) = default;
};

using Gradient = std::vector<double>;

ModelWeights zero_weights(const ArchSpec& arch);

/// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for each layer's weights and bias.
ModelWeights init_weights(const ArchSpec& arch, Rng& rng);

/// Intermediate values kept by forward_trace() for the backward pass.
struct ForwardTrace {
  std::vector<double> hidden_pre;  // [hidden][voxel], before ReLU
  Grid prob;
};

Grid forward(const ModelWeights& w, const Grid& image);
Grid forward(const ModelWeights& w, std::span<const Grid> channels);
ForwardTrace forward_trace(const ModelWeights& w, std::span<const Grid> channels);

/// dLoss/dparams given dLoss/dP = upstream.
Gradient backward(const ModelWeights& w, const Grid& image, const Grid& upstream);
Gradient backward(const ModelWeights& w, std::span<const Grid> channels, const ForwardTrace& trace,
                  const Grid& upstream);

// ---------------------------------------------------------------------------
// Optimizer

enum class OptimizerKind { Sgd, Adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  double momentum = 0.0;  // SGD only
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  friend bool operator==(const OptimizerConfig&, const OptimizerConfig&) = default;
};

struct OptState {
  OptimizerConfig config;
  std::vector<double> first;   // SGD velocity or Adam first moment
  std::vector<double> second;  // Adam second moment (empty for SGD)
  std::uint64_t step_count = 0;

  friend bool operator==(const OptState&, const OptState&) = default;
};

OptState make_opt_state(const OptimizerConfig& config, std::size_t param_count);

/// Throws NonFiniteGradient or ShapeMismatch (length disagreement).
std::pair<ModelWeights, OptState> opt_step(ModelWeights w, std::span<const double> grad, OptState st);
void opt_step_inplace(ModelWeights& w, std::span<const double> grad, OptState& st);

// ---------------------------------------------------------------------------
// Checkpoint ("GMLW", little-endian)

inline constexpr std::size_t kCheckpointHeaderBytes = 21;

std::size_t checkpoint_size(const ArchSpec& arch);
std::vector<std::uint8_t> checkpoint_write(const ModelWeights& w);
/// Throws CorruptCheckpoint on bad magic, version, header fields or length.
ModelWeights checkpoint_read(std::span<const std::uint8_t> bytes);

void checkpoint_save(const std::filesystem::path& path, const ModelWeights& w);
ModelWeights checkpoint_load(const std::filesystem::path& path);

}  // namespace gml
