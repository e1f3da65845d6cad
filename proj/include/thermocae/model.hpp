#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "thermocae/graph.hpp"

namespace thermocae {

/// Autoencoder shape. Encoder layer i has min(32 * 2^i, 512) channels.
struct CaeConfig {
  std::size_t num_layers = 5;
  std::size_t latent_dim = 64;
  std::size_t input_size = 128;

  void validate() const;
  std::size_t channels(std::size_t layer) const;
  /// Spatial side of the last encoder feature map.
  std::size_t bottleneck_side() const { return input_size >> num_layers; }
  std::size_t flat_size() const;

  friend bool operator==(const CaeConfig&, const CaeConfig&) = default;
};

/// Convolutional autoencoder: num_layers x (stride-2 conv + relu), flatten,
/// dense to the latent code, dense back, reshape + relu, num_layers x
/// (stride-2 transposed conv + relu) with a sigmoid on the last layer.
class CaeModel {
 public:
  /// He-normal weights (std sqrt(2 / fan_in)), zero biases, from `seed`.
  static CaeModel build(const CaeConfig& config, std::uint64_t seed);
  /// Used when restoring a checkpoint; parameters must match the layout.
  CaeModel(CaeConfig config, std::vector<Parameter> params);

  const CaeConfig& config() const { return config_; }
  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  std::size_t parameter_count() const;

  /// Last encoder feature map [N, C, s, s].
  Var encode_features(Graph& g, Var x);
  /// Latent code [N, latent_dim].
  Var encode(Graph& g, Var x);
  Var decode(Graph& g, Var z);
  /// x [N, 1, S, S] with S = input_size -> reconstruction of the same shape.
  Var forward(Graph& g, Var x);

  /// Forward without gradient bookkeeping.
  Tensor reconstruct(const Tensor& x);

 private:
  CaeModel() = default;
  Var bind(Graph& g, std::size_t index, bool track);
  Var features(Graph& g, Var x, bool track);
  Var code(Graph& g, Var x, bool track);
  Var expand(Graph& g, Var z, bool track);
  void check_layout() const;

  CaeConfig config_;
  std::vector<Parameter> params_;
};

}  // namespace thermocae
