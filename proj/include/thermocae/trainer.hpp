#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "thermocae/image.hpp"
#include "thermocae/model.hpp"
#include "thermocae/msssim.hpp"

namespace thermocae {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  std::size_t batch_size = 32;
  std::size_t epochs = 100;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t shuffle_seed = 0;

  void validate() const;
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

/// One Adam update with bias correction at step t >= 1. State is lazily
/// sized on first use.
void adam_step(std::span<Parameter> params, AdamState& state, const TrainConfig& config, std::size_t t);

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double seconds = 0.0;
};

/// Anything that maps a batch [N,1,S,S] to a reconstruction of equal shape.
using Reconstructor = std::function<Var(Graph&, Var)>;

/// Stacks images into [N, 1, H, W].
Tensor make_batch(const std::vector<Image>& images, std::span<const std::size_t> indices);

/// Mean of 1 - MS-SSIM over `images`; nothing is mutated.
double validate(const Reconstructor& model, const std::vector<Image>& images, std::size_t batch_size,
                const SsimParams& ssim = {});
double validate(CaeModel& model, const std::vector<Image>& images, std::size_t batch_size,
                const SsimParams& ssim = {});

using EpochCallback = std::function<void(const EpochStats&)>;

/// Adam on 1 - MS-SSIM. Each epoch reshuffles (seeded), trains every batch
/// including the final partial one, then scores the validation set.
std::vector<EpochStats> train(CaeModel& model, const std::vector<Image>& train_set,
                              const std::vector<Image>& validation_set, const TrainConfig& config,
                              const SsimParams& ssim = {}, const EpochCallback& on_epoch = {});

/// Columns: epoch,train_loss,val_loss,seconds. With wall_clock false the
/// seconds column is written as 0 so the file is reproducible.
void write_loss_csv(const std::filesystem::path& path, const std::vector<EpochStats>& history,
                    bool wall_clock);

}  // namespace thermocae
