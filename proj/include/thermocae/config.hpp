#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "thermocae/augment.hpp"
#include "thermocae/detector.hpp"
#include "thermocae/model.hpp"
#include "thermocae/thermo_synth.hpp"
#include "thermocae/trainer.hpp"

namespace thermocae {

/// Rejected configuration; `key` is the dotted path of the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct AugmentSection {
  AugmentParams params{};
  /// Intensity written outside the source image; defaults to the ambient level.
  std::optional<double> fill;
  std::size_t n_total = 10000;
};

struct TrainSection {
  TrainConfig config{};
  bool wall_clock = false;
};

struct EvalSection {
  ScoreMethod score_method = ScoreMethod::smoothed_max;
  std::size_t smooth_k = 5;
  double heater_current = 0.15;
  std::vector<double> heater_currents{0.15, 0.08, 0.07, 0.02};
  Colormap colormap = Colormap::iron;
  std::size_t heatmaps = 4;
  std::vector<std::size_t> sweep_layers{2, 3, 4, 5, 6};
  std::vector<std::size_t> sweep_latents{8, 16, 32, 64, 128};
  std::vector<std::size_t> ablate_counts{600, 1000, 2000, 5000, 10000};
  std::vector<std::string> ablate_stages{"crop", "rotation", "perspective", "brightness_contrast"};
};

struct PathsSection {
  std::string data;        // synthesized splits; empty -> <out>/data
  std::string checkpoint;  // empty -> <out>/checkpoint.cae
};

struct SeedsSection {
  std::uint64_t base = 1;
  std::optional<std::uint64_t> scene_train, scene_test, scene_fault, augment, init, shuffle;

  std::uint64_t get_scene_train() const;
  std::uint64_t get_scene_test() const;
  std::uint64_t get_scene_fault() const;
  std::uint64_t get_augment() const;
  std::uint64_t get_init() const;
  std::uint64_t get_shuffle() const;
};

struct RunConfig {
  SceneConfig scene{};
  FaultSpec fault{};
  AugmentSection augment{};
  CaeConfig model{};
  TrainSection train{};
  EvalSection eval{};
  PathsSection paths{};
  SeedsSection seeds{};

  /// Augment parameters with the fill level resolved.
  AugmentParams augment_params() const;
};

/// Strict parse: every key must be known, every value well typed.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);
/// Effective configuration with defaults filled in and seeds resolved.
std::string config_to_json(const RunConfig& config);

}  // namespace thermocae
