#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "thermocae/augment.hpp"
#include "thermocae/homography.hpp"
#include "thermocae/image.hpp"
#include "thermocae/rng.hpp"

namespace thermocae {

/// Gaussian heat source; temperature rise at its centre is a*I + b*I^2.
struct HeatSource {
  std::string name;
  double x = 0.0;
  double y = 0.0;
  double sigma = 1.0;
  double a = 0.0;  // degC per A
  double b = 0.0;  // degC per A^2
};

/// Simulated converter board seen by a 160x120 camera. Scene units equal
/// camera pixels at the identity viewpoint.
struct SceneConfig {
  std::size_t width = 160;
  std::size_t height = 120;
  double ambient_c = 20.0;
  double tau_s = 30.0;
  double noise_counts = 20.0;
  double t_min_c = -10.0;
  double t_max_c = 140.0;
  std::uint16_t max_count = 16383;
  std::vector<HeatSource> sources = default_sources();

  void validate() const;
  static std::vector<HeatSource> default_sources();
};

/// Ideal (unrounded, clamped) count for a temperature, and its inverse.
double temperature_to_counts(double t_c, const SceneConfig& scene);
double counts_to_temperature(double counts, const SceneConfig& scene);

/// Resistive heater glued onto the board.
struct FaultSpec {
  double resistance_ohm = 25.0;
  double current_a = 0.15;
  double width = 12.0;  // full width at half maximum, scene units
  double height = 13.0;
  double x = 88.0;
  double y = 70.0;
  double coupling_c_per_w = 80.0 / 0.5625;

  double power_w() const { return current_a * current_a * resistance_ohm; }
};

enum class SplitKind { train, test };

SplitKind parse_split_kind(const std::string& name);

struct LoadStep {
  double time_s = 0.0;
  double current_a = 0.0;
};

struct LoadPattern {
  double step_s = 60.0;
  double duration_s = 1800.0;
  double current_min_a = 0.0;
  double current_max_a = 4.0;
  double frame_period_s = 3.0;

  std::size_t steps() const;
  std::size_t frames() const;
  static LoadPattern for_kind(SplitKind kind);
};

/// Piecewise-constant current schedule, one uniform draw per step.
std::vector<LoadStep> load_pattern(const LoadPattern& pattern, std::uint64_t seed);
std::vector<LoadStep> load_pattern(SplitKind kind, std::uint64_t seed);

/// Steady-state temperature on the scene grid.
Image steady_state_field(const SceneConfig& scene, double current_a, const FaultSpec* fault = nullptr);

/// First-order lag: target + (prev - target) * exp(-dt / tau).
Image step_response(const Image& prev, const Image& target, double dt_s, double tau_s);

/// Camera pose, sampled per frame. The similarity part acts about the frame
/// centre: zoom = base_zoom * s, then rotation, then a translation given as
/// a fraction of the frame size; perspective moves corners inward.
struct ViewpointPolicy {
  double base_zoom = 1.0;
  Range scale{1.0, 1.0};
  Range rotation_deg{0.0, 0.0};
  Range translation{0.0, 0.0};
  Range perspective{0.0, 0.0};

  static ViewpointPolicy train_default();
  static ViewpointPolicy test_default();
};

/// Scene -> camera transform.
Homography sample_viewpoint(const ViewpointPolicy& policy, std::size_t width, std::size_t height, Rng& rng);

struct ThermalFrame {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint16_t> counts;
  double time_s = 0.0;
  double current_a = 0.0;
  bool fault = false;
  double heater_current_a = 0.0;
  Homography viewpoint;  // scene -> camera
};

/// Warps the field into the camera frame (background at ambient), adds
/// Gaussian count noise, rounds and clamps to [0, max_count].
ThermalFrame render_frame(const Image& field, const Homography& viewpoint, const SceneConfig& scene,
                          double noise_counts, Rng& rng);

/// Counts scaled to [0, 1] by max_count.
Image frame_to_image(const ThermalFrame& frame, std::uint16_t max_count = 16383);

struct ThermalSplit {
  SplitKind kind = SplitKind::train;
  std::vector<ThermalFrame> frames;
};

ThermalSplit generate_split(const SceneConfig& scene, const LoadPattern& pattern, const FaultSpec* fault,
                            const ViewpointPolicy& policy, std::uint64_t seed);
ThermalSplit generate_split(const SceneConfig& scene, SplitKind kind, const FaultSpec* fault,
                            std::uint64_t seed);

/// frame_NNNN.pgm (16-bit, maxval max_count) plus manifest.jsonl with
/// path, t, current, label, heater_current and the row-major viewpoint matrix.
void write_split(const ThermalSplit& split, const std::filesystem::path& dir, std::uint16_t max_count = 16383);
/// Reads a directory written by write_split. Throws IoError when absent.
ThermalSplit read_split(const std::filesystem::path& dir);

}  // namespace thermocae
