#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "thermocae/config.hpp"

namespace thermocae {

/// Synthesized splits. Fault splits at different currents share one seed so
/// that only the heater differs between them.
ThermalSplit synth_train(const RunConfig& cfg);
ThermalSplit synth_test_normal(const RunConfig& cfg);
ThermalSplit synth_test_fault(const RunConfig& cfg, double heater_current);

/// Camera frames scaled to [0, 1].
std::vector<Image> split_images(const ThermalSplit& split, const SceneConfig& scene);
/// Camera frames scaled to [0, 1] and resized to the model input size.
std::vector<Image> model_inputs(const ThermalSplit& split, const RunConfig& cfg);

Dataset make_dataset(const RunConfig& cfg, const ThermalSplit& train_split, std::size_t n_total,
                     const AugmentStages& stages);

struct TrainedModel {
  CaeModel model;
  std::vector<EpochStats> history;
};

TrainedModel train_model(const RunConfig& cfg, const CaeConfig& arch, const Dataset& data,
                         const EpochCallback& on_epoch = {});

/// Reconstructs in batches and scores each image. When `maps` is given it
/// receives the first `keep_maps` anomaly maps.
std::vector<double> score_images(CaeModel& model, const std::vector<Image>& images, const EvalSection& eval,
                                 std::vector<Image>* maps = nullptr, std::size_t keep_maps = 0);

struct CurrentResult {
  double heater_current = 0.0;
  std::vector<double> fault_scores;
  RocCurve roc;
};

struct Evaluation {
  std::vector<double> normal_scores;
  std::vector<CurrentResult> currents;

  double auc_at(double heater_current) const;
};

using FaultInputs = std::vector<std::pair<double, std::vector<Image>>>;

Evaluation evaluate(CaeModel& model, const std::vector<Image>& normal_inputs, const FaultInputs& faults,
                    const EvalSection& eval);

/// Train one architecture on one dataset variant and evaluate it.
struct ExperimentResult {
  std::vector<EpochStats> history;
  Evaluation evaluation;
};

ExperimentResult run_experiment(const RunConfig& cfg, const CaeConfig& arch, const ThermalSplit& train_split,
                                std::size_t n_total, const AugmentStages& stages,
                                const std::vector<Image>& normal_inputs, const FaultInputs& faults,
                                const EpochCallback& on_epoch = {}, std::optional<CaeModel>* trained = nullptr);

// Artifact writers. Column orders are fixed.
/// split,index,label,current,heater_current,score
void write_scores_csv(const std::filesystem::path& path, const ThermalSplit& normal,
                      const std::vector<double>& normal_scores, const ThermalSplit& fault,
                      const std::vector<double>& fault_scores);
void write_auc_json(const std::filesystem::path& path, const Evaluation& ev, const EvalSection& eval,
                    std::size_t n_normal);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace thermocae
