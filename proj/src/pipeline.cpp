#include "thermocae/pipeline.hpp"

#include <cmath>
#include <numeric>

#include <json.hpp>

#include "thermocae/util.hpp"

namespace thermocae {

ThermalSplit synth_train(const RunConfig& cfg) {
  return generate_split(cfg.scene, SplitKind::train, nullptr, cfg.seeds.get_scene_train());
}

ThermalSplit synth_test_normal(const RunConfig& cfg) {
  return generate_split(cfg.scene, SplitKind::test, nullptr, cfg.seeds.get_scene_test());
}

ThermalSplit synth_test_fault(const RunConfig& cfg, double heater_current) {
  FaultSpec fault = cfg.fault;
  fault.current_a = heater_current;
  return generate_split(cfg.scene, SplitKind::test, &fault, cfg.seeds.get_scene_fault());
}

std::vector<Image> split_images(const ThermalSplit& split, const SceneConfig& scene) {
  std::vector<Image> out;
  out.reserve(split.frames.size());
  for (const auto& f : split.frames) out.push_back(frame_to_image(f, scene.max_count));
  return out;
}

std::vector<Image> model_inputs(const ThermalSplit& split, const RunConfig& cfg) {
  std::vector<Image> out = split_images(split, cfg.scene);
  const std::size_t s = cfg.model.input_size;
  for (auto& img : out) img = resize_bilinear(img, s, s);
  return out;
}

Dataset make_dataset(const RunConfig& cfg, const ThermalSplit& train_split, std::size_t n_total,
                     const AugmentStages& stages) {
  AugmentParams params = cfg.augment_params();
  params.stages = stages;
  params.out_size = cfg.model.input_size;
  return build_dataset(split_images(train_split, cfg.scene), n_total, params, cfg.seeds.get_augment());
}

TrainedModel train_model(const RunConfig& cfg, const CaeConfig& arch, const Dataset& data,
                         const EpochCallback& on_epoch) {
  TrainedModel out{CaeModel::build(arch, cfg.seeds.get_init()), {}};
  TrainConfig tc = cfg.train.config;
  tc.shuffle_seed = cfg.seeds.get_shuffle();
  out.history = train(out.model, data.train, data.validation, tc, {}, on_epoch);
  return out;
}

std::vector<double> score_images(CaeModel& model, const std::vector<Image>& images, const EvalSection& eval,
                                 std::vector<Image>* maps, std::size_t keep_maps) {
  constexpr std::size_t kBatch = 32;
  std::vector<double> scores(images.size());
  std::vector<std::size_t> idx(images.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (maps) maps->clear();
  for (std::size_t start = 0; start < images.size(); start += kBatch) {
    const std::size_t n = std::min(kBatch, images.size() - start);
    const Tensor out = model.reconstruct(make_batch(images, std::span(idx).subspan(start, n)));
    const std::size_t h = images[start].height, w = images[start].width;
#pragma omp parallel for schedule(static)
    for (std::size_t b = 0; b < n; ++b) {
      Image rec(w, h);
      std::copy(out.raw() + b * w * h, out.raw() + (b + 1) * w * h, rec.pixels.begin());
      scores[start + b] = anomaly_score(anomaly_map(images[start + b], rec), eval.score_method, eval.smooth_k);
    }
    if (maps) {
      for (std::size_t b = 0; b < n && maps->size() < keep_maps; ++b) {
        Image rec(w, h);
        std::copy(out.raw() + b * w * h, out.raw() + (b + 1) * w * h, rec.pixels.begin());
        maps->push_back(anomaly_map(images[start + b], rec));
      }
    }
  }
  return scores;
}

double Evaluation::auc_at(double heater_current) const {
  for (const auto& c : currents)
    if (c.heater_current == heater_current) return c.roc.auc;
  throw std::out_of_range("no evaluation at heater current " + format_real(heater_current));
}

Evaluation evaluate(CaeModel& model, const std::vector<Image>& normal_inputs, const FaultInputs& faults,
                    const EvalSection& eval) {
  Evaluation ev;
  ev.normal_scores = score_images(model, normal_inputs, eval);
  for (const auto& [current, images] : faults) {
    CurrentResult r;
    r.heater_current = current;
    r.fault_scores = score_images(model, images, eval);
    std::vector<double> scores = ev.normal_scores;
    scores.insert(scores.end(), r.fault_scores.begin(), r.fault_scores.end());
    std::vector<int> labels(ev.normal_scores.size(), 0);
    labels.resize(scores.size(), 1);
    r.roc = roc_curve(scores, labels);
    ev.currents.push_back(std::move(r));
  }
  return ev;
}

ExperimentResult run_experiment(const RunConfig& cfg, const CaeConfig& arch, const ThermalSplit& train_split,
                                std::size_t n_total, const AugmentStages& stages,
                                const std::vector<Image>& normal_inputs, const FaultInputs& faults,
                                const EpochCallback& on_epoch, std::optional<CaeModel>* trained) {
  ExperimentResult result;
  TrainedModel tm = [&] {
    const Dataset data = make_dataset(cfg, train_split, n_total, stages);
    return train_model(cfg, arch, data, on_epoch);
  }();
  result.history = std::move(tm.history);
  result.evaluation = evaluate(tm.model, normal_inputs, faults, cfg.eval);
  if (trained) trained->emplace(std::move(tm.model));
  return result;
}

void write_scores_csv(const std::filesystem::path& path, const ThermalSplit& normal,
                      const std::vector<double>& normal_scores, const ThermalSplit& fault,
                      const std::vector<double>& fault_scores) {
  auto os = open_text_output(path);
  os << "split,index,label,current,heater_current,score\n";
  auto rows = [&](const char* name, const ThermalSplit& s, const std::vector<double>& scores) {
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const ThermalFrame& f = s.frames[i];
      os << name << ',' << i << ',' << (f.fault ? 1 : 0) << ',' << format_real(f.current_a) << ','
         << format_real(f.heater_current_a) << ',' << format_real(scores[i]) << '\n';
    }
  };
  rows("normal", normal, normal_scores);
  rows("fault", fault, fault_scores);
  if (!os) throw IoError("write failed for " + path.string());
}

void write_auc_json(const std::filesystem::path& path, const Evaluation& ev, const EvalSection& eval,
                    std::size_t n_normal) {
  nlohmann::ordered_json j;
  j["score_method"] = to_string(eval.score_method);
  j["smooth_k"] = eval.smooth_k;
  j["n_normal"] = n_normal;
  j["results"] = nlohmann::ordered_json::array();
  for (const auto& c : ev.currents)
    j["results"].push_back({{"heater_current", c.heater_current},
                            {"n_anomalous", c.fault_scores.size()},
                            {"auc", c.roc.auc}});
  write_text(path, j.dump(2) + "\n");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto os = open_text_output(path);
  os << text;
  if (!os) throw IoError("write failed for " + path.string());
}

}  // namespace thermocae
