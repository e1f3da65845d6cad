// thermocae: synthesize thermal data, augment, train the autoencoder,
// evaluate anomaly detection, and run sweeps and ablations.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "thermocae/checkpoint.hpp"
#include "thermocae/pipeline.hpp"
#include "thermocae/util.hpp"

namespace fs = std::filesystem;
using namespace thermocae;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitMissing = 3;

struct MissingInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void emit_error(const std::string& kind, const std::string& message, const std::string& key = "") {
  nlohmann::ordered_json j;
  j["error"] = kind;
  if (!key.empty()) j["key"] = key;
  j["message"] = message;
  std::cerr << j.dump() << std::endl;
}

struct Options {
  std::string config_path;
  std::string out = "run";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> layers;
  std::optional<std::size_t> latent;
  std::optional<std::size_t> n_aug;
  std::optional<double> heater_current;
  std::vector<std::string> disable;
};

struct Context {
  RunConfig cfg;
  fs::path out;
  fs::path data;
  fs::path checkpoint;
};

const char* kReadme = R"(# Run directory

Files are plain text unless noted. Columns appear in the order listed.

- `config.<command>.json`: effective configuration for that command. Passing it back
  with `--config` reproduces the outputs byte for byte.
- `data/<split>/manifest.jsonl`: one JSON object per frame with keys
  path, split, t, current, label, heater_current, viewpoint (row-major 3x3,
  scene to camera). Frames are 16-bit binary PGM with maxval 16383.
- `dataset/manifest.jsonl`: index, source, original, split, angle_deg,
  perspective_scale, crop_fraction, brightness, contrast. Images are 16-bit PGM scaled to 65535.
- `loss.csv`: epoch,train_loss,val_loss,seconds
- `checkpoint.cae`: binary model checkpoint.
- `eval/scores_<current>.csv`: split,index,label,current,heater_current,score
- `eval/roc_<current>.csv`: threshold,fpr,tpr
- `eval/auc.json`: score_method, smooth_k, n_normal, results[heater_current, n_anomalous, auc]
- `eval/heatmaps/`: 8-bit PGM (gray) or PPM (iron) renderings, min-max scaled per image.
- `sweep/sweep.csv`: num_layers,latent_dim,final_train_loss,final_val_loss,auc
- `sweep/L<layers>_D<latent>/loss.csv`: as loss.csv
- `ablate/counts.csv`: n_aug,final_val_loss,auc
- `ablate/stages.csv`: disabled_stage,final_val_loss,auc,auc_drop
)";

std::string current_tag(double current) { return format_real(current); }

fs::path fault_dir(const Context& ctx, double current) { return ctx.data / ("test_fault_" + current_tag(current)); }

ThermalSplit require_split(const fs::path& dir) {
  if (!fs::exists(dir / "manifest.jsonl")) throw MissingInput("missing input split " + dir.string() + " (run synth first)");
  return read_split(dir);
}

Context make_context(const Options& o, const std::string& command) {
  Context ctx;
  ctx.cfg = o.config_path.empty() ? RunConfig{} : [&] {
    if (!fs::exists(o.config_path)) throw MissingInput("config file not found: " + o.config_path);
    return load_config(o.config_path);
  }();
  RunConfig& c = ctx.cfg;
  if (o.seed) c.seeds.base = *o.seed;
  if (o.layers) {
    c.model.num_layers = *o.layers;
    c.eval.sweep_layers = {*o.layers};
  }
  if (o.latent) {
    c.model.latent_dim = *o.latent;
    c.eval.sweep_latents = {*o.latent};
  }
  try {
    c.model.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(o.layers ? "model.num_layers" : "model.latent_dim", e.what());
  }
  if (o.n_aug) {
    c.augment.n_total = *o.n_aug;
    c.eval.ablate_counts = {*o.n_aug};
  }
  if (o.heater_current) {
    if (!(*o.heater_current >= 0.0)) throw ConfigError("eval.heater_current", "heater current must be >= 0");
    c.eval.heater_current = *o.heater_current;
    c.eval.heater_currents = {*o.heater_current};
  }
  if (!o.disable.empty()) {
    for (const auto& stage : o.disable) {
      try {
        if (command == "ablate") {
          AugmentStages probe;
          set_stage(probe, stage, false);
        } else {
          set_stage(c.augment.params.stages, stage, false);
        }
      } catch (const std::invalid_argument& e) {
        throw ConfigError("augment.stages." + stage, e.what());
      }
    }
    if (command == "ablate") c.eval.ablate_stages = o.disable;
  }
  ctx.out = o.out;
  ctx.data = c.paths.data.empty() ? ctx.out / "data" : fs::path(c.paths.data);
  ctx.checkpoint = c.paths.checkpoint.empty() ? ctx.out / "checkpoint.cae" : fs::path(c.paths.checkpoint);
  fs::create_directories(ctx.out);
  write_text(ctx.out / ("config." + command + ".json"), config_to_json(c));
  write_text(ctx.out / "README.md", kReadme);
  return ctx;
}

void log_epoch(const EpochStats& s) {
  std::printf("epoch %zu train_loss %.6f val_loss %.6f\n", s.epoch, s.train_loss, s.val_loss);
  std::fflush(stdout);
}

int cmd_synth(const Context& ctx) {
  write_split(synth_train(ctx.cfg), ctx.data / "train", ctx.cfg.scene.max_count);
  write_split(synth_test_normal(ctx.cfg), ctx.data / "test_normal", ctx.cfg.scene.max_count);
  for (double i : ctx.cfg.eval.heater_currents)
    write_split(synth_test_fault(ctx.cfg, i), fault_dir(ctx, i), ctx.cfg.scene.max_count);
  std::printf("synth: wrote splits to %s\n", ctx.data.string().c_str());
  return 0;
}

int cmd_augment(const Context& ctx) {
  const ThermalSplit train_split = require_split(ctx.data / "train");
  const Dataset ds = make_dataset(ctx.cfg, train_split, ctx.cfg.augment.n_total, ctx.cfg.augment.params.stages);
  const fs::path dir = ctx.out / "dataset";
  auto manifest = open_text_output(dir / "manifest.jsonl");
  auto emit = [&](const std::vector<Image>& images, const std::vector<std::size_t>& index, const char* split) {
    for (std::size_t k = 0; k < images.size(); ++k) {
      const DatasetRecord& r = ds.records[index[k]];
      char name[48];
      std::snprintf(name, sizeof name, "%s/img_%05zu.pgm", split, index[k]);
      const GrayImage16 q = quantize(images[k], 65535);
      write_pgm(dir / name, q.width, q.height, q.data, q.maxval);
      nlohmann::ordered_json j;
      j["path"] = name;
      j["index"] = index[k];
      j["source"] = r.source;
      j["original"] = r.original;
      j["split"] = split;
      j["angle_deg"] = r.aug.angle_deg;
      j["perspective_scale"] = r.aug.perspective_scale;
      j["crop_fraction"] = r.aug.crop_fraction;
      j["brightness"] = r.aug.brightness;
      j["contrast"] = r.aug.contrast;
      manifest << j.dump() << '\n';
    }
  };
  emit(ds.train, ds.train_index, "train");
  emit(ds.validation, ds.validation_index, "validation");
  std::printf("augment: %zu train, %zu validation images in %s\n", ds.train.size(), ds.validation.size(),
              dir.string().c_str());
  return 0;
}

int cmd_train(const Context& ctx) {
  const ThermalSplit train_split = require_split(ctx.data / "train");
  const Dataset ds = make_dataset(ctx.cfg, train_split, ctx.cfg.augment.n_total, ctx.cfg.augment.params.stages);
  const TrainedModel tm = train_model(ctx.cfg, ctx.cfg.model, ds, log_epoch);
  save_checkpoint(tm.model, ctx.checkpoint);
  write_loss_csv(ctx.out / "loss.csv", tm.history, ctx.cfg.train.wall_clock);
  std::printf("train: checkpoint %s\n", ctx.checkpoint.string().c_str());
  return 0;
}

FaultInputs load_faults(const Context& ctx, const std::vector<double>& currents, std::vector<ThermalSplit>* splits) {
  FaultInputs faults;
  for (double i : currents) {
    ThermalSplit s = require_split(fault_dir(ctx, i));
    faults.emplace_back(i, model_inputs(s, ctx.cfg));
    if (splits) splits->push_back(std::move(s));
  }
  return faults;
}

int cmd_eval(const Context& ctx) {
  if (!fs::exists(ctx.checkpoint)) throw MissingInput("checkpoint not found: " + ctx.checkpoint.string());
  CaeModel model = load_checkpoint(ctx.checkpoint);
  if (model.config().input_size != ctx.cfg.model.input_size)
    throw ConfigError("model.input_size", "checkpoint input size differs from the configured input size");
  const EvalSection& ev = ctx.cfg.eval;
  const ThermalSplit normal = require_split(ctx.data / "test_normal");
  std::vector<ThermalSplit> fault_splits;
  const std::vector<Image> normal_inputs = model_inputs(normal, ctx.cfg);
  const FaultInputs faults = load_faults(ctx, ev.heater_currents, &fault_splits);

  const Evaluation result = evaluate(model, normal_inputs, faults, ev);
  const fs::path dir = ctx.out / "eval";
  for (std::size_t k = 0; k < result.currents.size(); ++k) {
    const CurrentResult& r = result.currents[k];
    const std::string tag = current_tag(r.heater_current);
    write_scores_csv(dir / ("scores_" + tag + ".csv"), normal, result.normal_scores, fault_splits[k], r.fault_scores);
    write_roc_csv(dir / ("roc_" + tag + ".csv"), r.roc);
    std::printf("eval: heater %s A auc %.6f\n", tag.c_str(), r.roc.auc);
  }
  write_auc_json(dir / "auc.json", result, ev, normal_inputs.size());

  if (ev.heatmaps > 0) {
    const char* ext = ev.colormap == Colormap::gray ? ".pgm" : ".ppm";
    auto render = [&](const std::vector<Image>& inputs, const std::string& prefix) {
      std::vector<Image> maps;
      score_images(model, std::vector<Image>(inputs.begin(), inputs.begin() + std::min(ev.heatmaps, inputs.size())),
                   ev, &maps, ev.heatmaps);
      for (std::size_t i = 0; i < maps.size(); ++i) {
        char idx[16];
        std::snprintf(idx, sizeof idx, "_%03zu", i);
        export_heatmap(inputs[i], dir / "heatmaps" / (prefix + idx + "_input" + ext), ev.colormap);
        export_heatmap(maps[i], dir / "heatmaps" / (prefix + idx + "_map" + ext), ev.colormap);
      }
    };
    render(normal_inputs, "normal");
    for (const auto& [current, inputs] : faults) render(inputs, "fault_" + current_tag(current));
  }
  return 0;
}

double final_val(const std::vector<EpochStats>& h) { return h.empty() ? 0.0 : h.back().val_loss; }

int cmd_sweep(const Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const ThermalSplit train_split = require_split(ctx.data / "train");
  const std::vector<Image> normal_inputs = model_inputs(require_split(ctx.data / "test_normal"), c);
  const FaultInputs faults = load_faults(ctx, {c.eval.heater_current}, nullptr);
  const fs::path dir = ctx.out / "sweep";
  auto table = open_text_output(dir / "sweep.csv");
  table << "num_layers,latent_dim,final_train_loss,final_val_loss,auc\n";
  for (std::size_t layers : c.eval.sweep_layers)
    for (std::size_t latent : c.eval.sweep_latents) {
      CaeConfig arch = c.model;
      arch.num_layers = layers;
      arch.latent_dim = latent;
      try {
        arch.validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError("eval.sweep_layers", e.what());
      }
      std::printf("sweep: layers %zu latent %zu\n", layers, latent);
      const ExperimentResult r =
          run_experiment(c, arch, train_split, c.augment.n_total, c.augment.params.stages, normal_inputs, faults, log_epoch);
      write_loss_csv(dir / ("L" + std::to_string(layers) + "_D" + std::to_string(latent)) / "loss.csv", r.history,
                     c.train.wall_clock);
      table << layers << ',' << latent << ',' << format_real(r.history.back().train_loss) << ','
            << format_real(final_val(r.history)) << ',' << format_real(r.evaluation.currents.front().roc.auc) << '\n';
      table.flush();
    }
  return 0;
}

int cmd_ablate(const Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const ThermalSplit train_split = require_split(ctx.data / "train");
  const std::vector<Image> normal_inputs = model_inputs(require_split(ctx.data / "test_normal"), c);
  const FaultInputs faults = load_faults(ctx, {c.eval.heater_current}, nullptr);
  const fs::path dir = ctx.out / "ablate";

  auto counts = open_text_output(dir / "counts.csv");
  counts << "n_aug,final_val_loss,auc\n";
  for (std::size_t n : c.eval.ablate_counts) {
    std::printf("ablate: n_aug %zu\n", n);
    const ExperimentResult r =
        run_experiment(c, c.model, train_split, n, c.augment.params.stages, normal_inputs, faults, log_epoch);
    counts << n << ',' << format_real(final_val(r.history)) << ',' << format_real(r.evaluation.currents.front().roc.auc)
           << '\n';
    counts.flush();
  }

  auto stages = open_text_output(dir / "stages.csv");
  stages << "disabled_stage,final_val_loss,auc,auc_drop\n";
  std::printf("ablate: baseline\n");
  const ExperimentResult base =
      run_experiment(c, c.model, train_split, c.augment.n_total, c.augment.params.stages, normal_inputs, faults, log_epoch);
  const double base_auc = base.evaluation.currents.front().roc.auc;
  stages << "none," << format_real(final_val(base.history)) << ',' << format_real(base_auc) << ",0\n";
  for (const auto& stage : c.eval.ablate_stages) {
    std::printf("ablate: without %s\n", stage.c_str());
    AugmentStages st = c.augment.params.stages;
    set_stage(st, stage, false);
    const ExperimentResult r = run_experiment(c, c.model, train_split, c.augment.n_total, st, normal_inputs, faults, log_epoch);
    const double auc = r.evaluation.currents.front().roc.auc;
    stages << stage << ',' << format_real(final_val(r.history)) << ',' << format_real(auc) << ','
           << format_real(base_auc - auc) << '\n';
    stages.flush();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Thermal-image anomaly detection with a convolutional autoencoder"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON run configuration");
    sub->add_option("--out", o.out, "Run directory")->capture_default_str();
    sub->add_option("--seed", o.seed, "Base seed");
  };
  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Context&);
  };
  const Command commands[] = {
      {"synth", "Generate train, normal test and faulty test splits", cmd_synth},
      {"augment", "Build the augmented training dataset", cmd_augment},
      {"train", "Train the autoencoder; writes checkpoint and loss curve", cmd_train},
      {"eval", "Score test splits; writes scores, ROC, AUC and heatmaps", cmd_eval},
      {"sweep", "Grid over encoder depth and latent size", cmd_sweep},
      {"ablate", "Augmented-image counts and leave-one-stage-out runs", cmd_ablate},
  };
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    add_common(sub);
    sub->add_option("--layers", o.layers, "Number of encoder layers");
    sub->add_option("--latent", o.latent, "Latent dimension");
    sub->add_option("--n-aug", o.n_aug, "Total augmented images");
    sub->add_option("--heater-current", o.heater_current, "Heater current in A");
    sub->add_option("--disable", o.disable, "Augmentation stage to disable (repeatable)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_error("usage", e.what());
    return kExitConfig;
  }

  try {
    for (const auto& c : commands)
      if (app.got_subcommand(c.name)) return c.run(make_context(o, c.name));
  } catch (const ConfigError& e) {
    emit_error("config", e.what(), e.key());
    return kExitConfig;
  } catch (const MissingInput& e) {
    emit_error("missing_input", e.what());
    return kExitMissing;
  } catch (const std::exception& e) {
    emit_error("runtime", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}
