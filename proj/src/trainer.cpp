#include "thermocae/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include "thermocae/ops.hpp"
#include "thermocae/rng.hpp"
#include "thermocae/util.hpp"

namespace thermocae {

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (!(learning_rate > 0.0) || !(adam_eps > 0.0))
    throw std::invalid_argument("train: learning_rate and adam_eps must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    throw std::invalid_argument("train: Adam betas must lie in [0, 1)");
}

void adam_step(std::span<Parameter> params, AdamState& state, const TrainConfig& config, std::size_t t) {
  if (t < 1) throw std::invalid_argument("adam_step: step index starts at 1");
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.value.shape(), 0.0);
      state.v.emplace_back(p.value.shape(), 0.0);
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adam_step: optimizer state does not match parameters");
  const double b1 = config.adam_beta1, b2 = config.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = params[k];
    if (p.grad.shape() != p.value.shape() || state.m[k].shape() != p.value.shape())
      throw ShapeError("adam_step: gradient shape mismatch for " + p.name);
    double* w = p.value.raw();
    const double* g = p.grad.raw();
    double* m = state.m[k].raw();
    double* v = state.v[k].raw();
    const std::size_t n = p.value.size();
#pragma omp parallel for simd if (n > 65536)
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double mhat = m[i] / c1, vhat = v[i] / c2;
      w[i] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.adam_eps);
    }
  }
}

Tensor make_batch(const std::vector<Image>& images, std::span<const std::size_t> indices) {
  if (indices.empty()) throw ShapeError("make_batch: empty batch");
  const Image& first = images.at(indices[0]);
  const std::size_t plane = first.width * first.height;
  Tensor t({indices.size(), 1, first.height, first.width});
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const Image& img = images.at(indices[b]);
    if (img.width != first.width || img.height != first.height)
      throw ShapeError("make_batch: images of different sizes");
    std::copy(img.pixels.begin(), img.pixels.end(), t.raw() + b * plane);
  }
  return t;
}

double validate(const Reconstructor& model, const std::vector<Image>& images, std::size_t batch_size,
                const SsimParams& ssim) {
  if (images.empty()) throw std::invalid_argument("validate: empty validation set");
  if (batch_size == 0) throw std::invalid_argument("validate: batch_size must be >= 1");
  std::vector<std::size_t> idx(images.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  double total = 0.0;
  for (std::size_t start = 0; start < images.size(); start += batch_size) {
    const std::size_t count = std::min(batch_size, images.size() - start);
    Graph g;
    Var x = g.constant(make_batch(images, std::span(idx).subspan(start, count)));
    Var m = ms_ssim(x, model(g, x), ssim);
    for (double v : m.value().data()) total += 1.0 - v;
  }
  return total / static_cast<double>(images.size());
}

double validate(CaeModel& model, const std::vector<Image>& images, std::size_t batch_size,
                const SsimParams& ssim) {
  // Constant parameters: no gradient tape, and the model cannot be touched.
  return validate(
      [&model](Graph& g, Var x) { return g.constant(model.reconstruct(x.value())); }, images, batch_size,
      ssim);
}

std::vector<EpochStats> train(CaeModel& model, const std::vector<Image>& train_set,
                              const std::vector<Image>& validation_set, const TrainConfig& config,
                              const SsimParams& ssim, const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.empty() || validation_set.empty())
    throw std::invalid_argument("train: training and validation sets must be nonempty");
  AdamState state;
  std::size_t step = 0;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<EpochStats> history;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(derive_seed(config.shuffle_seed, epoch));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
      const std::size_t count = std::min(config.batch_size, order.size() - start);
      Graph g;
      Var x = g.constant(make_batch(train_set, std::span(order).subspan(start, count)));
      Var loss = msssim_loss(x, model.forward(g, x), ssim);
      const double value = loss.value()[0];
      if (!std::isfinite(value))
        throw TrainingError("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch_index));
      g.backward(loss);
      adam_step(model.parameters(), state, config, ++step);
      loss_sum += value * static_cast<double>(count);
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(order.size());
    stats.val_loss = validate(model, validation_set, config.batch_size, ssim);
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    history.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return history;
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<EpochStats>& history, bool wall_clock) {
  auto os = open_text_output(path);
  os << "epoch,train_loss,val_loss,seconds\n";
  for (const auto& s : history)
    os << s.epoch << ',' << format_real(s.train_loss) << ',' << format_real(s.val_loss) << ','
       << (wall_clock ? format_real(s.seconds) : std::string("0")) << '\n';
  if (!os) throw IoError("write failed for " + path.string());
}

}  // namespace thermocae
