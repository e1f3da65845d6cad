#include "thermocae/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "thermocae/ops.hpp"
#include "thermocae/rng.hpp"

namespace thermocae {

void CaeConfig::validate() const {
  if (num_layers < 2 || num_layers > 6)
    throw std::invalid_argument("model: num_layers must be in [2, 6], got " + std::to_string(num_layers));
  if (latent_dim < 8 || latent_dim > 128)
    throw std::invalid_argument("model: latent_dim must be in [8, 128], got " + std::to_string(latent_dim));
  if (input_size == 0 || input_size % (std::size_t{1} << num_layers) != 0)
    throw std::invalid_argument("model: input_size " + std::to_string(input_size) +
                                " is not divisible by 2^" + std::to_string(num_layers));
}

std::size_t CaeConfig::channels(std::size_t layer) const {
  return std::min<std::size_t>(std::size_t{32} << layer, 512);
}

std::size_t CaeConfig::flat_size() const {
  const std::size_t s = bottleneck_side();
  return channels(num_layers - 1) * s * s;
}

// Parameter layout, in order:
//   enc{i}.weight [C_i, C_{i-1}, 3, 3], enc{i}.bias      i = 0..L-1 (C_{-1} = 1)
//   latent.weight [F, D], latent.bias, expand.weight [D, F], expand.bias
//   dec{j}.weight [C_{L-1-j}, C_{L-2-j}, 3, 3], dec{j}.bias   j = 0..L-1
CaeModel CaeModel::build(const CaeConfig& config, std::uint64_t seed) {
  config.validate();
  CaeModel m;
  m.config_ = config;
  Rng rng(seed);
  auto add = [&](std::string name, Shape shape, double fan_in) {
    Tensor w(shape);
    const double std = std::sqrt(2.0 / fan_in);
    for (auto& v : w.data()) v = std * rng.normal();
    m.params_.push_back({name + ".weight", std::move(w), {}});
  };
  auto add_bias = [&](std::string name, std::size_t n) { m.params_.push_back({name + ".bias", Tensor({n}), {}}); };
  const std::size_t L = config.num_layers;
  auto ch = [&](long i) { return i < 0 ? std::size_t{1} : config.channels(static_cast<std::size_t>(i)); };
  for (std::size_t i = 0; i < L; ++i) {
    const std::size_t cin = ch(static_cast<long>(i) - 1), cout = ch(static_cast<long>(i));
    add("enc" + std::to_string(i), {cout, cin, 3, 3}, static_cast<double>(cin * 9));
    add_bias("enc" + std::to_string(i), cout);
  }
  const std::size_t F = config.flat_size(), D = config.latent_dim;
  add("latent", {F, D}, static_cast<double>(F));
  add_bias("latent", D);
  add("expand", {D, F}, static_cast<double>(D));
  add_bias("expand", F);
  for (std::size_t j = 0; j < L; ++j) {
    const long i = static_cast<long>(L - 1 - j);
    const std::size_t cin = ch(i), cout = ch(i - 1);
    // A stride-2 transposed conv feeds each output from ~k^2/4 input taps per channel.
    add("dec" + std::to_string(j), {cin, cout, 3, 3}, static_cast<double>(cin) * 9.0 / 4.0);
    add_bias("dec" + std::to_string(j), cout);
  }
  return m;
}

CaeModel::CaeModel(CaeConfig config, std::vector<Parameter> params)
    : config_(config), params_(std::move(params)) {
  config_.validate();
  check_layout();
}

void CaeModel::check_layout() const {
  CaeModel ref = build(config_, 0);
  if (ref.params_.size() != params_.size())
    throw std::invalid_argument("model: expected " + std::to_string(ref.params_.size()) + " parameters, got " +
                                std::to_string(params_.size()));
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (ref.params_[i].name != params_[i].name || ref.params_[i].value.shape() != params_[i].value.shape())
      throw std::invalid_argument("model: parameter " + std::to_string(i) + " is " + params_[i].name + " " +
                                  to_string(params_[i].value.shape()) + ", expected " + ref.params_[i].name +
                                  " " + to_string(ref.params_[i].value.shape()));
}

std::size_t CaeModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

Var CaeModel::bind(Graph& g, std::size_t index, bool track) {
  return track ? g.parameter(params_[index]) : g.constant(params_[index].value);
}

Var CaeModel::features(Graph& g, Var x, bool track) {
  const Shape& s = x.shape();
  if (s.size() != 4 || s[1] != 1 || s[2] != config_.input_size || s[3] != config_.input_size)
    throw ShapeError("model: expected input [N,1," + std::to_string(config_.input_size) + "," +
                     std::to_string(config_.input_size) + "], got " + to_string(s));
  Var h = x;
  for (std::size_t i = 0; i < config_.num_layers; ++i)
    h = relu(conv2d(h, bind(g, 2 * i, track), bind(g, 2 * i + 1, track)));
  return h;
}

Var CaeModel::code(Graph& g, Var x, bool track) {
  Var f = features(g, x, track);
  const std::size_t n = f.shape()[0], L = config_.num_layers;
  Var flat = reshape(f, {n, config_.flat_size()});
  return dense(flat, bind(g, 2 * L, track), bind(g, 2 * L + 1, track));
}

Var CaeModel::expand(Graph& g, Var z, bool track) {
  const std::size_t L = config_.num_layers, side = config_.bottleneck_side();
  if (z.shape().size() != 2 || z.shape()[1] != config_.latent_dim)
    throw ShapeError("model: latent code must be [N," + std::to_string(config_.latent_dim) + "], got " +
                     to_string(z.shape()));
  const std::size_t n = z.shape()[0];
  Var h = dense(z, bind(g, 2 * L + 2, track), bind(g, 2 * L + 3, track));
  h = relu(reshape(h, {n, config_.channels(L - 1), side, side}));
  const std::size_t base = 2 * L + 4;
  for (std::size_t j = 0; j < L; ++j) {
    h = conv_transpose2d(h, bind(g, base + 2 * j, track), bind(g, base + 2 * j + 1, track));
    h = j + 1 == L ? sigmoid(h) : relu(h);
  }
  return h;
}

Var CaeModel::encode_features(Graph& g, Var x) { return features(g, x, true); }
Var CaeModel::encode(Graph& g, Var x) { return code(g, x, true); }
Var CaeModel::decode(Graph& g, Var z) { return expand(g, z, true); }
Var CaeModel::forward(Graph& g, Var x) { return expand(g, code(g, x, true), true); }

Tensor CaeModel::reconstruct(const Tensor& x) {
  // Parameters enter as constants, so no backward closures are recorded.
  Graph g;
  return expand(g, code(g, g.constant(x), false), false).value();
}

}  // namespace thermocae
