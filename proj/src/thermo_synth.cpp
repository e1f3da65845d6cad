#include "thermocae/thermo_synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "thermocae/util.hpp"

namespace thermocae {

namespace {

constexpr double kFwhmToSigma = 0.42466090014400953;  // 1 / (2 sqrt(2 ln 2))
constexpr std::uint64_t kPatternStream = 0x10ad;
constexpr std::uint64_t kFrameStream = 0xf4a3e;

double draw(Rng& rng, const Range& r) { return r.lo == r.hi ? r.lo : rng.uniform(r.lo, r.hi); }

// Unit-peak Gaussian sampled at pixel centres.
void add_gaussian(Image& field, double cx, double cy, double sx, double sy, double amplitude) {
  if (amplitude == 0.0) return;
  for (std::size_t y = 0; y < field.height; ++y) {
    const double dy = (static_cast<double>(y) + 0.5 - cy) / sy;
    for (std::size_t x = 0; x < field.width; ++x) {
      const double dx = (static_cast<double>(x) + 0.5 - cx) / sx;
      field.at(x, y) += amplitude * std::exp(-0.5 * (dx * dx + dy * dy));
    }
  }
}

}  // namespace

std::vector<HeatSource> SceneConfig::default_sources() {
  return {
      {"transformer", 62.0, 48.0, 11.0, 1.5, 1.2}, {"switch_high", 104.0, 40.0, 6.0, 2.0, 1.6},
      {"switch_low", 104.0, 62.0, 6.0, 2.0, 1.6},  {"capacitor_1", 36.0, 72.0, 8.0, 1.0, 0.5},
      {"capacitor_2", 58.0, 80.0, 7.0, 1.0, 0.5},  {"rectifier", 122.0, 78.0, 7.0, 2.5, 1.0},
  };
}

void SceneConfig::validate() const {
  if (width == 0 || height == 0) throw std::invalid_argument("scene: frame size must be positive");
  if (!(tau_s > 0.0)) throw std::invalid_argument("scene: tau_s must be positive");
  if (!(noise_counts >= 0.0)) throw std::invalid_argument("scene: noise_counts must be >= 0");
  if (!(t_max_c > t_min_c)) throw std::invalid_argument("scene: t_max_c must exceed t_min_c");
  if (max_count == 0) throw std::invalid_argument("scene: max_count must be positive");
  for (const auto& s : sources)
    if (!(s.sigma > 0.0) || s.a < 0.0 || s.b < 0.0)
      throw std::invalid_argument("scene: source '" + s.name + "' needs sigma > 0 and a, b >= 0");
}

double temperature_to_counts(double t_c, const SceneConfig& scene) {
  const double u = std::clamp((t_c - scene.t_min_c) / (scene.t_max_c - scene.t_min_c), 0.0, 1.0);
  return u * scene.max_count;
}

double counts_to_temperature(double counts, const SceneConfig& scene) {
  return scene.t_min_c + counts / scene.max_count * (scene.t_max_c - scene.t_min_c);
}

SplitKind parse_split_kind(const std::string& name) {
  if (name == "train") return SplitKind::train;
  if (name == "test") return SplitKind::test;
  throw std::invalid_argument("unknown split kind '" + name + "'");
}

std::size_t LoadPattern::steps() const {
  const double n = duration_s / step_s;
  if (!(step_s > 0.0) || std::abs(n - std::round(n)) > 1e-9 || n < 1.0)
    throw std::invalid_argument("load pattern: duration must be a positive multiple of the step interval");
  return static_cast<std::size_t>(std::llround(n));
}

std::size_t LoadPattern::frames() const {
  const double n = duration_s / frame_period_s;
  if (!(frame_period_s > 0.0) || std::abs(n - std::round(n)) > 1e-9 || n < 1.0)
    throw std::invalid_argument("load pattern: duration must be a positive multiple of the frame period");
  return static_cast<std::size_t>(std::llround(n));
}

LoadPattern LoadPattern::for_kind(SplitKind kind) {
  LoadPattern p;
  if (kind == SplitKind::test) {
    p.step_s = 10.0;
    p.duration_s = 180.0;
    p.frame_period_s = 1.0;
  }
  return p;
}

std::vector<LoadStep> load_pattern(const LoadPattern& pattern, std::uint64_t seed) {
  if (!(pattern.current_min_a >= 0.0 && pattern.current_max_a >= pattern.current_min_a))
    throw std::invalid_argument("load pattern: bad current range");
  Rng rng(derive_seed(seed, kPatternStream));
  const std::size_t n = pattern.steps();
  std::vector<LoadStep> steps(n);
  for (std::size_t i = 0; i < n; ++i)
    steps[i] = {static_cast<double>(i) * pattern.step_s,
                pattern.current_min_a + rng.uniform() * (pattern.current_max_a - pattern.current_min_a)};
  return steps;
}

std::vector<LoadStep> load_pattern(SplitKind kind, std::uint64_t seed) {
  return load_pattern(LoadPattern::for_kind(kind), seed);
}

Image steady_state_field(const SceneConfig& scene, double current_a, const FaultSpec* fault) {
  if (!(current_a >= 0.0)) throw std::invalid_argument("steady_state_field: current must be >= 0");
  Image field(scene.width, scene.height, scene.ambient_c);
  for (const auto& s : scene.sources)
    add_gaussian(field, s.x, s.y, s.sigma, s.sigma, s.a * current_a + s.b * current_a * current_a);
  if (fault) {
    if (!(fault->current_a >= 0.0)) throw std::invalid_argument("steady_state_field: heater current must be >= 0");
    add_gaussian(field, fault->x, fault->y, fault->width * kFwhmToSigma, fault->height * kFwhmToSigma,
                 fault->coupling_c_per_w * fault->power_w());
  }
  return field;
}

Image step_response(const Image& prev, const Image& target, double dt_s, double tau_s) {
  if (!(dt_s > 0.0)) throw std::invalid_argument("step_response: dt must be positive");
  if (!(tau_s > 0.0)) throw std::invalid_argument("step_response: tau must be positive");
  if (prev.width != target.width || prev.height != target.height)
    throw std::invalid_argument("step_response: field sizes differ");
  const double decay = std::exp(-dt_s / tau_s);
  Image out(target.width, target.height);
  for (std::size_t i = 0; i < out.pixels.size(); ++i)
    out.pixels[i] = target.pixels[i] + (prev.pixels[i] - target.pixels[i]) * decay;
  return out;
}

ViewpointPolicy ViewpointPolicy::train_default() {
  ViewpointPolicy p;
  p.scale = {0.98, 1.02};
  p.rotation_deg = {-2.0, 2.0};
  p.translation = {-0.015, 0.015};
  return p;
}

ViewpointPolicy ViewpointPolicy::test_default() {
  ViewpointPolicy p;
  p.base_zoom = 1.5;
  p.scale = {0.7, 1.3};
  p.rotation_deg = {-30.0, 30.0};
  p.translation = {-0.1, 0.1};
  p.perspective = {0.0, 0.05};
  return p;
}

Homography sample_viewpoint(const ViewpointPolicy& policy, std::size_t width, std::size_t height, Rng& rng) {
  const double w = static_cast<double>(width), h = static_cast<double>(height);
  const double zoom = policy.base_zoom * draw(rng, policy.scale);
  const double angle = draw(rng, policy.rotation_deg);
  const double tx = draw(rng, policy.translation) * w;
  const double ty = draw(rng, policy.translation) * h;
  const double pscale = draw(rng, policy.perspective);
  std::array<double, 8> s{};
  for (auto& v : s) v = rng.uniform() * pscale;

  const Homography similarity = Homography::translation(w / 2.0 + tx, h / 2.0 + ty) *
                                Homography::rotation(angle, {0.0, 0.0}) * Homography::scaling(zoom, zoom) *
                                Homography::translation(-w / 2.0, -h / 2.0);
  if (pscale == 0.0) return similarity;
  const std::array<Point2, 4> corners{Point2{0, 0}, Point2{w, 0}, Point2{w, h}, Point2{0, h}};
  const std::array<Point2, 4> moved{Point2{s[0] * w, s[1] * h}, Point2{w - s[2] * w, s[3] * h},
                                    Point2{w - s[4] * w, h - s[5] * h}, Point2{s[6] * w, h - s[7] * h}};
  return Homography::from_points(corners, moved) * similarity;
}

ThermalFrame render_frame(const Image& field, const Homography& viewpoint, const SceneConfig& scene,
                          double noise_counts, Rng& rng) {
  if (!viewpoint.invertible()) throw DegenerateTransform("render_frame: degenerate viewpoint");
  const Image camera = warp_bilinear(field, viewpoint.inverse(), scene.width, scene.height, scene.ambient_c);
  ThermalFrame f;
  f.width = scene.width;
  f.height = scene.height;
  f.viewpoint = viewpoint;
  f.counts.resize(camera.pixels.size());
  const double top = scene.max_count;
  for (std::size_t i = 0; i < camera.pixels.size(); ++i) {
    double c = temperature_to_counts(camera.pixels[i], scene);
    if (noise_counts > 0.0) c += noise_counts * rng.normal();
    f.counts[i] = static_cast<std::uint16_t>(std::clamp(std::round(c), 0.0, top));
  }
  return f;
}

Image frame_to_image(const ThermalFrame& frame, std::uint16_t max_count) {
  Image img(frame.width, frame.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    img.pixels[i] = std::min(1.0, static_cast<double>(frame.counts[i]) / max_count);
  return img;
}

ThermalSplit generate_split(const SceneConfig& scene, const LoadPattern& pattern, const FaultSpec* fault,
                            const ViewpointPolicy& policy, std::uint64_t seed) {
  scene.validate();
  const auto steps = load_pattern(pattern, seed);
  const std::size_t n_frames = pattern.frames();
  ThermalSplit split;
  split.frames.reserve(n_frames);

  auto current_at = [&](double t) {
    const auto k = static_cast<std::size_t>(std::floor(t / pattern.step_s + 1e-9));
    return steps[std::min(k, steps.size() - 1)].current_a;
  };
  Image field = steady_state_field(scene, steps.front().current_a, fault);
  for (std::size_t k = 0; k < n_frames; ++k) {
    const double t = static_cast<double>(k) * pattern.frame_period_s;
    if (k > 0) {
      // The current in force over the last interval started at its left end.
      const double prev_t = t - pattern.frame_period_s;
      field = step_response(field, steady_state_field(scene, current_at(prev_t), fault), pattern.frame_period_s,
                            scene.tau_s);
    }
    Rng rng(derive_seed(derive_seed(seed, kFrameStream), k));
    const Homography view = sample_viewpoint(policy, scene.width, scene.height, rng);
    ThermalFrame frame = render_frame(field, view, scene, scene.noise_counts, rng);
    frame.time_s = t;
    frame.current_a = current_at(t);
    frame.fault = fault != nullptr;
    frame.heater_current_a = fault ? fault->current_a : 0.0;
    split.frames.push_back(std::move(frame));
  }
  return split;
}

ThermalSplit generate_split(const SceneConfig& scene, SplitKind kind, const FaultSpec* fault, std::uint64_t seed) {
  const auto policy = kind == SplitKind::train ? ViewpointPolicy::train_default() : ViewpointPolicy::test_default();
  ThermalSplit s = generate_split(scene, LoadPattern::for_kind(kind), fault, policy, seed);
  s.kind = kind;
  return s;
}

void write_split(const ThermalSplit& split, const std::filesystem::path& dir, std::uint16_t max_count) {
  std::filesystem::create_directories(dir);
  auto manifest = open_text_output(dir / "manifest.jsonl");
  for (std::size_t k = 0; k < split.frames.size(); ++k) {
    const ThermalFrame& f = split.frames[k];
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04zu.pgm", k);
    write_pgm(dir / name, f.width, f.height, f.counts, max_count);
    nlohmann::ordered_json line;
    line["path"] = name;
    line["split"] = split.kind == SplitKind::train ? "train" : "test";
    line["t"] = f.time_s;
    line["current"] = f.current_a;
    line["label"] = f.fault ? 1 : 0;
    line["heater_current"] = f.heater_current_a;
    line["viewpoint"] = f.viewpoint.matrix();
    manifest << line.dump() << '\n';
  }
  if (!manifest) throw IoError("write failed for " + (dir / "manifest.jsonl").string());
}

ThermalSplit read_split(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.jsonl";
  std::ifstream is(path);
  if (!is) throw IoError("missing split manifest " + path.string());
  ThermalSplit split;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(is, text)) {
    ++line_no;
    if (text.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(text);
      split.kind = parse_split_kind(j.at("split").get<std::string>());
      const GrayImage16 img = read_pgm(dir / j.at("path").get<std::string>());
      ThermalFrame f;
      f.width = img.width;
      f.height = img.height;
      f.counts = img.data;
      f.time_s = j.at("t").get<double>();
      f.current_a = j.at("current").get<double>();
      f.fault = j.at("label").get<int>() == 1;
      f.heater_current_a = j.at("heater_current").get<double>();
      f.viewpoint = Homography(j.at("viewpoint").get<std::array<double, 9>>());
      split.frames.push_back(std::move(f));
    } catch (const nlohmann::json::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (split.frames.empty()) throw IoError("split manifest " + path.string() + " lists no frames");
  return split;
}

}  // namespace thermocae
