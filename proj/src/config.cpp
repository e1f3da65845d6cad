#include "thermocae/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "thermocae/image.hpp"
#include "thermocae/rng.hpp"

namespace thermocae {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

[[noreturn]] void bad_type(const std::string& key, const char* expected) {
  throw ConfigError(key, "config key '" + key + "' must be " + expected);
}

void read_value(const json& v, const std::string& key, double& out) {
  if (!v.is_number()) bad_type(key, "a number");
  out = v.get<double>();
}
void read_value(const json& v, const std::string& key, std::size_t& out) {
  if (!v.is_number_unsigned()) bad_type(key, "a non-negative integer");
  out = v.get<std::size_t>();
}
void read_value(const json& v, const std::string& key, std::uint16_t& out) {
  std::size_t n = 0;
  read_value(v, key, n);
  if (n > 65535) bad_type(key, "at most 65535");
  out = static_cast<std::uint16_t>(n);
}
void read_value(const json& v, const std::string& key, bool& out) {
  if (!v.is_boolean()) bad_type(key, "a boolean");
  out = v.get<bool>();
}
void read_value(const json& v, const std::string& key, std::string& out) {
  if (!v.is_string()) bad_type(key, "a string");
  out = v.get<std::string>();
}
void read_value(const json& v, const std::string& key, Range& out) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    bad_type(key, "a [lo, hi] pair of numbers");
  out = {v[0].get<double>(), v[1].get<double>()};
}
template <typename T>
void read_value(const json& v, const std::string& key, std::vector<T>& out) {
  if (!v.is_array() || v.empty()) bad_type(key, "a nonempty array");
  std::vector<T> items(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) read_value(v[i], key + "[" + std::to_string(i) + "]", items[i]);
  out = std::move(items);
}
template <typename T>
void read_value(const json& v, const std::string& key, std::optional<T>& out) {
  T value{};
  read_value(v, key, value);
  out = value;
}
void read_seed(const json& v, const std::string& key, std::uint64_t& out) {
  if (!v.is_number_unsigned()) bad_type(key, "a non-negative integer");
  out = v.get<std::uint64_t>();
}

// Walks one JSON object, remembering which keys were consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) bad_type(path_.empty() ? std::string("<root>") : path_, "an object");
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (const json* v = find(key)) read_value(*v, join(path_, key), out);
  }
  void get_seed(const std::string& key, std::uint64_t& out) {
    if (const json* v = find(key)) read_seed(*v, join(path_, key), out);
  }
  void get_seed(const std::string& key, std::optional<std::uint64_t>& out) {
    if (const json* v = find(key)) {
      std::uint64_t s = 0;
      read_seed(*v, join(path_, key), s);
      out = s;
    }
  }
  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  std::string path(const std::string& key) const { return join(path_, key); }
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(join(path_, it.key()), "unknown config key '" + join(path_, it.key()) + "'");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename F>
void check(const std::string& key, F&& validate) {
  try {
    validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key, std::string("invalid config section '") + key + "': " + e.what());
  }
}

void parse_scene(Section s, RunConfig& c) {
  SceneConfig& sc = c.scene;
  s.get("width", sc.width);
  s.get("height", sc.height);
  s.get("ambient_c", sc.ambient_c);
  s.get("tau_s", sc.tau_s);
  s.get("noise_counts", sc.noise_counts);
  s.get("t_min_c", sc.t_min_c);
  s.get("t_max_c", sc.t_max_c);
  s.get("max_count", sc.max_count);
  if (const json* src = s.find("sources")) {
    if (!src->is_array()) bad_type(s.path("sources"), "an array");
    sc.sources.clear();
    for (std::size_t i = 0; i < src->size(); ++i) {
      Section e((*src)[i], s.path("sources") + "[" + std::to_string(i) + "]");
      HeatSource h;
      e.get("name", h.name);
      e.get("x", h.x);
      e.get("y", h.y);
      e.get("sigma", h.sigma);
      e.get("a", h.a);
      e.get("b", h.b);
      e.finish();
      sc.sources.push_back(h);
    }
  }
  if (const json* f = s.find("fault")) {
    Section e(*f, s.path("fault"));
    e.get("resistance_ohm", c.fault.resistance_ohm);
    e.get("width", c.fault.width);
    e.get("height", c.fault.height);
    e.get("x", c.fault.x);
    e.get("y", c.fault.y);
    e.get("coupling_c_per_w", c.fault.coupling_c_per_w);
    e.finish();
  }
  s.finish();
  check("scene", [&] { sc.validate(); });
}

void parse_augment(Section s, AugmentSection& a) {
  AugmentParams& p = a.params;
  s.get("pad_factor", p.pad_factor);
  s.get("rotation_deg", p.rotation_deg);
  s.get("perspective_scale", p.perspective_scale);
  s.get("crop_fraction", p.crop_fraction);
  s.get("brightness", p.brightness);
  s.get("contrast", p.contrast);
  s.get("out_size", p.out_size);
  s.get("fill", a.fill);
  s.get("n_total", a.n_total);
  if (const json* st = s.find("stages")) {
    Section e(*st, s.path("stages"));
    e.get("crop", p.stages.crop);
    e.get("rotation", p.stages.rotation);
    e.get("perspective", p.stages.perspective);
    e.get("brightness_contrast", p.stages.brightness_contrast);
    e.finish();
  }
  s.finish();
  check("augment", [&] {
    AugmentParams q = p;
    if (a.fill) q.fill = *a.fill;
    q.validate();
  });
}

void parse_model(Section s, CaeConfig& m) {
  s.get("num_layers", m.num_layers);
  s.get("latent_dim", m.latent_dim);
  s.get("input_size", m.input_size);
  s.finish();
  check("model", [&] { m.validate(); });
}

void parse_train(Section s, TrainSection& t) {
  TrainConfig& c = t.config;
  s.get("batch_size", c.batch_size);
  s.get("epochs", c.epochs);
  s.get("learning_rate", c.learning_rate);
  s.get("adam_beta1", c.adam_beta1);
  s.get("adam_beta2", c.adam_beta2);
  s.get("adam_eps", c.adam_eps);
  s.get("wall_clock", t.wall_clock);
  s.finish();
  check("train", [&] { c.validate(); });
}

void parse_eval(Section s, EvalSection& e) {
  std::string method = to_string(e.score_method);
  std::string cmap = e.colormap == Colormap::gray ? "gray" : "iron";
  s.get("score_method", method);
  s.get("smooth_k", e.smooth_k);
  s.get("heater_current", e.heater_current);
  s.get("heater_currents", e.heater_currents);
  s.get("colormap", cmap);
  s.get("heatmaps", e.heatmaps);
  s.get("sweep_layers", e.sweep_layers);
  s.get("sweep_latents", e.sweep_latents);
  s.get("ablate_counts", e.ablate_counts);
  s.get("ablate_stages", e.ablate_stages);
  s.finish();
  check("eval.score_method", [&] { e.score_method = parse_score_method(method); });
  check("eval.colormap", [&] { e.colormap = parse_colormap(cmap); });
  check("eval.ablate_stages", [&] {
    AugmentStages probe;
    for (const auto& name : e.ablate_stages) set_stage(probe, name, false);
  });
  if (e.smooth_k == 0) throw ConfigError("eval.smooth_k", "config key 'eval.smooth_k' must be >= 1");
  for (double i : e.heater_currents)
    if (!(i >= 0.0)) throw ConfigError("eval.heater_currents", "heater currents must be >= 0");
  if (!(e.heater_current >= 0.0)) throw ConfigError("eval.heater_current", "heater current must be >= 0");
}

void parse_paths(Section s, PathsSection& p) {
  s.get("data", p.data);
  s.get("checkpoint", p.checkpoint);
  s.finish();
}

void parse_seeds(Section s, SeedsSection& d) {
  s.get_seed("base", d.base);
  s.get_seed("scene_train", d.scene_train);
  s.get_seed("scene_test", d.scene_test);
  s.get_seed("scene_fault", d.scene_fault);
  s.get_seed("augment", d.augment);
  s.get_seed("init", d.init);
  s.get_seed("shuffle", d.shuffle);
  s.finish();
}

}  // namespace

std::uint64_t SeedsSection::get_scene_train() const { return scene_train.value_or(derive_seed(base, 1)); }
std::uint64_t SeedsSection::get_scene_test() const { return scene_test.value_or(derive_seed(base, 2)); }
std::uint64_t SeedsSection::get_scene_fault() const { return scene_fault.value_or(derive_seed(base, 3)); }
std::uint64_t SeedsSection::get_augment() const { return augment.value_or(derive_seed(base, 4)); }
std::uint64_t SeedsSection::get_init() const { return init.value_or(derive_seed(base, 5)); }
std::uint64_t SeedsSection::get_shuffle() const { return shuffle.value_or(derive_seed(base, 6)); }

AugmentParams RunConfig::augment_params() const {
  AugmentParams p = augment.params;
  p.fill = augment.fill ? *augment.fill : temperature_to_counts(scene.ambient_c, scene) / scene.max_count;
  return p;
}

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  Section s(root, "");
  if (const json* v = s.find("scene")) parse_scene(Section(*v, "scene"), c);
  if (const json* v = s.find("augment")) parse_augment(Section(*v, "augment"), c.augment);
  if (const json* v = s.find("model")) parse_model(Section(*v, "model"), c.model);
  if (const json* v = s.find("train")) parse_train(Section(*v, "train"), c.train);
  if (const json* v = s.find("eval")) parse_eval(Section(*v, "eval"), c.eval);
  if (const json* v = s.find("paths")) parse_paths(Section(*v, "paths"), c.paths);
  if (const json* v = s.find("seeds")) parse_seeds(Section(*v, "seeds"), c.seeds);
  s.finish();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const RunConfig& c) {
  auto range = [](const Range& r) { return ojson::array({r.lo, r.hi}); };
  ojson root;

  ojson& sc = root["scene"];
  sc["width"] = c.scene.width;
  sc["height"] = c.scene.height;
  sc["ambient_c"] = c.scene.ambient_c;
  sc["tau_s"] = c.scene.tau_s;
  sc["noise_counts"] = c.scene.noise_counts;
  sc["t_min_c"] = c.scene.t_min_c;
  sc["t_max_c"] = c.scene.t_max_c;
  sc["max_count"] = c.scene.max_count;
  sc["sources"] = ojson::array();
  for (const auto& h : c.scene.sources)
    sc["sources"].push_back({{"name", h.name}, {"x", h.x}, {"y", h.y}, {"sigma", h.sigma}, {"a", h.a}, {"b", h.b}});
  sc["fault"] = {{"resistance_ohm", c.fault.resistance_ohm}, {"width", c.fault.width},
                 {"height", c.fault.height},                 {"x", c.fault.x},
                 {"y", c.fault.y},                           {"coupling_c_per_w", c.fault.coupling_c_per_w}};

  const AugmentParams ap = c.augment_params();
  ojson& a = root["augment"];
  a["pad_factor"] = ap.pad_factor;
  a["rotation_deg"] = range(ap.rotation_deg);
  a["perspective_scale"] = range(ap.perspective_scale);
  a["crop_fraction"] = range(ap.crop_fraction);
  a["brightness"] = range(ap.brightness);
  a["contrast"] = range(ap.contrast);
  a["out_size"] = ap.out_size;
  a["fill"] = ap.fill;
  a["n_total"] = c.augment.n_total;
  a["stages"] = {{"crop", ap.stages.crop},
                 {"rotation", ap.stages.rotation},
                 {"perspective", ap.stages.perspective},
                 {"brightness_contrast", ap.stages.brightness_contrast}};

  root["model"] = {{"num_layers", c.model.num_layers}, {"latent_dim", c.model.latent_dim},
                   {"input_size", c.model.input_size}};

  const TrainConfig& t = c.train.config;
  root["train"] = {{"batch_size", t.batch_size},   {"epochs", t.epochs},         {"learning_rate", t.learning_rate},
                   {"adam_beta1", t.adam_beta1},   {"adam_beta2", t.adam_beta2}, {"adam_eps", t.adam_eps},
                   {"wall_clock", c.train.wall_clock}};

  const EvalSection& e = c.eval;
  root["eval"] = {{"score_method", to_string(e.score_method)},
                  {"smooth_k", e.smooth_k},
                  {"heater_current", e.heater_current},
                  {"heater_currents", e.heater_currents},
                  {"colormap", e.colormap == Colormap::gray ? "gray" : "iron"},
                  {"heatmaps", e.heatmaps},
                  {"sweep_layers", e.sweep_layers},
                  {"sweep_latents", e.sweep_latents},
                  {"ablate_counts", e.ablate_counts},
                  {"ablate_stages", e.ablate_stages}};

  root["paths"] = {{"data", c.paths.data}, {"checkpoint", c.paths.checkpoint}};

  const SeedsSection& s = c.seeds;
  root["seeds"] = {{"base", s.base},
                   {"scene_train", s.get_scene_train()},
                   {"scene_test", s.get_scene_test()},
                   {"scene_fault", s.get_scene_fault()},
                   {"augment", s.get_augment()},
                   {"init", s.get_init()},
                   {"shuffle", s.get_shuffle()}};
  return root.dump(2) + "\n";
}

}  // namespace thermocae
