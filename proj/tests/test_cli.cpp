#include <doctest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "thermocae/checkpoint.hpp"
#include "thermocae/config.hpp"

#ifndef THERMOCAE_CLI_PATH
#error "THERMOCAE_CLI_PATH must point at the CLI executable"
#endif

namespace fs = std::filesystem;
using namespace thermocae;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "thermocae_cli_test";

struct Outcome {
  int code = -1;
  std::string err;
};

Outcome run(const std::string& args) {
  fs::create_directories(kRoot);
  const fs::path err = kRoot / "stderr.txt";
  const std::string cmd =
      std::string("\"") + THERMOCAE_CLI_PATH + "\" " + args + " > /dev/null 2> \"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream is(err);
  std::stringstream ss;
  ss << is.rdbuf();
  o.err = ss.str();
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("strict config parsing names the offending key") {
  try {
    parse_config(R"({"train": {"epochs": 3, "epoch": 4}})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "train.epoch");
  }
  CHECK_THROWS_AS(parse_config(R"({"model": {"num_layers": "four"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"augment": {"stages": {"zoom": false}}})"), ConfigError);
  CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
  const RunConfig c = parse_config(R"({"seeds": {"base": 9}, "model": {"latent_dim": 16}})");
  CHECK(c.model.latent_dim == 16);
  CHECK(c.model.num_layers == 5);
  const std::string echoed = config_to_json(c);
  CHECK(config_to_json(parse_config(echoed)) == echoed);
}

TEST_CASE("error exit codes") {
  const fs::path cfg = kRoot / "bad.json";
  write(cfg, R"({"scene": {"ambient": 21}})");
  Outcome o = run("synth --config \"" + cfg.string() + "\" --out \"" + (kRoot / "bad").string() + "\"");
  CHECK(o.code == 2);
  const auto msg = nlohmann::json::parse(o.err);
  CHECK(msg.at("key") == "scene.ambient");

  CHECK(run("train --layers 9 --out \"" + (kRoot / "bad").string() + "\"").code == 2);
  CHECK(run("train --disable zoom --out \"" + (kRoot / "bad").string() + "\"").code == 2);
  CHECK(run("frobnicate").code == 2);
  CHECK(run("synth --config \"" + (kRoot / "nope.json").string() + "\"").code == 3);
  o = run("eval --out \"" + (kRoot / "empty").string() + "\"");
  CHECK(o.code == 3);
  CHECK(nlohmann::json::parse(o.err).contains("message"));
  CHECK(run("train --out \"" + (kRoot / "empty").string() + "\"").code == 3);
}

TEST_CASE("perfectly separated evaluation reports AUC 1") {
  // A model whose output is flat at the ambient level: the saturated heater
  // leaves a far larger residual than any normal hotspot can.
  const fs::path out = kRoot / "separated";
  fs::remove_all(out);
  REQUIRE(run("synth --heater-current 0.3 --out \"" + out.string() + "\"").code == 0);
  CaeModel m = CaeModel::build(CaeConfig{}, 1);
  for (auto& p : m.parameters()) p.value.fill(0.0);
  const double level = 30.0 / 150.0;
  m.parameters().back().value.fill(std::log(level / (1.0 - level)));
  save_checkpoint(m, out / "checkpoint.cae");
  REQUIRE(run("eval --heater-current 0.3 --out \"" + out.string() + "\"").code == 0);
  const auto auc = nlohmann::json::parse(slurp(out / "eval" / "auc.json"));
  REQUIRE(auc.at("results").size() == 1);
  CHECK(auc["results"][0]["auc"].get<double>() == 1.0);
  CHECK(fs::exists(out / "config.eval.json"));
  CHECK(fs::exists(out / "README.md"));
}

TEST_CASE("same config and seeds give byte-identical artifacts") {
  const fs::path cfg = kRoot / "tiny.json";
  write(cfg, R"({"model": {"num_layers": 2, "latent_dim": 8},
                 "augment": {"n_total": 600},
                 "train": {"epochs": 1},
                 "eval": {"heater_currents": [0.15], "heatmaps": 1},
                 "seeds": {"base": 5}})");
  std::string first[5];
  const char* files[] = {"checkpoint.cae", "loss.csv", "eval/auc.json", "eval/scores_0.15.csv", "eval/roc_0.15.csv"};
  for (int rep = 0; rep < 2; ++rep) {
    const fs::path out = kRoot / ("det" + std::to_string(rep));
    fs::remove_all(out);
    const std::string common = " --config \"" + cfg.string() + "\" --out \"" + out.string() + "\"";
    REQUIRE(run("synth" + common).code == 0);
    REQUIRE(run("train" + common).code == 0);
    REQUIRE(run("eval" + common).code == 0);
    for (int k = 0; k < 5; ++k) {
      const std::string bytes = slurp(out / files[k]);
      CHECK(!bytes.empty());
      if (rep == 0) first[k] = bytes;
      else CHECK_MESSAGE(bytes == first[k], files[k]);
    }
    if (rep == 1) {
      CHECK(slurp(kRoot / "det0" / "config.train.json") == slurp(out / "config.train.json"));
      CHECK(slurp(kRoot / "det0" / "data" / "test_normal" / "manifest.jsonl") ==
            slurp(out / "data" / "test_normal" / "manifest.jsonl"));
    }
  }
  // Re-running from the echoed effective config reproduces the checkpoint.
  const fs::path echo = kRoot / "det2";
  fs::remove_all(echo);
  const std::string common = " --config \"" + (kRoot / "det0" / "config.train.json").string() + "\" --out \"" +
                             echo.string() + "\"";
  REQUIRE(run("synth" + common).code == 0);
  REQUIRE(run("train" + common).code == 0);
  CHECK(slurp(echo / "checkpoint.cae") == first[0]);
}

}  // TEST_SUITE
