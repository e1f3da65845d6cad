#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "thermocae/checkpoint.hpp"
#include "thermocae/rng.hpp"
#include "thermocae/trainer.hpp"

using namespace thermocae;

namespace {

std::vector<Image> toy_images(std::size_t n, std::size_t side, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Image> out;
  for (std::size_t k = 0; k < n; ++k) {
    Image img(side, side);
    const double cx = rng.uniform(20, side - 20.0), cy = rng.uniform(20, side - 20.0), a = rng.uniform(0.3, 0.7);
    for (std::size_t y = 0; y < side; ++y)
      for (std::size_t x = 0; x < side; ++x) {
        const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        img.at(x, y) = 0.2 + a * std::exp(-d2 / 200.0);
      }
    out.push_back(std::move(img));
  }
  return out;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("adam first step by hand") {
  TrainConfig c;
  std::vector<Parameter> p{{"w", Tensor({3}, std::vector<double>{1.0, -2.0, 0.5}), Tensor({3}, std::vector<double>{0.2, -3.0, 0.0})}};
  AdamState s;
  adam_step(p, s, c, 1);
  // t = 1: m_hat = g, v_hat = g^2, update = lr * g / (|g| + eps).
  CHECK(p[0].value[0] == doctest::Approx(1.0 - 1e-3 * 0.2 / (0.2 + 1e-8)).epsilon(1e-14));
  CHECK(p[0].value[1] == doctest::Approx(-2.0 + 1e-3 * 3.0 / (3.0 + 1e-8)).epsilon(1e-14));
  CHECK(p[0].value[2] == 0.5);
  CHECK_THROWS(adam_step(p, s, c, 0));
}

TEST_CASE("adam zero gradient and constant gradient limits") {
  TrainConfig c;
  std::vector<Parameter> p{{"w", Tensor({2}, 1.0), Tensor({2}, std::vector<double>{0.5, -4.0})}};
  AdamState s;
  for (std::size_t t = 1; t <= 2000; ++t) {
    const Tensor before = p[0].value;
    adam_step(p, s, c, t);
    if (t > 1000) {
      CHECK(std::abs((p[0].value[0] - before[0]) + 1e-3) < 1e-9);
      CHECK(std::abs((p[0].value[1] - before[1]) - 1e-3) < 1e-9);
    }
  }
  p[0].grad.fill(0.0);
  const Tensor before = p[0].value;
  const double m0 = s.m[0][0];
  adam_step(p, s, c, 2001);
  CHECK(std::abs(s.m[0][0]) < std::abs(m0));
  // With zero gradient the step uses only the decayed moments; a fresh state gives no motion.
  AdamState fresh;
  std::vector<Parameter> q{{"w", Tensor({2}, 1.0), Tensor({2}, 0.0)}};
  adam_step(q, fresh, c, 1);
  CHECK(q[0].value == Tensor({2}, 1.0));
  std::vector<Parameter> wrong{{"w", Tensor({3}, 1.0), Tensor({2}, 0.0)}};
  AdamState s2;
  CHECK_THROWS_AS(adam_step(wrong, s2, c, 1), ShapeError);
}

TEST_CASE("config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.batch_size = 0;
  CHECK_THROWS(c.validate());
  c = TrainConfig{};
  c.learning_rate = -1;
  CHECK_THROWS(c.validate());
}

TEST_CASE("identity reconstructor has zero loss; validation is pure") {
  const auto imgs = toy_images(5, 96, 1);
  const double l = validate([](Graph&, Var x) { return x; }, imgs, 2);
  CHECK(std::abs(l) < 1e-9);
  CaeModel m = CaeModel::build(CaeConfig{3, 8, 96}, 1);
  const auto before = m.parameters();
  const double v1 = validate(m, imgs, 2), v2 = validate(m, imgs, 4);
  CHECK(v1 == validate(m, imgs, 2));
  CHECK(std::abs(v1 - v2) < 1e-12);
  CHECK((v1 >= 0.0 && v1 <= 1.0));
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(before[i].value == m.parameters()[i].value);
  CHECK_THROWS(validate(m, {}, 2));
}

TEST_CASE("short training lowers the loss and is reproducible") {
  const auto train_set = toy_images(10, 96, 2), val_set = toy_images(4, 96, 3);
  TrainConfig c;
  c.batch_size = 4;
  c.epochs = 3;
  c.shuffle_seed = 7;
  c.learning_rate = 2e-3;
  CaeModel a = CaeModel::build(CaeConfig{3, 16, 96}, 3);
  CaeModel b = CaeModel::build(CaeConfig{3, 16, 96}, 3);
  const auto ha = train(a, train_set, val_set, c);
  const auto hb = train(b, train_set, val_set, c);
  REQUIRE(ha.size() == 3);
  CHECK(ha.back().train_loss < ha.front().train_loss);
  for (const auto& e : ha) CHECK((e.train_loss >= 0.0 && e.train_loss <= 1.0 && e.val_loss >= 0.0 && e.val_loss <= 1.0));
  CHECK(serialize_checkpoint(a) == serialize_checkpoint(b));
  for (std::size_t i = 0; i < ha.size(); ++i) {
    CHECK(ha[i].train_loss == hb[i].train_loss);
    CHECK(ha[i].val_loss == hb[i].val_loss);
  }

  const auto dir = std::filesystem::temp_directory_path() / "thermocae_trainer_test";
  write_loss_csv(dir / "a.csv", ha, false);
  write_loss_csv(dir / "b.csv", hb, false);
  std::ifstream fa(dir / "a.csv"), fb(dir / "b.csv");
  const std::string sa{std::istreambuf_iterator<char>(fa), {}}, sb{std::istreambuf_iterator<char>(fb), {}};
  CHECK(sa == sb);
  CHECK(sa.rfind("epoch,train_loss,val_loss,seconds\n", 0) == 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("empty data and non-finite loss fail loudly") {
  CaeModel m = CaeModel::build(CaeConfig{3, 8, 96}, 1);
  TrainConfig c;
  c.epochs = 1;
  CHECK_THROWS(train(m, {}, toy_images(2, 96, 1), c));
  auto bad = toy_images(3, 96, 1);
  bad[2].pixels[100] = std::nan("");
  c.batch_size = 2;
  try {
    train(m, bad, toy_images(2, 96, 2), c);
    FAIL("expected a TrainingError");
  } catch (const TrainingError& e) {
    CHECK(std::string(e.what()).find("batch") != std::string::npos);
  }
}

}  // TEST_SUITE
