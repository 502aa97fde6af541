#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "skno/error.hpp"
#include "skno/generators.hpp"
#include "skno/train.hpp"

using namespace skno;

namespace {

ArchConfig heat_arch() {
  ArchConfig a;
  a.d = 1;
  a.modes = 2;
  a.n_p = 4;
  a.n_layers = 1;
  a.with_local_propagator = false;
  a.recover_kind = RecoverKind::mlp;
  return a;
}

const Dataset& heat_train() {
  static const Dataset ds = gen_heat_dataset(40, Grid(32), OracleConfig{}, 1);
  return ds;
}
const Dataset& heat_test() {
  static const Dataset ds = gen_heat_dataset(10, Grid(32), OracleConfig{}, 2);
  return ds;
}

bool same_params(const SknoModel& a, const SknoModel& b) {
  for (std::size_t i = 0; i < a.params().all().size(); ++i)
    if (a.params().all()[i].data != b.params().all()[i].data) return false;
  return true;
}

}  // namespace

TEST_CASE("cosine schedule") {
  CHECK(cosine_lr(1e-3, 0, 500) == 1e-3);
  CHECK(cosine_lr(1e-3, 499, 500) < 1e-6);
  CHECK(cosine_lr(1e-3, 0, 1) == 1e-3);
  CHECK(cosine_lr(2.0, 2, 5) == doctest::Approx(1.0));
  for (int e = 1; e < 50; ++e) CHECK(cosine_lr(1.0, e, 50) <= cosine_lr(1.0, e - 1, 50));
}

TEST_CASE("adam") {
  SknoModel m(heat_arch(), 1);
  const SknoModel before = m;
  AdamState st;
  adam_step(m, m.params().zeros_like(), st, 1e-2);
  CHECK(same_params(m, before));
  CHECK(st.step == 1);
  CHECK(st.m.squared_norm() == 0.0);
  CHECK(st.v.squared_norm() == 0.0);

  // every learnable entry minimizes (x - 3)^2 / 2
  SknoModel q(heat_arch(), 2);
  AdamState s2;
  for (int step = 0; step < 2000; ++step) {
    GradientSet g = q.params().zeros_like();
    for (std::size_t t = 0; t < g.all().size(); ++t)
      for (std::size_t i = 0; i < g.all()[t].size(); ++i) g.all()[t].data[i] = q.params().all()[t].data[i] - 3.0;
    adam_step(q, g, s2, cosine_lr(0.05, step, 2000));
  }
  for (const auto& p : q.params().all())
    if (p.learnable)
      for (double x : p.data) CHECK(std::abs(x - 3.0) < 1e-6);

  GradientSet g = m.params().zeros_like();
  g.at("lift.w").data[0] = std::nan("");
  CHECK_THROWS_AS(adam_step(m, g, st, 1e-3), NumericError);
}

TEST_CASE("gradient clipping") {
  SknoModel m(heat_arch(), 3);
  GradientSet g = m.params().zeros_like();
  g.at("lift.w").data[0] = 12.0;
  g.at("lift.w").data[1] = 16.0;
  CHECK(clip_gradients(g, 10.0) == doctest::Approx(20.0));
  CHECK(g.at("lift.w").data[0] == doctest::Approx(6.0));
  CHECK(std::sqrt(g.squared_norm()) == doctest::Approx(10.0));
  CHECK(clip_gradients(g, 0.0) == doctest::Approx(10.0));
}

TEST_CASE("training is deterministic and reduces the loss") {
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.batch_size = 8;
  cfg.lr0 = 1e-2;
  cfg.seed = 9;
  auto r1 = train(cfg, heat_arch(), heat_train(), heat_test());
  auto r2 = train(cfg, heat_arch(), heat_train(), heat_test());
  CHECK(same_params(r1.last, r2.last));
  REQUIRE(r1.metrics.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(r1.metrics[i].train_loss == r2.metrics[i].train_loss);
    CHECK(r1.metrics[i].test_rel_l2 == r2.metrics[i].test_rel_l2);
    CHECK(r1.metrics[i].lr == r2.metrics[i].lr);
  }
  CHECK(r1.metrics.back().train_loss < r1.metrics.front().train_loss);
  CHECK(r1.best_test_rel_l2 <= r1.metrics.back().test_rel_l2);

  TrainConfig other = cfg;
  other.seed = 10;
  CHECK_FALSE(same_params(train(other, heat_arch(), heat_train(), heat_test()).last, r1.last));

  TrainConfig threaded = cfg;
  threaded.threads = 3;
  auto t1 = train(threaded, heat_arch(), heat_train(), heat_test());
  auto t2 = train(threaded, heat_arch(), heat_train(), heat_test());
  CHECK(same_params(t1.last, t2.last));
  CHECK(t1.metrics.back().test_rel_l2 == doctest::Approx(r1.metrics.back().test_rel_l2).epsilon(1e-8));

  auto mixed = train_mixed_resolution(cfg, heat_arch(), heat_train(), heat_test(), {32});
  CHECK(same_params(mixed.last, r1.last));
  CHECK(mixed.metrics.back().test_rel_l2 == r1.metrics.back().test_rel_l2);
}

TEST_CASE("training smoke run and checkpoint output") {
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 4;
  const auto dir = std::filesystem::temp_directory_path() / "skno_train_test";
  std::filesystem::remove_all(dir);
  auto r = train(cfg, heat_arch(), heat_train().head(10), heat_test(), dir);
  CHECK(r.metrics.size() >= 1);
  CHECK(std::filesystem::exists(dir / "metrics.csv"));
  CHECK(std::filesystem::exists(dir / "checkpoint" / "arch.json"));
  SknoModel back = SknoModel::load(dir / "checkpoint");
  CHECK(same_params(back, r.best));
  std::filesystem::remove_all(dir);
  CHECK(metrics_csv({}).rfind("epoch,train_loss,test_rel_l2,wall_seconds,lr\n", 0) == 0);
}

TEST_CASE("training preconditions") {
  TrainConfig cfg;
  ArchConfig two = heat_arch();
  two.d = 2;
  CHECK_THROWS_AS(train(cfg, two, heat_train(), heat_test()), UsageError);
  ArchConfig chans = heat_arch();
  chans.in_channels = 2;
  CHECK_THROWS_AS(train(cfg, chans, heat_train(), heat_test()), UsageError);
  TrainConfig bad = cfg;
  bad.epochs = 0;
  CHECK_THROWS_AS(train(bad, heat_arch(), heat_train(), heat_test()), UsageError);
  CHECK_THROWS_AS(train_mixed_resolution(cfg, heat_arch(), heat_train(), heat_test(), {2}), UsageError);
  CHECK_THROWS_AS(train_mixed_resolution(cfg, heat_arch(), heat_train(), heat_test(), {12}), UsageError);
  CHECK_THROWS_AS(TrainConfig::from_json({{"epoch", 3}}), UsageError);
  CHECK(TrainConfig::from_json({{"epochs", 3}, {"lr0", 0.01}}).epochs == 3);
}

TEST_CASE("mixed resolution training") {
  const Dataset fine = gen_heat_dataset(24, Grid(64), OracleConfig{}, 3);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 6;
  auto r = train_mixed_resolution(cfg, heat_arch(), fine, heat_test(), {16, 32, 64});
  CHECK(r.metrics.size() == 2);
  CHECK(std::isfinite(r.best_test_rel_l2));
}

TEST_CASE("resampling and evaluation") {
  const Dataset& ds = heat_test();
  const Dataset up = resample_dataset(ds, 64);
  const Dataset down = resample_dataset(up, 32);
  for (std::size_t i = 0; i < ds.a.size(); ++i) CHECK(std::abs(down.a[i] - ds.a[i]) < 1e-12);
  CHECK(up.grid.resolution(0) == 64);
  // subsampling a band-limited field matches Fourier interpolation
  const Dataset sub = resample_dataset(up, 16), interp = resample_dataset(ds, 16);
  for (std::size_t i = 0; i < sub.u.size(); ++i) CHECK(std::abs(sub.u[i] - interp.u[i]) < 1e-12);

  SknoModel m(heat_arch(), 4);
  auto e32 = evaluate(m, ds);
  auto e128 = evaluate(m, ds, 128);
  CHECK(e32.per_sample.size() == 10);
  CHECK(e128.resolution == 128);
  CHECK(e32.csv().rfind("sample,rel_l2\n", 0) == 0);
  CHECK_THROWS_AS(evaluate(m, ds.head(0)), UsageError);
  CHECK_THROWS_AS(evaluate(m, ds, 3), UsageError);
}
