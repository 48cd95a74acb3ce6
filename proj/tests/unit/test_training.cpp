#include "doctest_torch.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>

#include "reenact/errors.hpp"
#include "reenact/training/checkpoint.hpp"
#include "reenact/training/probe_training.hpp"
#include "reenact/training/trainer.hpp"
#include "tiny.hpp"

using namespace reenact;
using namespace reenact::training;
using models::Component;

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("reenact_training_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Sum of |after - before| per component tag.
std::map<Component, double> update_norms(const models::ReenactModel& m, const std::vector<torch::Tensor>& before) {
  std::map<Component, double> out;
  const auto params = m.tagged_parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    out[params[i].component] += (params[i].tensor.detach() - before[i]).abs().sum().item<double>();
  }
  return out;
}

double median(std::vector<double> v) {
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("probe pretraining needs enough frames") {
  const auto store = test::tiny_store(4, 6);
  models::ProbeSet probes(16, 8, 3);
  CHECK_THROWS_AS(pretrain_probes(probes, store, {}), ArgumentError);
}

TEST_CASE("probe pretraining is deterministic and freezes the probes") {
  const auto store = test::tiny_store(10, 12);
  ProbeTrainOptions opt;
  opt.epochs = 1;
  opt.seed = 5;
  models::ProbeSet a(16, 8, 3), b(16, 8, 3);
  const auto ra = pretrain_probes(a, store, opt);
  pretrain_probes(b, store, opt);
  CHECK(ra.train_frames + ra.heldout_frames == store.size());
  CHECK(ra.heldout_frames > 0);
  CHECK(a.frozen());
  const auto pa = a.tagged_parameters(), pb = b.tagged_parameters();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(torch::equal(pa[i].tensor, pb[i].tensor));
  CHECK_THROWS_AS(a.expression.trainable_parameters(), StateError);
  CHECK_THROWS_AS(pretrain_probes(a, store, opt), StateError);
}

TEST_CASE("training refuses unfrozen probes and mismatched data") {
  auto cfg = test::tiny_train_config();
  const auto store = test::tiny_store();
  models::ReenactModel raw(cfg.model_config(), 0, 1);
  Trainer t(cfg, raw, store);
  CHECK_THROWS_AS(t.begin_stage(1), StateError);
  CHECK_THROWS_AS(t.step(), StateError);
  auto m = test::tiny_model(cfg);
  const auto big = test::tiny_store(2, 3, 32);
  CHECK_THROWS_AS(Trainer(cfg, m, big), ShapeError);
}

TEST_CASE("zero learning rate leaves every parameter unchanged") {
  auto cfg = test::tiny_train_config();
  cfg.lr_stage1 = 0.0;
  cfg.lr_stage2 = 0.0;
  const auto store = test::tiny_store();
  auto m = test::tiny_model(cfg);
  const auto before = test::clone_parameters(m);
  Trainer t(cfg, m, store);
  t.begin_stage(1);
  for (int i = 0; i < 3; ++i) t.step();
  t.begin_stage(2);
  for (int i = 0; i < 2; ++i) t.step();
  for (const auto& [c, n] : update_norms(m, before)) CHECK(n == 0.0);
}

TEST_CASE("one stage-1 step moves every trainable component") {
  auto cfg = test::tiny_train_config();
  const auto store = test::tiny_store();
  auto m = test::tiny_model(cfg);
  const auto before = test::clone_parameters(m);
  Trainer t(cfg, m, store);
  t.begin_stage(1);
  const auto rec = t.step();
  CHECK(rec.stage == 1);
  CHECK(rec.iteration == 1);
  const auto norms = update_norms(m, before);
  for (Component c : models::kTrainableComponents) {
    CAPTURE(models::to_string(c));
    CHECK(norms.at(c) > 0.0);
  }
  CHECK(norms.at(Component::frozen) == 0.0);
}

TEST_CASE("stage 2 updates only the mlp, expression generator and discriminator") {
  auto cfg = test::tiny_train_config();
  const auto store = test::tiny_store();
  auto m = test::tiny_model(cfg);
  Trainer t(cfg, m, store);
  t.begin_stage(1);
  t.step();
  const auto before = test::clone_parameters(m);
  t.begin_stage(2);
  t.step();
  auto norms = update_norms(m, before);
  CHECK(norms.at(Component::motion_editing_encoder) == 0.0);
  CHECK(norms.at(Component::generator_pose) == 0.0);
  CHECK(norms.at(Component::frozen) == 0.0);
  CHECK(norms.at(Component::generator_expression) > 0.0);
  CHECK(norms.at(Component::motion_editing_mlp) > 0.0);
  CHECK(norms.at(Component::discriminator) > 0.0);
  for (int i = 0; i < 2; ++i) t.step();
  norms = update_norms(m, before);
  CHECK(norms.at(Component::motion_editing_encoder) == 0.0);
  CHECK(norms.at(Component::generator_pose) == 0.0);
  CHECK(cfg.lr_stage2 == 0.0008);
  CHECK(cfg.lr_stage1 == 0.002);
}

TEST_CASE("reconstruction loss falls over the first 500 steps") {
  auto cfg = test::tiny_train_config();
  cfg.stage1_iters = 500;
  cfg.batch_size = 4;
  const auto store = test::tiny_store(6, 8);
  auto m = test::tiny_model(cfg);
  Trainer t(cfg, m, store);
  t.run_stage(1);
  REQUIRE(t.history().size() == 500);
  std::vector<double> first, last;
  for (std::size_t i = 0; i < 500; ++i) {
    const auto& r = t.history()[i].losses;
    CHECK(std::isfinite(r.total));
    if (i < 100) first.push_back(r.rec);
    if (i >= 400) last.push_back(r.rec);
  }
  CHECK(median(last) < median(first));
}

TEST_CASE("checkpoint save, load and save again is byte identical") {
  const auto dir = scratch("roundtrip");
  auto cfg = test::tiny_train_config();
  const auto store = test::tiny_store();
  auto m = test::tiny_model(cfg);
  Trainer t(cfg, m, store);
  t.begin_stage(1);
  t.step();
  save_checkpoint((dir / "a.ckpt").string(), t.snapshot());
  const auto loaded = load_checkpoint((dir / "a.ckpt").string());
  save_checkpoint((dir / "b.ckpt").string(), loaded);
  CHECK(slurp(dir / "a.ckpt") == slurp(dir / "b.ckpt"));
  CHECK(loaded.iteration == 1);
  CHECK(loaded.stage == 1);
  CHECK(loaded.config_hash == config_hash(cfg));
  CHECK(loaded.optimizers.size() == 2);
  CHECK(config_hash(config_of(loaded)) == loaded.config_hash);
}

TEST_CASE("truncated or corrupted checkpoints are rejected without side effects") {
  const auto dir = scratch("truncated");
  auto cfg = test::tiny_train_config();
  auto m = test::tiny_model(cfg);
  const auto bytes = serialize(capture_checkpoint(m, cfg, 0, 1));
  {
    std::ofstream out(dir / "cut.ckpt", std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size() / 2));
  }
  CHECK_THROWS_AS(load_checkpoint((dir / "cut.ckpt").string()), CorruptionError);
  auto flipped = bytes;
  flipped[flipped.size() / 3] ^= 0x40;
  CHECK_THROWS_AS(deserialize(flipped), CorruptionError);
  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(deserialize(trailing), CorruptionError);
  CHECK_THROWS_AS(load_checkpoint((dir / "missing.ckpt").string()), IoError);

  auto other = test::tiny_model(7);
  const auto before = test::clone_parameters(other);
  auto ck = deserialize(bytes);
  ck.tensors.back().data.pop_back();
  CHECK_THROWS(restore_checkpoint(ck, other));
  const auto after = test::clone_parameters(other);
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(torch::equal(before[i], after[i]));
}

TEST_CASE("loaded model reproduces inference outputs exactly") {
  const auto dir = scratch("inference");
  auto cfg = test::tiny_train_config();
  const auto store = test::tiny_store();
  auto m = test::tiny_model(cfg);
  Trainer t(cfg, m, store);
  t.begin_stage(1);
  t.step();
  save_checkpoint((dir / "m.ckpt").string(), t.snapshot());
  auto restored = model_from_checkpoint(load_checkpoint((dir / "m.ckpt").string()));
  CHECK(restored.probes.frozen());
  torch::NoGradGuard ng;
  const auto x = store.images.slice(0, 0, 2);
  const auto y = store.images.slice(0, 2, 4);
  auto out = [](models::ReenactModel& mm, const torch::Tensor& s, const torch::Tensor& d) {
    return editing::cyclic_forward(mm, s, d).S_dprime;
  };
  CHECK(torch::equal(out(m, x, y), out(restored, x, y)));
  CHECK(torch::equal(m.discriminate(x), restored.discriminate(x)));
  CHECK(torch::equal(m.probe_features(models::ProbeKind::identity, x),
                     restored.probe_features(models::ProbeKind::identity, x)));
}

TEST_CASE("config hash mismatch blocks restore unless forced") {
  auto cfg = test::tiny_train_config();
  auto m = test::tiny_model(cfg);
  const auto ck = capture_checkpoint(m, cfg, 0, 1);
  auto other_cfg = cfg;
  other_cfg.lambda_p = 5.0;
  CHECK(config_hash(other_cfg) != ck.config_hash);
  auto target = test::tiny_model(3);
  RestoreOptions opt;
  opt.expected_config_hash = config_hash(other_cfg);
  CHECK_THROWS_AS(restore_checkpoint(ck, target, opt), ConfigError);
  opt.force = true;
  restore_checkpoint(ck, target, opt);
  const auto a = test::clone_parameters(m), b = test::clone_parameters(target);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(torch::equal(a[i], b[i]));
}

TEST_CASE("identical configs give identical 50-step logs") {
  auto cfg = test::tiny_train_config();
  cfg.stage1_iters = 50;
  const auto store = test::tiny_store();
  std::string logs[2];
  for (int k = 0; k < 2; ++k) {
    const auto dir = scratch("determinism" + std::to_string(k));
    auto m = test::tiny_model(cfg);
    Trainer t(cfg, m, store, dir);
    t.run_stage(1);
    logs[k] = slurp(dir / kTrainLogFileName);
    CHECK(fs::exists(dir / "stage1.ckpt"));
  }
  CHECK_FALSE(logs[0].empty());
  CHECK(logs[0] == logs[1]);
  CHECK(std::count(logs[0].begin(), logs[0].end(), '\n') == 50);
}

TEST_CASE("resuming from a snapshot matches an uninterrupted run") {
  auto cfg = test::tiny_train_config();
  cfg.stage1_iters = 6;
  const auto store = test::tiny_store();
  auto full = test::tiny_model(cfg);
  Trainer a(cfg, full, store);
  a.run_stage(1);

  auto first = test::tiny_model(cfg);
  Trainer b(cfg, first, store);
  b.begin_stage(1);
  for (int i = 0; i < 3; ++i) b.step();
  const auto bytes = serialize(b.snapshot());

  auto second = test::tiny_model(11);
  Trainer c(cfg, second, store);
  c.resume(deserialize(bytes));
  CHECK(c.iteration() == 3);
  c.run_stage(1);
  REQUIRE(c.history().size() == 3);
  CHECK(c.history().back().losses.total == a.history().back().losses.total);
  const auto pa = test::clone_parameters(full), pc = test::clone_parameters(second);
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(torch::equal(pa[i], pc[i]));
}

TEST_CASE("train reuses completed stages and runs both") {
  const auto dir = scratch("pipeline");
  auto cfg = test::tiny_train_config();
  const auto store = test::tiny_store();
  auto m = test::tiny_model(cfg);
  const auto ck = train(cfg, m, store, dir);
  CHECK(ck.stage == 2);
  CHECK(ck.iteration == 3);
  CHECK(fs::exists(dir / "stage1.ckpt"));
  CHECK(fs::exists(dir / "stage2.ckpt"));
  const auto stamp = fs::last_write_time(dir / "stage1.ckpt");
  auto again = test::tiny_model(cfg);
  const auto ck2 = train(cfg, again, store, dir);
  CHECK(fs::last_write_time(dir / "stage1.ckpt") == stamp);
  CHECK(serialize(ck2) == serialize(ck));
}

TEST_CASE("a non-finite loss halts with a diagnostic") {
  const auto dir = scratch("nonfinite");
  auto cfg = test::tiny_train_config();
  cfg.lambda_p = 1e300;
  const auto store = test::tiny_store();
  auto m = test::tiny_model(cfg);
  Trainer t(cfg, m, store, dir);
  t.begin_stage(1);
  CHECK_THROWS_AS(t.step(), NonFiniteLossError);
  REQUIRE(fs::exists(dir / kDiagnosticFileName));
  const auto diag = nlohmann::json::parse(slurp(dir / kDiagnosticFileName));
  CHECK(diag.at("iteration") == 1);
  CHECK(diag.at("losses").contains("per"));
  CHECK(diag.at("grad_norms").size() == 5);
}

}  // TEST_SUITE
