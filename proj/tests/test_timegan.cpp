#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "timecf/ingest.hpp"
#include "timecf/timegan.hpp"

using namespace timecf;

namespace {

TimeGanConfig quick_config() {
  TimeGanConfig cfg;
  cfg.hidden_dim = 8;
  cfg.iters_embed = 60;
  cfg.iters_supervised = 30;
  cfg.iters_joint = 20;
  cfg.batch_size = 8;
  cfg.lr = 5e-3;
  cfg.seed = 42;
  return cfg;
}

Dataset scaled_bump(std::size_t length, std::size_t n_per_class) {
  SyntheticSpec spec;
  spec.length = length;
  spec.n_per_class = n_per_class;
  spec.bump_interval = {length / 3, length / 4};
  const Dataset d = make_synthetic_bump(spec);
  return MinMaxScaler::fit(d).transform(d);
}

bool all_in_open_unit(const std::vector<TimeSeries>& xs) {
  for (const auto& x : xs)
    for (double v : x.values())
      if (!(v > 0.0 && v < 1.0) || !std::isfinite(v)) return false;
  return true;
}

}  // namespace

TEST_CASE("config validation") {
  TimeGanConfig cfg;
  cfg.hidden_dim = 0;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg = TimeGanConfig{};
  cfg.lambda_sup = -1;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  CHECK_NOTHROW(TimeGanConfig{}.validate());
}

TEST_CASE("untrained model samples valid shapes and range") {
  const TimeGanModel model(quick_config(), 24);
  const auto fakes = sample_fakes(model, 5, 24, 1);
  REQUIRE(fakes.size() == 5);
  for (const auto& f : fakes) CHECK(f.size() == 24);
  CHECK(all_in_open_unit(fakes));
  CHECK_THROWS_AS(sample_fakes(model, 5, 23, 1), UsageError);
  CHECK_THROWS_AS(sample_fakes(model, 0, 24, 1), UsageError);

  const auto again = sample_fakes(model, 5, 24, 1);
  for (std::size_t i = 0; i < 5; ++i) CHECK(fakes[i] == again[i]);
  const auto other = sample_fakes(model, 5, 24, 2);
  CHECK_FALSE(fakes[0] == other[0]);
}

TEST_CASE("training rejects bad input") {
  SyntheticSpec spec;
  spec.length = 12;
  spec.bump_interval = {2, 3};
  const Dataset raw = make_synthetic_bump(spec);
  CHECK_THROWS_AS(train_timegan(raw, quick_config()), UsageError);  // not scaled into [0,1]
}

TEST_CASE("training is deterministic and reads only the given subset") {
  const Dataset all = scaled_bump(16, 6);
  const Dataset subset = all.without_label({0});
  for (const auto& inst : subset.instances()) REQUIRE(inst.label != ClassLabel{0});

  std::set<std::size_t> read;
  TrainObserver obs;
  obs.on_instance_read = [&](std::size_t i) { read.insert(i); };
  TrainingLog log;
  const TimeGanModel a = train_timegan(subset, quick_config(), &log, obs);
  const TimeGanModel b = train_timegan(subset, quick_config());
  CHECK(*read.rbegin() < subset.size());
  const auto pa = a.parameters().snapshot();
  const auto pb = b.parameters().snapshot();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t k = 0; k < pa.size(); ++k) CHECK(pa[k].second == pb[k].second);

  CHECK(log.reconstruction.size() == quick_config().iters_embed);
  CHECK(log.supervised.size() == quick_config().iters_supervised);
  REQUIRE(log.generator.size() == quick_config().iters_joint);
  for (double g : log.generator) CHECK(std::isfinite(g));
  for (double d : log.discriminator) CHECK(std::isfinite(d));
}

TEST_CASE("phase-1 reconstruction loss decreases on bump data") {
  auto cfg = quick_config();
  cfg.iters_embed = 200;
  cfg.iters_supervised = 1;
  cfg.iters_joint = 1;
  TrainingLog log;
  train_timegan(scaled_bump(32, 8), cfg, &log);
  CHECK(log.reconstruction.back() < log.reconstruction.front());
}

TEST_CASE("constant series are reproduced") {
  const double c = 0.6;
  std::vector<LabeledInstance> inst;
  for (int i = 0; i < 8; ++i) inst.push_back({TimeSeries(std::vector<double>(16, c)), {1}});
  auto cfg = quick_config();
  cfg.iters_embed = 100;
  cfg.iters_supervised = 50;
  cfg.iters_joint = 50;
  const TimeGanModel model = train_timegan(Dataset(inst), cfg);
  const auto fakes = sample_fakes(model, 20, 16, 3);
  double mad = 0.0;
  for (const auto& f : fakes)
    for (double v : f.values()) mad += std::abs(v - c);
  mad /= 20.0 * 16.0;
  MESSAGE("sample MAD from constant " << mad);
  CHECK(mad < 0.15);
  CHECK(all_in_open_unit(fakes));
}

TEST_CASE("model save/load round trip") {
  TimeGanModel model(quick_config(), 12);
  model.set_scaler(MinMaxScaler(-2.0, 3.0));
  const auto path = std::filesystem::temp_directory_path() / "timecf_gan_test.tcf";
  model.save(path);
  const TimeGanModel back = TimeGanModel::load(path);
  std::filesystem::remove(path);
  CHECK(back.length() == 12);
  REQUIRE(back.scaler().has_value());
  CHECK(back.scaler()->min() == -2.0);
  const auto a = sample_fakes(model, 3, 12, 9);
  const auto b = sample_fakes(back, 3, 12, 9);
  for (std::size_t i = 0; i < 3; ++i) CHECK(a[i] == b[i]);
}
