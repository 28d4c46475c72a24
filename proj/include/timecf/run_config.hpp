#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "timecf/eval.hpp"
#include "timecf/ingest.hpp"
#include "timecf/json_io.hpp"

namespace timecf {

struct DataSource {
  std::string name = "bump";
  std::optional<std::filesystem::path> ucr_train;
  std::optional<std::filesystem::path> ucr_test;  // absent: split ucr_train
  std::optional<SyntheticSpec> synthetic;
  double test_fraction = 0.25;
};

// Everything a CLI run needs. Component seeds default to `seed` unless a
// section sets its own.
struct RunConfig {
  std::uint64_t seed = 1;
  DataSource data;
  std::string classifier = "1nn";
  Method method = Method::timecf;
  std::vector<std::string> classifiers{"1nn", "cnn"};
  std::vector<Method> methods{Method::timecf, Method::nun};
  CnnConfig cnn;
  RstConfig rst;
  TimeGanConfig gan;
  ExplainConfig explain;
  IForestConfig iforest;
  bool cache_gans = true;
  std::size_t threads = 1;
  std::size_t instance = 0;
  std::filesystem::path out = "out";
  std::optional<std::filesystem::path> shapelets_file;  // reuse a saved shapelet set
  std::optional<std::filesystem::path> gan_dir;         // reuse models saved by train-gan

  // Sets every component seed (a --seed flag).
  void reseed(std::uint64_t s);
  // Throws UsageError unless exactly one data source is given and nested configs are valid.
  void validate() const;
};

// Relative paths are resolved against base_dir. Unknown keys are rejected.
RunConfig run_config_from_json(const Json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
Json to_json(const RunConfig& c);

// (train, test); the codec maps normalized labels back to file labels.
std::pair<Dataset, Dataset> load_data(const RunConfig& c, LabelCodec* codec = nullptr);
BenchmarkConfig benchmark_config(const RunConfig& c);

}  // namespace timecf
