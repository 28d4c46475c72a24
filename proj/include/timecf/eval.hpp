#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "timecf/cfgen.hpp"
#include "timecf/classifiers.hpp"
#include "timecf/core.hpp"
#include "timecf/shapelets.hpp"
#include "timecf/timegan.hpp"

namespace timecf {

double closeness(const TimeSeries& orig, const TimeSeries& cf);
// Percentage of time steps left unaltered (within eps).
double sparsity(const TimeSeries& orig, const TimeSeries& cf, double eps = kDefaultEps);
// Fraction of true entries. Throws InputError on an empty list.
double sensibility(const std::vector<bool>& explained);

// Average unsuccessful-search path length for n points.
double iforest_c(double n);
double iforest_score(double expected_path_length, double psi);

struct IForestConfig {
  std::size_t n_trees = 100;
  std::size_t subsample = 256;
  std::uint64_t seed = 1;
};

class IsolationForest {
 public:
  // Each row is one feature vector. Throws FitError on fewer than 2 rows.
  static IsolationForest fit(const std::vector<std::vector<double>>& rows, const IForestConfig& cfg = {});
  static IsolationForest fit(const Dataset& d, const IForestConfig& cfg = {});

  double expected_path_length(std::span<const double> x) const;
  double score(std::span<const double> x) const;
  double score(const TimeSeries& t) const { return score(t.values()); }

  std::size_t psi() const noexcept { return psi_; }
  std::size_t max_depth() const noexcept { return max_depth_; }
  std::size_t deepest_leaf() const;
  std::size_t n_features() const noexcept { return n_features_; }

 private:
  struct Node {
    std::size_t feature = 0;
    double threshold = 0.0;
    int left = -1;  // -1 marks a leaf
    int right = -1;
    std::size_t size = 0;
    std::size_t depth = 0;
  };
  using Tree = std::vector<Node>;

  std::vector<Tree> trees_;
  std::size_t psi_ = 0;
  std::size_t max_depth_ = 0;
  std::size_t n_features_ = 0;
};

// Linear interpolation between closest ranks, q in [0,1].
double percentile(std::vector<double> values, double q);

struct PlausibilityModel {
  IsolationForest forest;
  double threshold = 0.0;  // 90th percentile of training scores

  static PlausibilityModel fit(const Dataset& train, const IForestConfig& cfg = {}, double q = 0.9);
};

// Fraction of series scoring above the threshold. Throws InputError if empty.
double plausibility(const std::vector<TimeSeries>& cfs, const IsolationForest& forest, double threshold);

struct BenchmarkConfig {
  std::string dataset = "bump";
  std::vector<std::string> classifiers{"1nn", "cnn"};  // 1nn, cnn, constant
  std::vector<Method> methods{Method::timecf, Method::nun};
  RstConfig rst;
  TimeGanConfig gan;
  CnnConfig cnn;
  ExplainConfig explain;
  IForestConfig iforest;
  bool cache_gans = true;
  std::size_t threads = 1;
};

struct InstanceRecord {
  std::size_t test_index = 0;
  std::string id;
  ClassLabel true_label;
  ClassLabel explained_label;
  std::size_t candidates = 0;
  std::optional<CounterfactualResult> recommended;
  std::optional<double> sparsity;
  std::optional<double> outlier_score;
};

struct CellMetrics {
  std::string dataset;
  std::string classifier;
  std::string method;
  std::size_t instances = 0;
  std::size_t explained = 0;
  double sensibility = 0.0;
  std::optional<double> closeness;           // mean L1
  std::optional<double> closeness_per_step;  // mean L1 / N
  std::optional<double> sparsity;            // mean percent
  std::optional<double> plausibility;        // outlier ratio
  std::size_t results_total = 0;             // every counterfactual returned
  std::size_t results_flipped = 0;           // re-verified against the classifier
  std::size_t results_local = 0;             // untouched outside the interval
  double classifier_accuracy = 0.0;
  double seconds = 0.0;
  std::optional<std::string> error;
  std::vector<InstanceRecord> records;
};

struct MetricsReport {
  std::vector<CellMetrics> cells;
  double plausibility_threshold = 0.0;
  double test_outlier_rate = 0.0;  // real test instances flagged by the forest
  double gan_seconds = 0.0;
  double shapelet_seconds = 0.0;
  double total_seconds = 0.0;
  std::size_t shapelets = 0;

  const CellMetrics* find(const std::string& classifier, Method method) const;
};

// Every test instance is explained for the label the classifier predicts.
MetricsReport run_benchmark(const Dataset& train, const Dataset& test, const BenchmarkConfig& cfg);

std::string format_table(const MetricsReport& r);

}  // namespace timecf
