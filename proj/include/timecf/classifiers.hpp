#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "timecf/autodiff/layers.hpp"
#include "timecf/autodiff/serialize.hpp"
#include "timecf/core.hpp"

namespace timecf {

// Euclidean 1-nearest-neighbour; ties go to the lowest training index.
class OneNnClassifier : public Predictor {
 public:
  explicit OneNnClassifier(Dataset train);

  ClassLabel predict(const TimeSeries& t) const override;
  std::string name() const override { return "1nn"; }

  std::size_t nearest_index(const TimeSeries& t) const;
  const Dataset& training() const noexcept { return train_; }

 private:
  Dataset train_;
};

inline OneNnClassifier fit_1nn(const Dataset& d) { return OneNnClassifier(d); }

struct CnnConfig {
  std::size_t filters = 16;
  std::size_t kernel = 7;
  std::size_t epochs = 100;
  std::size_t batch_size = 16;
  double lr = 1e-3;
  std::uint64_t seed = 1;

  void validate() const;
};

// z-score -> conv1d -> relu -> mean over time -> dense -> sigmoid.
// Binary only: predicts label 1 when the sigmoid output is >= 0.5.
class SmallCnnClassifier : public Predictor {
 public:
  // Randomly initialized, identity normalization.
  SmallCnnClassifier(std::size_t length, const CnnConfig& cfg);

  ClassLabel predict(const TimeSeries& t) const override;
  std::string name() const override { return "cnn"; }

  double probability(const TimeSeries& t) const;
  std::vector<double> probabilities(const std::vector<TimeSeries>& batch) const;

  std::size_t length() const noexcept { return length_; }
  const CnnConfig& config() const noexcept { return cfg_; }
  double input_mean() const noexcept { return mean_; }
  double input_std() const noexcept { return std_; }
  void set_normalization(double mean, double std);

  ad::ParameterSet parameters() const;
  ad::Var logits(const std::vector<TimeSeries>& batch) const;  // [B,1]

  ad::NamedTensors to_tensors() const;
  static SmallCnnClassifier from_tensors(const ad::NamedTensors& tensors);
  void save(const std::filesystem::path& path) const;
  static SmallCnnClassifier load(const std::filesystem::path& path);

 private:
  CnnConfig cfg_;
  std::size_t length_;
  double mean_ = 0.0;
  double std_ = 1.0;
  ad::Var conv_w_, conv_b_;
  ad::Linear dense_;
};

// Trains with BCE on logits and Adam; per-epoch shuffled minibatches.
// Throws UsageError unless the labels are exactly {0, 1}.
SmallCnnClassifier fit_cnn(const Dataset& d, const CnnConfig& cfg, std::vector<double>* epoch_losses = nullptr);

class ConstantClassifier : public Predictor {
 public:
  explicit ConstantClassifier(ClassLabel label) : label_(label) {}
  ClassLabel predict(const TimeSeries&) const override { return label_; }
  std::string name() const override { return "constant"; }

 private:
  ClassLabel label_;
};

// "1nn", "cnn" (trained here) or "constant" (always label 0).
std::unique_ptr<Predictor> make_classifier(const std::string& name, const Dataset& train, const CnnConfig& cnn = {});

double accuracy(const Predictor& f, const Dataset& d);

}  // namespace timecf
