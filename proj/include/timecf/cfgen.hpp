#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "timecf/core.hpp"
#include "timecf/shapelets.hpp"
#include "timecf/timegan.hpp"

namespace timecf {

enum class Method { timecf, nun };
std::string to_string(Method m);
Method parse_method(const std::string& s);

struct CounterfactualResult {
  std::string original_id;
  ClassLabel original_label;
  TimeSeries counterfactual;
  ClassLabel predicted_label;
  Interval interval;
  std::optional<std::size_t> shapelet_ref;    // index into the shapelet list
  std::optional<std::size_t> fake_index;      // index into the sampled fakes
  std::optional<std::size_t> neighbor_index;  // training index, nun only
  std::size_t hamming = 0;
  double l1 = 0.0;
  Method method = Method::timecf;
};

// Raised by recommend() on an empty set. Callers count it as "not explained".
class NoCounterfactual : public Error {
 public:
  NoCounterfactual() : Error("no counterfactual found") {}
};

// Search over every (shapelet with class l) x (fake) pair. Results come back
// ordered by (shapelet index, fake index).
std::vector<CounterfactualResult> generate_counterfactuals(const TimeSeries& t, ClassLabel l,
                                                           const std::vector<ShapeletCandidate>& shapelets,
                                                           const std::vector<TimeSeries>& fakes, const Predictor& f,
                                                           double eps = kDefaultEps, std::size_t threads = 1);

// Minimum hamming to t, then minimum l1, then (interval.start, fake_index).
const CounterfactualResult& recommend(const std::vector<CounterfactualResult>& c, const TimeSeries& t,
                                      double eps = kDefaultEps);

// Nearest (Euclidean) training instance with label != l, if f flips on it.
std::optional<CounterfactualResult> nun_baseline(const TimeSeries& t, ClassLabel l, const Dataset& train,
                                                 const Predictor& f, double eps = kDefaultEps);

// TimeGAN on the instances whose label differs from `excluded`, scaled into
// [0,1] by a scaler fitted on the whole training set (kept on the model).
TimeGanModel train_gan_excluding(const Dataset& train, ClassLabel excluded, const TimeGanConfig& cfg,
                                 TrainingLog* log = nullptr, const TrainObserver& observer = {},
                                 const std::function<void(const Dataset&, ClassLabel)>& hook = {});

// Trains one TimeGAN per excluded label on the instances of the other
// labels, min/max scaled into [0,1] with a scaler fitted on the training set.
// With caching off every request retrains (the literal per-instance reading).
class GanCache {
 public:
  using TrainHook = std::function<void(const Dataset& subset, ClassLabel excluded)>;

  explicit GanCache(TimeGanConfig cfg, bool enabled = true);

  std::shared_ptr<const TimeGanModel> get(const Dataset& train, ClassLabel excluded);
  // Trains the models for several labels, concurrently when threads > 1.
  void prewarm(const Dataset& train, const std::vector<ClassLabel>& excluded, std::size_t threads);

  void set_train_hook(TrainHook hook) { hook_ = std::move(hook); }
  void set_observer(TrainObserver observer) { observer_ = std::move(observer); }
  void insert(ClassLabel excluded, std::shared_ptr<const TimeGanModel> model);

  std::size_t trainings() const;
  double training_seconds() const;
  const TimeGanConfig& config() const noexcept { return cfg_; }
  bool enabled() const noexcept { return enabled_; }

 private:
  std::shared_ptr<const TimeGanModel> train(const Dataset& train, ClassLabel excluded);

  TimeGanConfig cfg_;
  bool enabled_;
  TrainHook hook_;
  TrainObserver observer_;
  mutable std::mutex mu_;
  std::map<int, std::shared_ptr<const TimeGanModel>> models_;
  std::size_t trainings_ = 0;
  double seconds_ = 0.0;
};

// Fakes mapped back to the original data scale.
std::vector<TimeSeries> sample_original_scale(const TimeGanModel& model, std::size_t m, std::uint64_t seed);

struct ExplainConfig {
  std::size_t m = 50;
  double eps = kDefaultEps;
  std::uint64_t sample_seed = 1;
  std::size_t threads = 1;
};

struct ShapeletOutcome {
  std::size_t shapelet_index = 0;
  bool used = false;  // class matched the label being explained
  std::size_t attempts = 0;
  std::size_t flips = 0;
};

struct RuntimeStats {
  double gan_seconds = 0.0;
  double sample_seconds = 0.0;
  double search_seconds = 0.0;
};

struct ExplanationReport {
  std::string original_id;
  TimeSeries original;
  ClassLabel original_label;
  Method method = Method::timecf;
  std::vector<CounterfactualResult> results;
  std::optional<CounterfactualResult> recommended;
  std::vector<ShapeletOutcome> outcomes;
  std::size_t fakes = 0;
  RuntimeStats runtime;

  bool explained() const noexcept { return recommended.has_value(); }
};

// Full Time-CF pipeline for one instance.
ExplanationReport explain(const TimeSeries& t, ClassLabel l, const Dataset& train, const Predictor& f,
                          const std::vector<ShapeletCandidate>& shapelets, GanCache& gans, const ExplainConfig& cfg);

// Baseline wrapped in the same report shape.
ExplanationReport explain_nun(const TimeSeries& t, ClassLabel l, const Dataset& train, const Predictor& f,
                              double eps = kDefaultEps);

}  // namespace timecf
