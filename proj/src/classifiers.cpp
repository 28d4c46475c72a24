#include "timecf/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "timecf/autodiff/adam.hpp"

namespace timecf {

OneNnClassifier::OneNnClassifier(Dataset train) : train_(std::move(train)) {
  if (train_.empty()) throw InputError("1-NN needs a non-empty training set");
}

std::size_t OneNnClassifier::nearest_index(const TimeSeries& t) const {
  if (t.size() != train_.series_length())
    throw InputError("series length " + std::to_string(t.size()) + " does not match training length " +
                     std::to_string(train_.series_length()));
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < train_.size(); ++i) {
    const double d = squared_euclidean(t.values(), train_[i].series.values());
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

ClassLabel OneNnClassifier::predict(const TimeSeries& t) const { return train_[nearest_index(t)].label; }

void CnnConfig::validate() const {
  if (filters == 0 || kernel == 0 || epochs == 0 || batch_size == 0) throw UsageError("CNN sizes must be positive");
  if (!(lr > 0.0)) throw UsageError("CNN learning rate must be positive");
}

SmallCnnClassifier::SmallCnnClassifier(std::size_t length, const CnnConfig& cfg) : cfg_(cfg), length_(length) {
  cfg_.validate();
  if (length < cfg_.kernel)
    throw UsageError("series length " + std::to_string(length) + " is shorter than the CNN kernel");
  std::mt19937_64 rng(cfg_.seed);
  conv_w_ = ad::Var::parameter(ad::uniform_init({cfg_.filters, cfg_.kernel}, cfg_.kernel, rng));
  conv_b_ = ad::Var::parameter(ad::uniform_init({cfg_.filters}, cfg_.kernel, rng));
  dense_ = ad::Linear(cfg_.filters, 1, rng);
}

void SmallCnnClassifier::set_normalization(double mean, double std) {
  if (!std::isfinite(mean) || !(std > 0.0) || !std::isfinite(std)) throw UsageError("invalid CNN normalization");
  mean_ = mean;
  std_ = std;
}

ad::ParameterSet SmallCnnClassifier::parameters() const {
  ad::ParameterSet p;
  p.add("conv.w", conv_w_);
  p.add("conv.b", conv_b_);
  p.append("dense.", dense_.parameters());
  return p;
}

ad::Var SmallCnnClassifier::logits(const std::vector<TimeSeries>& batch) const {
  if (batch.empty()) throw InputError("empty CNN batch");
  ad::Tensor x({batch.size(), length_});
  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (batch[b].size() != length_)
      throw InputError("series length " + std::to_string(batch[b].size()) + " does not match CNN length " +
                       std::to_string(length_));
    for (std::size_t t = 0; t < length_; ++t) x.at(b, t) = (batch[b][t] - mean_) / std_;
  }
  const auto features = ad::global_mean_over_time(ad::relu(ad::conv1d(ad::Var::constant(std::move(x)), conv_w_, conv_b_)));
  return dense_(features);
}

std::vector<double> SmallCnnClassifier::probabilities(const std::vector<TimeSeries>& batch) const {
  ad::NoGradGuard guard;
  const auto z = logits(batch).value();
  std::vector<double> out(batch.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-z[i]));
  return out;
}

double SmallCnnClassifier::probability(const TimeSeries& t) const { return probabilities({t}).front(); }

ClassLabel SmallCnnClassifier::predict(const TimeSeries& t) const {
  return ClassLabel{probability(t) >= 0.5 ? 1 : 0};
}

ad::NamedTensors SmallCnnClassifier::to_tensors() const {
  ad::NamedTensors out;
  out.emplace_back("meta.dims", ad::Tensor({4}, std::vector<double>{static_cast<double>(length_),
                                                                      static_cast<double>(cfg_.filters),
                                                                      static_cast<double>(cfg_.kernel),
                                                                      static_cast<double>(cfg_.seed)}));
  out.emplace_back("meta.norm", ad::Tensor({2}, std::vector<double>{mean_, std_}));
  for (auto& item : parameters().snapshot()) out.push_back(std::move(item));
  return out;
}

SmallCnnClassifier SmallCnnClassifier::from_tensors(const ad::NamedTensors& tensors) {
  auto find = [&](const std::string& name) -> const ad::Tensor& {
    for (const auto& [n, t] : tensors)
      if (n == name) return t;
    throw ParseError("CNN parameter file lacks " + name, 0);
  };
  const auto& dims = find("meta.dims");
  const auto& norm = find("meta.norm");
  if (dims.size() != 4 || norm.size() != 2) throw ParseError("malformed CNN meta tensors", 0);
  CnnConfig cfg;
  cfg.filters = static_cast<std::size_t>(dims[1]);
  cfg.kernel = static_cast<std::size_t>(dims[2]);
  cfg.seed = static_cast<std::uint64_t>(dims[3]);
  SmallCnnClassifier model(static_cast<std::size_t>(dims[0]), cfg);
  model.set_normalization(norm[0], norm[1]);
  ad::NamedTensors params;
  for (const auto& item : tensors)
    if (item.first.rfind("meta.", 0) != 0) params.push_back(item);
  model.parameters().load(params);
  return model;
}

void SmallCnnClassifier::save(const std::filesystem::path& path) const { ad::save_tensors(path, to_tensors()); }

SmallCnnClassifier SmallCnnClassifier::load(const std::filesystem::path& path) {
  return from_tensors(ad::load_tensors(path));
}

SmallCnnClassifier fit_cnn(const Dataset& d, const CnnConfig& cfg, std::vector<double>* epoch_losses) {
  if (d.labels() != std::vector<ClassLabel>{ClassLabel{0}, ClassLabel{1}})
    throw UsageError("the CNN classifier needs exactly two classes labelled 0 and 1");
  SmallCnnClassifier model(d.series_length(), cfg);

  double sum = 0.0, sq = 0.0;
  std::size_t count = 0;
  for (const auto& inst : d.instances())
    for (double v : inst.series.values()) {
      sum += v;
      sq += v * v;
      ++count;
    }
  const double mean = sum / static_cast<double>(count);
  const double var = std::max(0.0, sq / static_cast<double>(count) - mean * mean);
  model.set_normalization(mean, var > 1e-24 ? std::sqrt(var) : 1.0);

  ad::Adam opt(model.parameters().vars(), cfg.lr);
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<TimeSeries> batch;
      ad::Tensor target({end - start, 1});
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(d[order[i]].series);
        target[i - start] = static_cast<double>(d[order[i]].label.value);
      }
      opt.zero_grad();
      const auto loss = ad::bce_with_logits(model.logits(batch), target);
      if (!std::isfinite(loss.item())) throw TrainingError("cnn", "non-finite loss");
      ad::backward(loss);
      opt.step();
      total += loss.item() * static_cast<double>(end - start);
    }
    if (epoch_losses) epoch_losses->push_back(total / static_cast<double>(d.size()));
  }
  return model;
}

std::unique_ptr<Predictor> make_classifier(const std::string& name, const Dataset& train, const CnnConfig& cnn) {
  if (name == "1nn") return std::make_unique<OneNnClassifier>(train);
  if (name == "cnn") return std::make_unique<SmallCnnClassifier>(fit_cnn(train, cnn));
  if (name == "constant") return std::make_unique<ConstantClassifier>(ClassLabel{0});
  throw UsageError("unknown classifier '" + name + "' (expected 1nn, cnn or constant)");
}

double accuracy(const Predictor& f, const Dataset& d) {
  if (d.empty()) throw InputError("accuracy on an empty dataset");
  std::size_t hits = 0;
  for (const auto& inst : d.instances()) hits += f.predict(inst.series) == inst.label;
  return static_cast<double>(hits) / static_cast<double>(d.size());
}

}  // namespace timecf
