#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "timecf/autodiff/layers.hpp"
#include "timecf/autodiff/serialize.hpp"
#include "timecf/core.hpp"
#include "timecf/ingest.hpp"

namespace timecf {

struct TimeGanConfig {
  std::size_t hidden_dim = 16;
  std::size_t num_layers = 1;
  std::size_t z_dim = 1;
  std::size_t iters_embed = 500;
  std::size_t iters_supervised = 500;
  std::size_t iters_joint = 1000;
  std::size_t batch_size = 16;
  double lr = 1e-3;
  std::uint64_t seed = 1;
  double lambda_sup = 100.0;     // weight on sqrt(supervised loss)
  double lambda_moment = 100.0;  // weight on the mean/std moment loss
  double gamma = 1.0;            // weight on the latent (unsupervised) adversarial terms
  double d_threshold = 0.15;     // discriminator updates only when its loss exceeds this

  void validate() const;
};

// Loss traces, one entry per iteration of the respective phase.
struct TrainingLog {
  std::vector<double> reconstruction;  // phase 1, reconstruction MSE
  std::vector<double> supervised;      // phase 2, next-step latent MSE
  std::vector<double> generator;       // phase 3, total generator loss
  std::vector<double> embedder;        // phase 3, reconstruction MSE
  std::vector<double> discriminator;   // phase 3, discriminator BCE
  std::size_t discriminator_updates = 0;
};

struct TrainObserver {
  // Called with the dataset index of every instance drawn into a batch.
  std::function<void(std::size_t)> on_instance_read;
};

// A single network of the TimeGAN family: GRU stack plus a per-step head.
struct SequenceNet {
  ad::GruStack rnn;
  ad::Linear head;
  bool sigmoid_head = true;

  SequenceNet() = default;
  SequenceNet(std::size_t in, std::size_t hidden, std::size_t out, std::size_t layers, bool sigmoid_out,
              std::mt19937_64& rng);
  std::vector<ad::Var> operator()(const std::vector<ad::Var>& steps) const;
  ad::ParameterSet parameters() const;
};

class TimeGanModel {
 public:
  TimeGanModel(const TimeGanConfig& cfg, std::size_t length);

  std::size_t length() const noexcept { return length_; }
  const TimeGanConfig& config() const noexcept { return cfg_; }

  // Scaler that maps original data into the space the model was trained in.
  const std::optional<MinMaxScaler>& scaler() const noexcept { return scaler_; }
  void set_scaler(const MinMaxScaler& s) { scaler_ = s; }

  const SequenceNet& embedder() const noexcept { return embedder_; }
  const SequenceNet& recovery() const noexcept { return recovery_; }
  const SequenceNet& generator() const noexcept { return generator_; }
  const SequenceNet& supervisor() const noexcept { return supervisor_; }
  const SequenceNet& discriminator() const noexcept { return discriminator_; }

  ad::ParameterSet parameters() const;

  // Parameters plus meta tensors (dimensions, scaler) in the TCF1 layout.
  ad::NamedTensors to_tensors() const;
  static TimeGanModel from_tensors(const ad::NamedTensors& tensors);
  void save(const std::filesystem::path& path) const;
  static TimeGanModel load(const std::filesystem::path& path);

 private:
  TimeGanConfig cfg_;
  std::size_t length_;
  std::optional<MinMaxScaler> scaler_;
  SequenceNet embedder_, recovery_, generator_, supervisor_, discriminator_;
};

// Three-phase training on a subset already scaled into [0,1].
TimeGanModel train_timegan(const Dataset& scaled_subset, const TimeGanConfig& cfg, TrainingLog* log = nullptr,
                           const TrainObserver& observer = {});

// m series of length n in scaled space, from Uniform[0,1] noise per step and z-dim.
std::vector<TimeSeries> sample_fakes(const TimeGanModel& model, std::size_t m, std::size_t n, std::uint64_t seed);

}  // namespace timecf
