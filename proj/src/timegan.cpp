#include "timecf/timegan.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "timecf/autodiff/adam.hpp"

namespace timecf {

using ad::Tensor;
using ad::Var;

void TimeGanConfig::validate() const {
  if (hidden_dim == 0 || num_layers == 0 || z_dim == 0 || batch_size == 0)
    throw UsageError("TimeGAN dimensions and batch size must be positive");
  if (iters_embed == 0 || iters_supervised == 0 || iters_joint == 0)
    throw UsageError("TimeGAN iteration counts must be positive");
  if (!(lr > 0.0)) throw UsageError("TimeGAN learning rate must be positive");
  if (lambda_sup < 0.0 || lambda_moment < 0.0 || gamma < 0.0 || d_threshold < 0.0)
    throw UsageError("TimeGAN loss weights must be non-negative");
}

SequenceNet::SequenceNet(std::size_t in, std::size_t hidden, std::size_t out, std::size_t layers, bool sigmoid_out,
                         std::mt19937_64& rng)
    : rnn(in, hidden, layers, rng), head(hidden, out, rng), sigmoid_head(sigmoid_out) {}

std::vector<Var> SequenceNet::operator()(const std::vector<Var>& steps) const {
  std::vector<Var> hs = rnn.run(steps);
  for (auto& h : hs) h = sigmoid_head ? ad::sigmoid(head(h)) : head(h);
  return hs;
}

ad::ParameterSet SequenceNet::parameters() const {
  ad::ParameterSet p = rnn.parameters();
  p.append("head.", head.parameters());
  return p;
}

TimeGanModel::TimeGanModel(const TimeGanConfig& cfg, std::size_t length) : cfg_(cfg), length_(length) {
  cfg_.validate();
  if (length < 2) throw UsageError("TimeGAN needs series of length >= 2");
  std::mt19937_64 rng(cfg.seed);
  const std::size_t h = cfg.hidden_dim;
  const std::size_t l = cfg.num_layers;
  embedder_ = SequenceNet(1, h, h, l, true, rng);
  recovery_ = SequenceNet(h, h, 1, l, true, rng);
  generator_ = SequenceNet(cfg.z_dim, h, h, l, true, rng);
  supervisor_ = SequenceNet(h, h, h, std::max<std::size_t>(1, l - 1), true, rng);
  discriminator_ = SequenceNet(h, h, 1, l, false, rng);
}

ad::ParameterSet TimeGanModel::parameters() const {
  ad::ParameterSet p;
  p.append("embedder.", embedder_.parameters());
  p.append("recovery.", recovery_.parameters());
  p.append("generator.", generator_.parameters());
  p.append("supervisor.", supervisor_.parameters());
  p.append("discriminator.", discriminator_.parameters());
  return p;
}

ad::NamedTensors TimeGanModel::to_tensors() const {
  ad::NamedTensors out;
  out.emplace_back("meta.dims", Tensor({4}, {static_cast<double>(cfg_.hidden_dim), static_cast<double>(cfg_.num_layers),
                                             static_cast<double>(cfg_.z_dim), static_cast<double>(length_)}));
  if (scaler_) out.emplace_back("meta.scaler", Tensor({2}, {scaler_->min(), scaler_->max()}));
  for (auto& nt : parameters().snapshot()) out.push_back(std::move(nt));
  return out;
}

TimeGanModel TimeGanModel::from_tensors(const ad::NamedTensors& tensors) {
  const Tensor* dims = nullptr;
  const Tensor* scaler = nullptr;
  for (const auto& [n, t] : tensors) {
    if (n == "meta.dims") dims = &t;
    if (n == "meta.scaler") scaler = &t;
  }
  if (!dims || dims->size() != 4) throw ParseError("TimeGAN parameter file lacks meta.dims", 0);
  TimeGanConfig cfg;
  cfg.hidden_dim = static_cast<std::size_t>((*dims)[0]);
  cfg.num_layers = static_cast<std::size_t>((*dims)[1]);
  cfg.z_dim = static_cast<std::size_t>((*dims)[2]);
  TimeGanModel model(cfg, static_cast<std::size_t>((*dims)[3]));
  if (scaler) {
    if (scaler->size() != 2) throw ParseError("meta.scaler must hold two values", 0);
    model.set_scaler(MinMaxScaler((*scaler)[0], (*scaler)[1]));
  }
  model.parameters().load(tensors);
  return model;
}

void TimeGanModel::save(const std::filesystem::path& path) const { ad::save_tensors(path, to_tensors()); }

TimeGanModel TimeGanModel::load(const std::filesystem::path& path) { return from_tensors(ad::load_tensors(path)); }

namespace {

std::vector<Var> data_steps(const Dataset& d, const std::vector<std::size_t>& idx) {
  const std::size_t n = d.series_length();
  std::vector<Var> steps;
  steps.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    Tensor x({idx.size(), 1});
    for (std::size_t b = 0; b < idx.size(); ++b) x[b] = d[idx[b]].series[t];
    steps.push_back(Var::constant(std::move(x)));
  }
  return steps;
}

std::vector<Var> noise_steps(std::size_t batch, std::size_t length, std::size_t z_dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Tensor> raw(length, Tensor({batch, z_dim}));
  // Draw per series then per step so a series' noise does not depend on the batch size.
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t t = 0; t < length; ++t)
      for (std::size_t k = 0; k < z_dim; ++k) raw[t][b * z_dim + k] = u(rng);
  std::vector<Var> steps;
  steps.reserve(length);
  for (auto& t : raw) steps.push_back(Var::constant(std::move(t)));
  return steps;
}

std::vector<Var> constants(const std::vector<Var>& vs) {
  std::vector<Var> out;
  out.reserve(vs.size());
  for (const auto& v : vs) out.push_back(ad::detach(v));
  return out;
}

std::vector<Var> drop_first(const std::vector<Var>& v) { return {v.begin() + 1, v.end()}; }
std::vector<Var> drop_last(const std::vector<Var>& v) { return {v.begin(), v.end() - 1}; }

Tensor filled_like(const Var& v, double x) { return Tensor(v.shape(), x); }

void check_finite(double v, const char* phase, std::size_t it) {
  if (!std::isfinite(v))
    throw TrainingError(phase, "non-finite loss at iteration " + std::to_string(it + 1));
}

class BatchSampler {
 public:
  BatchSampler(const Dataset& d, std::size_t batch, std::mt19937_64& rng, const TrainObserver& obs)
      : d_(d), batch_(std::min(batch, d.size())), rng_(rng), obs_(obs), perm_(d.size()) {}

  std::vector<std::size_t> next() {
    std::iota(perm_.begin(), perm_.end(), 0);
    std::shuffle(perm_.begin(), perm_.end(), rng_);
    std::vector<std::size_t> idx(perm_.begin(), perm_.begin() + static_cast<std::ptrdiff_t>(batch_));
    if (obs_.on_instance_read)
      for (auto i : idx) obs_.on_instance_read(i);
    return idx;
  }

 private:
  const Dataset& d_;
  std::size_t batch_;
  std::mt19937_64& rng_;
  const TrainObserver& obs_;
  std::vector<std::size_t> perm_;
};

Var sqrt_eps(const Var& x) { return ad::sqrt(ad::add_scalar(x, 1e-12)); }

}  // namespace

TimeGanModel train_timegan(const Dataset& subset, const TimeGanConfig& cfg, TrainingLog* log,
                           const TrainObserver& observer) {
  cfg.validate();
  if (subset.empty()) throw UsageError("cannot train TimeGAN on an empty subset");
  for (const auto& inst : subset.instances())
    for (double v : inst.series.values())
      if (v < 0.0 || v > 1.0) throw UsageError("TimeGAN training data must be scaled into [0,1]");

  TimeGanModel model(cfg, subset.series_length());
  TrainingLog local_log;
  TrainingLog& lg = log ? *log : local_log;
  std::mt19937_64 rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);
  BatchSampler sampler(subset, cfg.batch_size, rng, observer);
  const std::size_t n = subset.series_length();

  const auto& emb = model.embedder();
  const auto& rec = model.recovery();
  const auto& gen = model.generator();
  const auto& sup = model.supervisor();
  const auto& dis = model.discriminator();

  auto vars_of = [](std::initializer_list<const SequenceNet*> nets) {
    std::vector<Var> out;
    for (const auto* net : nets)
      for (auto& v : net->parameters().vars()) out.push_back(v);
    return out;
  };
  const std::vector<Var> all = model.parameters().vars();
  auto zero_all = [&] {
    for (auto v : all) v.zero_grad();
  };

  ad::Adam opt_e0(vars_of({&emb, &rec}), cfg.lr);
  ad::Adam opt_gs(vars_of({&gen, &sup}), cfg.lr);
  ad::Adam opt_g(vars_of({&gen, &sup}), cfg.lr);
  ad::Adam opt_e(vars_of({&emb, &rec}), cfg.lr);
  ad::Adam opt_d(vars_of({&dis}), cfg.lr);

  // Phase 1: autoencoder.
  for (std::size_t it = 0; it < cfg.iters_embed; ++it) {
    const auto x = data_steps(subset, sampler.next());
    const Var mse = ad::mse_loss(ad::concat_time(rec(emb(x))), ad::concat_time(x));
    check_finite(mse.item(), "embedding", it);
    zero_all();
    ad::backward(ad::scale(sqrt_eps(mse), 10.0));
    opt_e0.step();
    lg.reconstruction.push_back(mse.item());
  }

  // Phase 2: supervised next-step prediction in latent space.
  for (std::size_t it = 0; it < cfg.iters_supervised; ++it) {
    const auto x = data_steps(subset, sampler.next());
    std::vector<Var> h;
    {
      ad::NoGradGuard guard;
      h = constants(emb(x));
    }
    const Var loss = ad::mse_loss(ad::concat_time(drop_first(h)), ad::concat_time(drop_last(sup(h))));
    check_finite(loss.item(), "supervised", it);
    zero_all();
    ad::backward(loss);
    opt_gs.step();
    lg.supervised.push_back(loss.item());
  }

  // Phase 3: joint adversarial training.
  for (std::size_t it = 0; it < cfg.iters_joint; ++it) {
    double g_total = 0.0;
    double e_recon = 0.0;
    for (int kk = 0; kk < 2; ++kk) {
      const auto idx = sampler.next();
      const auto x = data_steps(subset, idx);
      const auto z = noise_steps(idx.size(), n, cfg.z_dim, rng);
      const Var x_cat = ad::concat_time(x);

      std::vector<Var> h;
      {
        ad::NoGradGuard guard;
        h = constants(emb(x));
      }
      const auto e_hat = gen(z);
      const auto h_hat = sup(e_hat);
      const Var x_hat = ad::concat_time(rec(h_hat));
      const Var y_fake = ad::concat_time(dis(h_hat));
      const Var y_fake_e = ad::concat_time(dis(e_hat));
      const Var g_u = ad::bce_with_logits(y_fake, filled_like(y_fake, 1.0));
      const Var g_u_e = ad::bce_with_logits(y_fake_e, filled_like(y_fake_e, 1.0));
      const Var g_s = ad::mse_loss(ad::concat_time(drop_first(h)), ad::concat_time(drop_last(sup(h))));
      const Var v1 = ad::mean(ad::abs(ad::sub(ad::batch_std(x_hat, 1e-6), ad::batch_std(x_cat, 1e-6))));
      const Var v2 = ad::mean(ad::abs(ad::sub(ad::batch_mean(x_hat), ad::batch_mean(x_cat))));
      const Var g_loss = ad::add(ad::add(g_u, ad::scale(g_u_e, cfg.gamma)),
                                 ad::add(ad::scale(sqrt_eps(g_s), cfg.lambda_sup),
                                         ad::scale(ad::add(v1, v2), cfg.lambda_moment)));
      check_finite(g_loss.item(), "joint", it);
      zero_all();
      ad::backward(g_loss);
      opt_g.step();
      g_total = g_loss.item();

      const auto h_e = emb(x);
      const Var recon = ad::mse_loss(ad::concat_time(rec(h_e)), x_cat);
      const Var sup_e = ad::mse_loss(ad::concat_time(drop_first(h_e)), ad::concat_time(drop_last(sup(h_e))));
      const Var e_loss = ad::add(ad::scale(sqrt_eps(recon), 10.0), ad::scale(sup_e, 0.1));
      check_finite(e_loss.item(), "joint", it);
      zero_all();
      ad::backward(e_loss);
      opt_e.step();
      e_recon = recon.item();
    }

    const auto idx = sampler.next();
    const auto x = data_steps(subset, idx);
    const auto z = noise_steps(idx.size(), n, cfg.z_dim, rng);
    std::vector<Var> h, e_hat, h_hat;
    {
      ad::NoGradGuard guard;
      h = constants(emb(x));
      e_hat = constants(gen(z));
      h_hat = constants(sup(e_hat));
    }
    const Var y_real = ad::concat_time(dis(h));
    const Var y_fake = ad::concat_time(dis(h_hat));
    const Var y_fake_e = ad::concat_time(dis(e_hat));
    const Var d_loss = ad::add(ad::add(ad::bce_with_logits(y_real, filled_like(y_real, 1.0)),
                                       ad::bce_with_logits(y_fake, filled_like(y_fake, 0.0))),
                               ad::scale(ad::bce_with_logits(y_fake_e, filled_like(y_fake_e, 0.0)), cfg.gamma));
    check_finite(d_loss.item(), "joint", it);
    if (d_loss.item() > cfg.d_threshold) {
      zero_all();
      ad::backward(d_loss);
      opt_d.step();
      ++lg.discriminator_updates;
    }
    lg.generator.push_back(g_total);
    lg.embedder.push_back(e_recon);
    lg.discriminator.push_back(d_loss.item());
  }
  return model;
}

std::vector<TimeSeries> sample_fakes(const TimeGanModel& model, std::size_t m, std::size_t n, std::uint64_t seed) {
  if (n != model.length())
    throw UsageError("model was trained on length " + std::to_string(model.length()) + ", asked for " +
                     std::to_string(n));
  if (m == 0) throw UsageError("sample count must be positive");
  std::mt19937_64 rng(seed);
  ad::NoGradGuard guard;
  const auto z = noise_steps(m, n, model.config().z_dim, rng);
  const auto x = model.recovery()(model.supervisor()(model.generator()(z)));
  std::vector<TimeSeries> out;
  out.reserve(m);
  for (std::size_t b = 0; b < m; ++b) {
    std::vector<double> v(n);
    for (std::size_t t = 0; t < n; ++t) v[t] = x[t].value()[b];
    out.emplace_back(std::move(v), "fake-" + std::to_string(b));
  }
  return out;
}

}  // namespace timecf
