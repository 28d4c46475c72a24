#include "timecf/cfgen.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <tuple>

#include "timecf/ingest.hpp"
#include "timecf/parallel.hpp"

namespace timecf {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string id_of(const TimeSeries& t) { return t.id().value_or(""); }

}  // namespace

std::string to_string(Method m) { return m == Method::timecf ? "timecf" : "nun"; }

Method parse_method(const std::string& s) {
  if (s == "timecf") return Method::timecf;
  if (s == "nun") return Method::nun;
  throw UsageError("unknown method '" + s + "' (expected timecf or nun)");
}

std::vector<CounterfactualResult> generate_counterfactuals(const TimeSeries& t, ClassLabel l,
                                                           const std::vector<ShapeletCandidate>& shapelets,
                                                           const std::vector<TimeSeries>& fakes, const Predictor& f,
                                                           double eps, std::size_t threads) {
  const std::size_t n = t.size();
  for (const auto& fake : fakes)
    if (fake.size() != n)
      throw InputError("fake of length " + std::to_string(fake.size()) + " does not match series length " +
                       std::to_string(n));
  std::vector<std::size_t> active;
  for (std::size_t s = 0; s < shapelets.size(); ++s) {
    if (!shapelets[s].interval.fits(n)) throw InputError("shapelet interval does not fit the series");
    if (shapelets[s].class_label == l) active.push_back(s);
  }

  const std::size_t cells = active.size() * fakes.size();
  std::vector<std::optional<CounterfactualResult>> grid(cells);
  parallel_for(cells, threads, [&](std::size_t k) {
    const std::size_t s = active[k / fakes.size()];
    const std::size_t j = k % fakes.size();
    const Interval iv = shapelets[s].interval;
    const auto seg = crop(fakes[j], iv);
    TimeSeries cf = replace_segment(t, seg, iv);
    const ClassLabel p = f.predict(cf);
    if (p == l) return;
    CounterfactualResult r;
    r.original_id = id_of(t);
    r.original_label = l;
    r.predicted_label = p;
    r.interval = iv;
    r.shapelet_ref = s;
    r.fake_index = j;
    r.hamming = hamming_distance(t, cf, eps);
    r.l1 = l1_distance(t, cf);
    r.counterfactual = std::move(cf);
    r.method = Method::timecf;
    grid[k] = std::move(r);
  });

  std::vector<CounterfactualResult> out;
  for (auto& cell : grid)
    if (cell && f.predict(cell->counterfactual) != l) out.push_back(std::move(*cell));
  return out;
}

const CounterfactualResult& recommend(const std::vector<CounterfactualResult>& c, const TimeSeries& t, double eps) {
  if (c.empty()) throw NoCounterfactual();
  auto key = [&](const CounterfactualResult& r) {
    return std::make_tuple(hamming_distance(t, r.counterfactual, eps), r.l1, r.interval.start,
                           r.fake_index.value_or(std::numeric_limits<std::size_t>::max()));
  };
  std::size_t best = 0;
  auto best_key = key(c[0]);
  for (std::size_t i = 1; i < c.size(); ++i) {
    auto k = key(c[i]);
    if (k < best_key) {
      best_key = k;
      best = i;
    }
  }
  return c[best];
}

std::optional<CounterfactualResult> nun_baseline(const TimeSeries& t, ClassLabel l, const Dataset& train,
                                                 const Predictor& f, double eps) {
  if (t.size() != train.series_length()) throw InputError("series length does not match the training set");
  std::optional<std::size_t> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train[i].label == l) continue;
    const double d = squared_euclidean(t.values(), train[i].series.values());
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  if (!best) return std::nullopt;
  const TimeSeries& nun = train[*best].series;
  const ClassLabel p = f.predict(nun);
  if (p == l) return std::nullopt;
  CounterfactualResult r;
  r.original_id = id_of(t);
  r.original_label = l;
  r.counterfactual = TimeSeries(nun.vec(), nun.id());
  r.predicted_label = p;
  r.interval = {0, t.size()};
  r.neighbor_index = *best;
  r.hamming = hamming_distance(t, nun, eps);
  r.l1 = l1_distance(t, nun);
  r.method = Method::nun;
  return r;
}

GanCache::GanCache(TimeGanConfig cfg, bool enabled) : cfg_(std::move(cfg)), enabled_(enabled) { cfg_.validate(); }

TimeGanModel train_gan_excluding(const Dataset& train, ClassLabel excluded, const TimeGanConfig& cfg, TrainingLog* log,
                                 const TrainObserver& observer,
                                 const std::function<void(const Dataset&, ClassLabel)>& hook) {
  const Dataset subset = train.without_label(excluded);
  // Fitted on the whole training split so a constant subset still scales.
  const MinMaxScaler scaler = MinMaxScaler::fit(train);
  const Dataset scaled = scaler.transform(subset);
  if (hook) hook(scaled, excluded);
  TimeGanModel model = train_timegan(scaled, cfg, log, observer);
  model.set_scaler(scaler);
  return model;
}

std::shared_ptr<const TimeGanModel> GanCache::train(const Dataset& train, ClassLabel excluded) {
  const auto t0 = std::chrono::steady_clock::now();
  auto model = std::make_shared<const TimeGanModel>(train_gan_excluding(train, excluded, cfg_, nullptr, observer_, hook_));
  const double secs = seconds_since(t0);
  std::lock_guard lock(mu_);
  ++trainings_;
  seconds_ += secs;
  return model;
}

std::shared_ptr<const TimeGanModel> GanCache::get(const Dataset& train_set, ClassLabel excluded) {
  if (enabled_) {
    std::lock_guard lock(mu_);
    if (auto it = models_.find(excluded.value); it != models_.end()) return it->second;
  }
  auto model = train(train_set, excluded);
  if (enabled_) {
    std::lock_guard lock(mu_);
    models_.emplace(excluded.value, model);
  }
  return model;
}

void GanCache::prewarm(const Dataset& train_set, const std::vector<ClassLabel>& excluded, std::size_t threads) {
  if (!enabled_) return;
  parallel_for(excluded.size(), threads, [&](std::size_t i) { get(train_set, excluded[i]); });
}

void GanCache::insert(ClassLabel excluded, std::shared_ptr<const TimeGanModel> model) {
  std::lock_guard lock(mu_);
  models_[excluded.value] = std::move(model);
}

std::size_t GanCache::trainings() const {
  std::lock_guard lock(mu_);
  return trainings_;
}

double GanCache::training_seconds() const {
  std::lock_guard lock(mu_);
  return seconds_;
}

std::vector<TimeSeries> sample_original_scale(const TimeGanModel& model, std::size_t m, std::uint64_t seed) {
  if (!model.scaler()) throw UsageError("TimeGAN model carries no scaler");
  auto fakes = sample_fakes(model, m, model.length(), seed);
  for (auto& fake : fakes) fake = model.scaler()->inverse_transform(fake);
  return fakes;
}

ExplanationReport explain(const TimeSeries& t, ClassLabel l, const Dataset& train, const Predictor& f,
                          const std::vector<ShapeletCandidate>& shapelets, GanCache& gans, const ExplainConfig& cfg) {
  if (t.size() != train.series_length()) throw InputError("series length does not match the training set");
  if (cfg.m == 0) throw UsageError("the number of fakes must be positive");
  if (train.count(l) == train.size()) throw UsageError("training set has no instance with a label other than the one explained");
  ExplanationReport rep;
  rep.original_id = id_of(t);
  rep.original = t;
  rep.original_label = l;
  rep.method = Method::timecf;

  auto t0 = std::chrono::steady_clock::now();
  const auto model = gans.get(train, l);
  rep.runtime.gan_seconds = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  const auto fakes = sample_original_scale(*model, cfg.m, cfg.sample_seed);
  rep.fakes = fakes.size();
  rep.runtime.sample_seconds = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  rep.results = generate_counterfactuals(t, l, shapelets, fakes, f, cfg.eps, cfg.threads);
  rep.runtime.search_seconds = seconds_since(t0);

  for (std::size_t s = 0; s < shapelets.size(); ++s) {
    ShapeletOutcome o;
    o.shapelet_index = s;
    o.used = shapelets[s].class_label == l;
    o.attempts = o.used ? fakes.size() : 0;
    o.flips = static_cast<std::size_t>(std::count_if(rep.results.begin(), rep.results.end(),
                                                     [&](const CounterfactualResult& r) { return r.shapelet_ref == s; }));
    rep.outcomes.push_back(o);
  }
  if (!rep.results.empty()) rep.recommended = recommend(rep.results, t, cfg.eps);
  return rep;
}

ExplanationReport explain_nun(const TimeSeries& t, ClassLabel l, const Dataset& train, const Predictor& f, double eps) {
  ExplanationReport rep;
  rep.original_id = id_of(t);
  rep.original = t;
  rep.original_label = l;
  rep.method = Method::nun;
  const auto t0 = std::chrono::steady_clock::now();
  if (auto r = nun_baseline(t, l, train, f, eps)) {
    rep.results.push_back(*r);
    rep.recommended = std::move(*r);
  }
  rep.runtime.search_seconds = seconds_since(t0);
  return rep;
}

}  // namespace timecf
