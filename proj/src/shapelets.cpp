#include "timecf/shapelets.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <unordered_set>

#include "timecf/parallel.hpp"

namespace timecf {

std::vector<std::size_t> RstConfig::default_lengths(std::size_t n) {
  auto frac = [n](double f) { return static_cast<std::size_t>(std::ceil(f * static_cast<double>(n))); };
  std::vector<std::size_t> out{std::max<std::size_t>(3, frac(0.1)), frac(0.2), frac(0.3)};
  for (auto& l : out) l = std::clamp<std::size_t>(l, 3, n);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::size_t> RstConfig::resolved_lengths(std::size_t n) const {
  return lengths.empty() ? default_lengths(n) : lengths;
}

void RstConfig::validate(std::size_t n) const {
  if (n < 3) throw UsageError("shapelet extraction needs series of length >= 3");
  for (auto l : resolved_lengths(n))
    if (l < 3 || l > n) throw UsageError("shapelet length " + std::to_string(l) + " outside [3, " + std::to_string(n) + "]");
  if (max_candidates == 0 || n_keep == 0) throw UsageError("max_candidates and n_keep must be positive");
  if (n_keep > max_candidates) throw UsageError("n_keep must not exceed max_candidates");
  if (!(overlap_threshold >= 0.0 && overlap_threshold <= 1.0)) throw UsageError("overlap_threshold must lie in [0,1]");
  if (time_budget && !(*time_budget > 0.0)) throw UsageError("time_budget must be positive");
}

namespace {

std::vector<double> znorm(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  const double mu = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double var = 0.0;
  for (double x : v) var += (x - mu) * (x - mu);
  const double sd = std::sqrt(var / n);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = sd > 1e-12 ? (v[i] - mu) / sd : 0.0;
  return out;
}

}  // namespace

double min_subsequence_distance(std::span<const double> candidate, const TimeSeries& t, bool z_normalize) {
  const std::size_t len = candidate.size();
  const std::size_t n = t.size();
  if (len == 0) throw InputError("empty shapelet candidate");
  if (len > n)
    throw InputError("candidate of length " + std::to_string(len) + " is longer than the series (" + std::to_string(n) + ")");
  const auto values = t.values();
  double best = std::numeric_limits<double>::infinity();
  if (z_normalize) {
    const auto c = znorm(candidate);
    for (std::size_t off = 0; off + len <= n; ++off) {
      const auto w = znorm(values.subspan(off, len));
      double s = 0.0;
      for (std::size_t i = 0; i < len; ++i) s += (c[i] - w[i]) * (c[i] - w[i]);
      best = std::min(best, s);
    }
  } else {
    for (std::size_t off = 0; off + len <= n; ++off) {
      double s = 0.0;
      for (std::size_t i = 0; i < len && s < best; ++i) {
        const double d = candidate[i] - values[off + i];
        s += d * d;
      }
      best = std::min(best, s);
    }
  }
  return best / static_cast<double>(len);
}

double entropy_bits(std::span<const std::size_t> counts, std::size_t total) {
  if (total == 0) return 0.0;
  double h = 0.0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

SplitResult information_gain(std::span<const double> distances, std::span<const ClassLabel> labels) {
  if (distances.empty() || labels.empty()) throw InputError("information gain needs at least one point");
  if (distances.size() != labels.size()) throw InputError("distances and labels differ in length");
  const std::size_t n = distances.size();
  int max_label = 0;
  for (const auto& l : labels) {
    if (l.value < 0) throw InputError("negative class label");
    max_label = std::max(max_label, l.value);
  }
  const std::size_t k = static_cast<std::size_t>(max_label) + 1;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return distances[a] < distances[b]; });

  std::vector<std::size_t> right(k, 0), left(k, 0);
  for (const auto& l : labels) ++right[static_cast<std::size_t>(l.value)];
  const double h_all = entropy_bits(right, n);

  SplitResult res{0.0, distances[order[0]]};
  double best = std::numeric_limits<double>::infinity();
  const double total = static_cast<double>(n);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const auto cls = static_cast<std::size_t>(labels[order[i]].value);
    ++left[cls];
    --right[cls];
    const double lo = distances[order[i]];
    const double hi = distances[order[i + 1]];
    if (!(lo < hi)) continue;
    const std::size_t nl = i + 1;
    const std::size_t nr = n - nl;
    const double weighted = static_cast<double>(nl) / total * entropy_bits(left, nl) +
                            static_cast<double>(nr) / total * entropy_bits(right, nr);
    if (weighted < best) {
      best = weighted;
      res.threshold = (lo + hi) / 2.0;
    }
  }
  if (best != std::numeric_limits<double>::infinity()) res.gain = std::max(0.0, h_all - best);
  return res;
}

namespace {

struct Slot {
  std::size_t source;
  std::size_t length;
  std::size_t start;
};

// Decodes a flat index over (instance, length, start) triples.
class CandidateSpace {
 public:
  CandidateSpace(std::size_t n_instances, std::size_t n, std::vector<std::size_t> lengths)
      : n_instances_(n_instances), lengths_(std::move(lengths)) {
    for (auto l : lengths_) {
      offsets_.push_back(per_instance_);
      per_instance_ += n - l + 1;
    }
  }
  std::size_t size() const { return n_instances_ * per_instance_; }
  Slot decode(std::size_t flat) const {
    const std::size_t inst = flat / per_instance_;
    std::size_t rem = flat % per_instance_;
    std::size_t b = lengths_.size() - 1;
    while (offsets_[b] > rem) --b;
    return {inst, lengths_[b], rem - offsets_[b]};
  }

 private:
  std::size_t n_instances_;
  std::vector<std::size_t> lengths_;
  std::vector<std::size_t> offsets_;
  std::size_t per_instance_ = 0;
};

std::vector<std::size_t> sample_without_replacement(std::size_t total, std::size_t k, std::mt19937_64& rng) {
  std::vector<std::size_t> out;
  if (k * 2 >= total) {
    out.resize(total);
    std::iota(out.begin(), out.end(), 0);
    std::shuffle(out.begin(), out.end(), rng);
    out.resize(std::min(k, total));
    return out;
  }
  std::unordered_set<std::size_t> seen;
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);
  while (out.size() < k) {
    const std::size_t v = pick(rng);
    if (seen.insert(v).second) out.push_back(v);
  }
  return out;
}

bool ranks_before(const ShapeletCandidate& a, const ShapeletCandidate& b) {
  if (a.quality != b.quality) return a.quality > b.quality;
  if (a.interval.length != b.interval.length) return a.interval.length < b.interval.length;
  if (a.source_index != b.source_index) return a.source_index < b.source_index;
  return a.interval.start < b.interval.start;
}

}  // namespace

std::vector<ShapeletCandidate> extract_top_shapelets(const Dataset& d, const RstConfig& cfg) {
  if (d.labels().size() < 2) throw UsageError("shapelet extraction needs at least two classes");
  const std::size_t n = d.series_length();
  cfg.validate(n);

  const CandidateSpace space(d.size(), n, cfg.resolved_lengths(n));
  std::mt19937_64 rng(cfg.seed);
  const auto picks = sample_without_replacement(space.size(), std::min(cfg.max_candidates, space.size()), rng);

  std::vector<ClassLabel> labels;
  labels.reserve(d.size());
  for (const auto& inst : d.instances()) labels.push_back(inst.label);

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::optional<ShapeletCandidate>> scored(picks.size());
  parallel_for(picks.size(), cfg.threads, [&](std::size_t i) {
    if (cfg.time_budget) {
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - t0;
      if (elapsed.count() > *cfg.time_budget) return;
    }
    const Slot slot = space.decode(picks[i]);
    ShapeletCandidate c;
    c.source_index = slot.source;
    c.class_label = d[slot.source].label;
    c.interval = {slot.start, slot.length};
    c.values = crop(d[slot.source].series, c.interval);
    std::vector<double> dist(d.size());
    for (std::size_t j = 0; j < d.size(); ++j) dist[j] = min_subsequence_distance(c.values, d[j].series, cfg.z_normalize);
    const SplitResult split = information_gain(dist, labels);
    c.quality = split.gain;
    c.split_threshold = split.threshold;
    scored[i] = std::move(c);
  });

  std::vector<ShapeletCandidate> all;
  for (auto& s : scored)
    if (s) all.push_back(std::move(*s));
  std::sort(all.begin(), all.end(), ranks_before);

  std::vector<ShapeletCandidate> pruned;
  for (auto& c : all) {
    const bool redundant = std::any_of(pruned.begin(), pruned.end(), [&](const ShapeletCandidate& k) {
      if (k.source_index != c.source_index) return false;
      const double shorter = static_cast<double>(std::min(k.interval.length, c.interval.length));
      return static_cast<double>(k.interval.overlap(c.interval)) > cfg.overlap_threshold * shorter;
    });
    if (!redundant) pruned.push_back(std::move(c));
  }

  std::vector<bool> take(pruned.size(), false);
  std::size_t taken = 0;
  if (cfg.balance_classes) {
    // classes ordered by the rank of their best candidate get the remainder slots first
    std::vector<ClassLabel> order;
    for (const auto& c : pruned)
      if (std::find(order.begin(), order.end(), c.class_label) == order.end()) order.push_back(c.class_label);
    const std::size_t k = d.labels().size();
    for (std::size_t ci = 0; ci < order.size(); ++ci) {
      const std::size_t quota = cfg.n_keep / k + (ci < cfg.n_keep % k ? 1 : 0);
      std::size_t got = 0;
      for (std::size_t i = 0; i < pruned.size() && got < quota; ++i)
        if (pruned[i].class_label == order[ci]) {
          take[i] = true;
          ++got;
        }
      taken += got;
    }
  }
  // unused share, or the whole budget when not balancing, goes by global rank
  for (std::size_t i = 0; i < pruned.size() && taken < cfg.n_keep; ++i)
    if (!take[i]) {
      take[i] = true;
      ++taken;
    }

  std::vector<ShapeletCandidate> kept;
  for (std::size_t i = 0; i < pruned.size(); ++i)
    if (take[i]) kept.push_back(std::move(pruned[i]));
  return kept;
}

}  // namespace timecf
