#pragma once

// Random differentiable graphs and a central finite-difference oracle.
// Test-only; shared by the autodiff unit tests and the acceptance suite.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "timecf/autodiff/graph.hpp"
#include "timecf/autodiff/layers.hpp"

namespace timecf::testing {

using ad::Shape;
using ad::Tensor;
using ad::Var;

// Rebuilds the same graph for a given seed. When `overrides` is set, the
// k-th leaf takes overrides[k] as its value instead of the sampled one.
class RandomGraph {
 public:
  static constexpr int kNumOps = 26;

  RandomGraph(std::uint64_t seed, const std::vector<Tensor>* overrides = nullptr)
      : rng_(seed), overrides_(overrides) {
    std::uniform_int_distribution<int> bd(1, 4), dd(1, 6), depth(1, 5);
    batch_ = static_cast<std::size_t>(bd(rng_));
    std::vector<Var> pool;
    const int n_leaves = std::uniform_int_distribution<int>(1, 3)(rng_);
    for (int i = 0; i < n_leaves; ++i) pool.push_back(leaf({batch_, static_cast<std::size_t>(dd(rng_))}));
    const int steps = depth(rng_);
    int op = static_cast<int>(seed % kNumOps);
    for (int s = 0; s < steps; ++s) {
      const Var a = pick(pool);
      pool.push_back(apply((op + s * 7) % kNumOps, a, pool));
    }
    loss_ = reduce(pool.back(), pool);
  }

  const Var& loss() const { return loss_; }
  const std::vector<Var>& leaves() const { return leaves_; }
  // False when some relu/abs input sits too close to its kink for finite differences.
  bool smooth() const { return min_kink_distance_ > 1e-3; }
  const std::set<std::string>& ops() const { return ops_; }

 private:
  Var leaf(Shape shape, double lo = -1.5, double hi = 1.5) {
    std::uniform_real_distribution<double> u(lo, hi);
    Tensor t(shape);
    for (auto& v : t.data()) v = u(rng_);
    if (overrides_) t = (*overrides_)[leaves_.size()];
    Var v = Var::parameter(t);
    leaves_.push_back(v);
    return v;
  }

  Var pick(const std::vector<Var>& pool) {
    return pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng_)];
  }

  // Another pool member with the same shape as a, or a fresh leaf.
  Var partner(const Var& a, const std::vector<Var>& pool) {
    std::vector<Var> same;
    for (const auto& v : pool)
      if (v.shape() == a.shape()) same.push_back(v);
    if (!same.empty() && std::uniform_int_distribution<int>(0, 1)(rng_) == 0) return pick(same);
    return leaf(a.shape());
  }

  void note_kinks(const Var& x) {
    for (double v : x.value().data()) min_kink_distance_ = std::min(min_kink_distance_, std::abs(v));
  }

  Var record(Var v) {
    ops_.insert(v.op());
    return v;
  }

  Var apply(int op, const Var& a, const std::vector<Var>& pool) {
    const std::size_t d = a.shape()[1];
    switch (op) {
      case 0: return record(ad::add(a, partner(a, pool)));
      case 1: return record(ad::add(a, leaf({1, d})));
      case 2: return record(ad::sub(a, partner(a, pool)));
      case 3: return record(ad::mul(a, partner(a, pool)));
      case 4: return record(ad::scale(a, -0.7));
      case 5: return record(ad::add_scalar(a, 0.3));
      case 6: return record(ad::matmul(a, leaf({d, 1 + d % 4})));
      case 7: return record(ad::affine(a, leaf({d, 3}), leaf({1, 3})));
      case 8: return record(ad::tanh(a));
      case 9: return record(ad::sigmoid(a));
      case 10: note_kinks(a); return record(ad::relu(a));
      case 11: return record(ad::sqrt(ad::add_scalar(ad::square(a), 0.5)));
      case 12: note_kinks(a); return record(ad::abs(a));
      case 13: return record(ad::square(a));
      case 14: {
        const Var x = d >= 2 ? a : ad::concat_time({a, a, a});
        const Var x2 = x.shape().size() == 3 ? ad::reshape(x, {batch_, 3 * d}) : x;
        const std::size_t len = x2.shape()[1];
        const std::size_t width = std::min<std::size_t>(2, len);
        const Var conv = record(ad::conv1d(x2, leaf({2, width}), leaf({2})));
        return record(ad::global_mean_over_time(conv));
      }
      case 15: {
        const Var conv = record(ad::conv1d(a, leaf({1, 1})));
        return ad::reshape(conv, {batch_, d});
      }
      case 16: {
        const Var cat = record(ad::concat_time({a, partner(a, pool)}));
        return record(ad::reshape(ad::slice_time(cat, 1, 1), {batch_, d}));
      }
      case 17: {
        const Var seq = ad::concat_time({a, ad::tanh(a)});
        ops_.insert("time_step");
        return ad::time_step(seq, 1);
      }
      case 18: {
        const Var seq = ad::concat_time({a, ad::sigmoid(a), a});
        ops_.insert("slice_time");
        return ad::reshape(ad::slice_time(seq, 1, 2), {batch_, 2 * d});
      }
      case 19: {
        const Var m = record(ad::batch_mean(a));
        return ad::add(a, ad::reshape(m, {1, d}));
      }
      case 20: {
        const Var s = record(ad::batch_std(a, 1e-3));
        return ad::mul(a, ad::reshape(ad::concat_time(std::vector<Var>(batch_, ad::reshape(s, {1, d}))), {batch_, d}));
      }
      case 21: {
        const std::size_t hid = 1 + d % 3;
        ad::GruWeights w;
        w.w_z = leaf({d, hid});
        w.w_r = leaf({d, hid});
        w.w_h = leaf({d, hid});
        w.u_z = leaf({hid, hid});
        w.u_r = leaf({hid, hid});
        w.u_h = leaf({hid, hid});
        w.b_z = leaf({1, hid});
        w.b_r = leaf({1, hid});
        w.b_h = leaf({1, hid});
        const Var h0 = leaf({batch_, hid}, -0.9, 0.9);
        return record(ad::gru_cell(a, ad::gru_cell(a, h0, w), w));
      }
      case 22: {
        const Var s = record(ad::sum(a));
        return ad::scale(ad::add(a, ad::reshape(ad::concat_time(std::vector<Var>(batch_ * d, ad::reshape(s, {1, 1}))), {batch_, d})), 0.1);
      }
      case 23: {
        const Var m = record(ad::mean(a));
        return ad::mul(a, ad::reshape(ad::concat_time(std::vector<Var>(batch_ * d, ad::reshape(m, {1, 1}))), {batch_, d}));
      }
      case 24: return record(ad::reshape(ad::reshape(a, {batch_ * d}), {batch_, d}));
      default: return record(ad::sigmoid(ad::add(a, partner(a, pool))));
    }
  }

  Var reduce(const Var& a, const std::vector<Var>& pool) {
    std::uniform_int_distribution<int> pick_reduce(0, 4);
    Tensor target(a.shape());
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& v : target.data()) v = u(rng_);
    switch (pick_reduce(rng_)) {
      case 0: return record(ad::sum(a));
      case 1: return record(ad::mean(a));
      case 2: return record(ad::mse_loss(a, partner(a, pool)));
      case 3: return record(ad::bce_with_logits(a, target));
      default: return record(ad::bce_loss(ad::sigmoid(a), target));
    }
  }

  std::mt19937_64 rng_;
  const std::vector<Tensor>* overrides_;
  std::size_t batch_ = 1;
  std::vector<Var> leaves_;
  Var loss_;
  double min_kink_distance_ = 1e300;
  std::set<std::string> ops_;
};

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t entries = 0;
};

// Relative error with a floor so near-zero gradients compare absolutely.
inline double rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-4});
}

// Central differences of f w.r.t. every entry of every leaf.
inline GradCheck check_gradients(const std::vector<Tensor>& values,
                                 const std::vector<Tensor>& analytic,
                                 const std::function<double(const std::vector<Tensor>&)>& f, double h = 1e-5) {
  GradCheck out;
  std::vector<Tensor> probe = values;
  for (std::size_t k = 0; k < values.size(); ++k) {
    for (std::size_t i = 0; i < values[k].size(); ++i) {
      probe[k][i] = values[k][i] + h;
      const double fp = f(probe);
      probe[k][i] = values[k][i] - h;
      const double fm = f(probe);
      probe[k][i] = values[k][i];
      const double numeric = (fp - fm) / (2 * h);
      out.max_rel_error = std::max(out.max_rel_error, rel_error(analytic[k][i], numeric));
      ++out.entries;
    }
  }
  return out;
}

struct SuiteResult {
  int graphs = 0;
  int skipped = 0;
  double max_rel_error = 0.0;
  std::set<std::string> ops;
};

// Checks `count` smooth random graphs, drawing seeds from `first_seed` up.
inline SuiteResult run_random_graph_suite(int count, std::uint64_t first_seed = 1000) {
  SuiteResult res;
  for (std::uint64_t seed = first_seed; res.graphs < count; ++seed) {
    RandomGraph g(seed);
    if (!g.smooth()) {
      ++res.skipped;
      continue;
    }
    ad::backward(g.loss());
    std::vector<Tensor> values, grads;
    for (const auto& l : g.leaves()) {
      values.push_back(l.value());
      grads.push_back(l.grad());
    }
    const auto chk = check_gradients(values, grads, [seed](const std::vector<Tensor>& v) {
      ad::NoGradGuard guard;
      return RandomGraph(seed, &v).loss().item();
    });
    res.max_rel_error = std::max(res.max_rel_error, chk.max_rel_error);
    res.ops.insert(g.ops().begin(), g.ops().end());
    ++res.graphs;
  }
  return res;
}

}  // namespace timecf::testing
