#pragma once

#include <span>
#include <vector>

#include "timecf/autodiff/graph.hpp"

namespace timecf::ad {

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<Tensor> m;  // first moments, one per parameter
  std::vector<Tensor> v;  // second moments
};

// One bias-corrected Adam update. Moment buffers are allocated on first use.
void adam_step(AdamState& state, std::span<Tensor* const> params, std::span<const Tensor* const> grads);

// Adam over a fixed list of leaf Vars, reading their accumulated gradients.
class Adam {
 public:
  Adam(std::vector<Var> params, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step();
  void zero_grad();
  const AdamState& state() const noexcept { return state_; }

 private:
  std::vector<Var> params_;
  AdamState state_;
};

}  // namespace timecf::ad
