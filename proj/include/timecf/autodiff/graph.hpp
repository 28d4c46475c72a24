#pragma once

// Define-by-run reverse-mode differentiation. Each op returns a Var whose
// node keeps its parents alive; the graph is released once the last Var
// referring to it goes out of scope. Leaves created with requires_grad
// accumulate gradients across backward() calls until zero_grad().

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "timecf/autodiff/tensor.hpp"

namespace timecf::ad {

struct Node {
  Tensor value;
  Tensor grad;  // empty until first touched by backward
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;
  const char* op = "leaf";
  bool requires_grad = false;

  Tensor& ensure_grad();
  bool is_leaf() const noexcept { return parents.empty(); }
};

class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Var parameter(Tensor value) { return Var(std::move(value), true); }
  static Var constant(Tensor value) { return Var(std::move(value), false); }

  bool defined() const noexcept { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  double item() const { return node_->value.item(); }
  bool requires_grad() const { return node_->requires_grad; }
  const char* op() const { return node_->op; }

  // Gradient buffer; zero-filled with the value's shape if never written.
  const Tensor& grad() const;
  bool has_grad() const { return !node_->grad.empty(); }
  void zero_grad();

  // Direct access for optimizers and loaders. Only meaningful on leaves.
  Tensor& mutable_value() { return node_->value; }
  Tensor& mutable_grad() { return node_->ensure_grad(); }

  const std::shared_ptr<Node>& node() const noexcept { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// Propagates d(loss)/d(.) to every reachable node that requires grad.
// Throws UsageError unless loss holds exactly one element.
void backward(const Var& loss);

// Returns a Var sharing the value but cut from the graph.
Var detach(const Var& v);

// ---- ops -------------------------------------------------------------------

// b may match a's shape or be a row vector ([C] or [1,C]) broadcast over a's
// leading dimensions, where C is a's last dimension.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double c);
Var add_scalar(const Var& a, double c);

Var matmul(const Var& a, const Var& b);           // [M,K] x [K,N]
Var affine(const Var& x, const Var& w, const Var& b);  // x*w + b, b broadcast per row

Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var relu(const Var& a);
Var sqrt(const Var& a);
Var abs(const Var& a);
Var square(const Var& a);

// x [B,L] single channel, w [C,K], b [C] -> [B,C,L-K+1]. Valid padding, stride 1.
Var conv1d(const Var& x, const Var& w, const Var& b);
Var conv1d(const Var& x, const Var& w);
Var global_mean_over_time(const Var& x);  // [B,C,T] -> [B,C]

Var sum(const Var& a);   // -> [1]
Var mean(const Var& a);  // -> [1]

// Inputs are [B,D] (one step) or [B,T,D]; output [B,sum T,D].
Var concat_time(const std::vector<Var>& parts);
Var slice_time(const Var& x, std::size_t start, std::size_t len);  // [B,T,D] -> [B,len,D]
Var time_step(const Var& x, std::size_t t);                         // [B,T,D] -> [B,D]
Var reshape(const Var& x, Shape shape);

Var mse_loss(const Var& a, const Var& b);
// Mean binary cross-entropy; p must lie in (0,1).
Var bce_loss(const Var& p, const Tensor& target);
// Mean binary cross-entropy on logits, stable for large |z|.
Var bce_with_logits(const Var& logits, const Tensor& target);

// Moments over the leading (batch) axis: [B, ...] -> [...].
Var batch_mean(const Var& x);
Var batch_std(const Var& x, double eps);  // sqrt(population variance + eps)

struct GruWeights {
  Var w_z, w_r, w_h;  // [I,H]
  Var u_z, u_r, u_h;  // [H,H]
  Var b_z, b_r, b_h;  // [1,H]
};

// Fused GRU step: z = s(xWz+hUz+bz), r = s(xWr+hUr+br),
// c = tanh(xWh + (r*h)Uh + bh), h' = (1-z)*h + z*c. x [B,I], h [B,H].
Var gru_cell(const Var& x, const Var& h, const GruWeights& w);

}  // namespace timecf::ad
