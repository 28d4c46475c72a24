#include "timecf/autodiff/graph.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "timecf/error.hpp"

namespace timecf::ad {

namespace {

thread_local bool g_grad_enabled = true;

Var make_op(Tensor value, std::initializer_list<const Var*> inputs, const char* op,
            std::function<void(Node&)> bw) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->op = op;
  bool needs = false;
  if (g_grad_enabled)
    for (const Var* v : inputs) needs = needs || v->requires_grad();
  if (needs) {
    node->requires_grad = true;
    node->parents.reserve(inputs.size());
    for (const Var* v : inputs) node->parents.push_back(v->node());
    node->backward = std::move(bw);
  }
  return Var(std::move(node));
}

Var make_op_n(Tensor value, const std::vector<Var>& inputs, const char* op, std::function<void(Node&)> bw) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->op = op;
  bool needs = false;
  if (g_grad_enabled)
    for (const Var& v : inputs) needs = needs || v.requires_grad();
  if (needs) {
    node->requires_grad = true;
    for (const Var& v : inputs) node->parents.push_back(v.node());
    node->backward = std::move(bw);
  }
  return Var(std::move(node));
}

// Gradient buffer of parent i, or nullptr when that parent needs none.
Tensor* pgrad(Node& self, std::size_t i) {
  Node& p = *self.parents[i];
  return p.requires_grad ? &p.ensure_grad() : nullptr;
}

const Tensor& pval(const Node& self, std::size_t i) { return self.parents[i]->value; }

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw UsageError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

void require_rank(const char* op, const Var& v, std::size_t rank) {
  if (v.shape().size() != rank)
    throw UsageError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " + shape_str(v.shape()));
}

// C[M,N] += A[M,K] * B[K,N]
void mm_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// C[K,N] += A[M,K]^T * G[M,N]
void mm_tn_acc(const double* a, const double* g, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    const double* gi = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      double* cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += av * gi[j];
    }
  }
}

// C[M,K] += G[M,N] * B[K,N]^T. B is transposed first so the inner loop
// streams contiguous rows instead of reducing dot products.
void mm_nt_acc(const double* g, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  thread_local std::vector<double> bt;
  bt.resize(k * n);
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = b[p * n + j];
  mm_acc(g, bt.data(), c, m, n, k);
}

bool is_row_broadcast(const Shape& a, const Shape& b) {
  if (a == b) return false;
  const std::size_t c = a.back();
  return numel(b) == c && (b.size() == 1 || (b.size() == 2 && b[0] == 1));
}

template <typename Fwd, typename Deriv>
Var unary(const Var& a, const char* op, Fwd fwd, Deriv deriv) {
  Tensor out(a.shape());
  const auto& in = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(in[i]);
  return make_op(std::move(out), {&a}, op, [deriv](Node& self) {
    if (Tensor* ga = pgrad(self, 0)) {
      const Tensor& x = pval(self, 0);
      for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += self.grad[i] * deriv(x[i], self.value[i]);
    }
  });
}

}  // namespace

Tensor& Node::ensure_grad() {
  if (grad.empty()) grad = Tensor(value.shape(), 0.0);
  return grad;
}

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

const Tensor& Var::grad() const { return node_->ensure_grad(); }

void Var::zero_grad() {
  if (!node_->grad.empty()) node_->grad.fill(0.0);
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

void backward(const Var& loss) {
  if (!loss.defined() || loss.value().size() != 1)
    throw UsageError("backward requires a scalar loss, got shape " +
                     (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
  if (!loss.requires_grad()) return;

  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{loss.node().get(), 0}};
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (Node* n : order)
    if (!n->is_leaf()) n->grad = Tensor(n->value.shape(), 0.0);
  loss.node()->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backward) (*it)->backward(**it);
}

Var detach(const Var& v) { return Var(v.value(), false); }

Var add(const Var& a, const Var& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa == sb) {
    Tensor out(sa);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
    return make_op(std::move(out), {&a, &b}, "add", [](Node& self) {
      for (std::size_t k = 0; k < 2; ++k)
        if (Tensor* g = pgrad(self, k))
          for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
    });
  }
  if (!is_row_broadcast(sa, sb)) shape_error("add", sa, sb);
  const std::size_t c = sa.back();
  const std::size_t rows = numel(sa) / c;
  Tensor out(sa);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < c; ++j) out[r * c + j] = a.value()[r * c + j] + b.value()[j];
  return make_op(std::move(out), {&a, &b}, "add", [rows, c](Node& self) {
    if (Tensor* ga = pgrad(self, 0))
      for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += self.grad[i];
    if (Tensor* gb = pgrad(self, 1))
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < c; ++j) (*gb)[j] += self.grad[r * c + j];
  });
}

Var sub(const Var& a, const Var& b) {
  if (a.shape() != b.shape()) shape_error("sub", a.shape(), b.shape());
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] - b.value()[i];
  return make_op(std::move(out), {&a, &b}, "sub", [](Node& self) {
    if (Tensor* ga = pgrad(self, 0))
      for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += self.grad[i];
    if (Tensor* gb = pgrad(self, 1))
      for (std::size_t i = 0; i < gb->size(); ++i) (*gb)[i] -= self.grad[i];
  });
}

Var mul(const Var& a, const Var& b) {
  if (a.shape() != b.shape()) shape_error("mul", a.shape(), b.shape());
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  return make_op(std::move(out), {&a, &b}, "mul", [](Node& self) {
    const Tensor& x = pval(self, 0);
    const Tensor& y = pval(self, 1);
    if (Tensor* ga = pgrad(self, 0))
      for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += self.grad[i] * y[i];
    if (Tensor* gb = pgrad(self, 1))
      for (std::size_t i = 0; i < gb->size(); ++i) (*gb)[i] += self.grad[i] * x[i];
  });
}

Var scale(const Var& a, double c) {
  return unary(a, "scale", [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Var add_scalar(const Var& a, double c) {
  return unary(a, "add_scalar", [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Var matmul(const Var& a, const Var& b) {
  require_rank("matmul", a, 2);
  require_rank("matmul", b, 2);
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) shape_error("matmul", a.shape(), b.shape());
  Tensor out({m, n});
  mm_acc(a.value().data().data(), b.value().data().data(), out.data().data(), m, k, n);
  return make_op(std::move(out), {&a, &b}, "matmul", [m, k, n](Node& self) {
    const double* g = self.grad.data().data();
    if (Tensor* ga = pgrad(self, 0)) mm_nt_acc(g, pval(self, 1).data().data(), ga->data().data(), m, k, n);
    if (Tensor* gb = pgrad(self, 1)) mm_tn_acc(pval(self, 0).data().data(), g, gb->data().data(), m, k, n);
  });
}

Var affine(const Var& x, const Var& w, const Var& b) {
  require_rank("affine", x, 2);
  require_rank("affine", w, 2);
  const std::size_t m = x.shape()[0], k = x.shape()[1], n = w.shape()[1];
  if (w.shape()[0] != k) shape_error("affine", x.shape(), w.shape());
  if (b.value().size() != n) shape_error("affine", w.shape(), b.shape());
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = b.value()[j];
  mm_acc(x.value().data().data(), w.value().data().data(), out.data().data(), m, k, n);
  return make_op(std::move(out), {&x, &w, &b}, "affine", [m, k, n](Node& self) {
    const double* g = self.grad.data().data();
    if (Tensor* gx = pgrad(self, 0)) mm_nt_acc(g, pval(self, 1).data().data(), gx->data().data(), m, k, n);
    if (Tensor* gw = pgrad(self, 1)) mm_tn_acc(pval(self, 0).data().data(), g, gw->data().data(), m, k, n);
    if (Tensor* gb = pgrad(self, 2))
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) (*gb)[j] += g[i * n + j];
  });
}

Var tanh(const Var& a) {
  return unary(a, "tanh", [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(const Var& a) {
  return unary(
      a, "sigmoid", [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Var relu(const Var& a) {
  return unary(a, "relu", [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sqrt(const Var& a) {
  for (double v : a.value().data())
    if (v < 0.0) throw UsageError("sqrt of a negative value");
  return unary(a, "sqrt", [](double x) { return std::sqrt(x); }, [](double, double y) { return 0.5 / y; });
}

Var abs(const Var& a) {
  return unary(
      a, "abs", [](double x) { return std::abs(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var square(const Var& a) {
  return unary(a, "square", [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var conv1d(const Var& x, const Var& w, const Var& b) {
  require_rank("conv1d", x, 2);
  require_rank("conv1d", w, 2);
  const std::size_t batch = x.shape()[0], len = x.shape()[1];
  const std::size_t channels = w.shape()[0], width = w.shape()[1];
  if (width > len) shape_error("conv1d", x.shape(), w.shape());
  const bool has_bias = b.defined();
  if (has_bias && b.value().size() != channels) shape_error("conv1d", w.shape(), b.shape());
  const std::size_t steps = len - width + 1;
  Tensor out({batch, channels, steps});
  const auto& xv = x.value();
  const auto& wv = w.value();
  for (std::size_t n = 0; n < batch; ++n)
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t t = 0; t < steps; ++t) {
        double s = has_bias ? b.value()[c] : 0.0;
        for (std::size_t k = 0; k < width; ++k) s += xv[n * len + t + k] * wv[c * width + k];
        out[(n * channels + c) * steps + t] = s;
      }
  auto bw = [=](Node& self) {
    const Tensor& xin = pval(self, 0);
    const Tensor& win = pval(self, 1);
    Tensor* gx = pgrad(self, 0);
    Tensor* gw = pgrad(self, 1);
    Tensor* gb = has_bias ? pgrad(self, 2) : nullptr;
    for (std::size_t n = 0; n < batch; ++n)
      for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t t = 0; t < steps; ++t) {
          const double g = self.grad[(n * channels + c) * steps + t];
          if (gb) (*gb)[c] += g;
          for (std::size_t k = 0; k < width; ++k) {
            if (gx) (*gx)[n * len + t + k] += g * win[c * width + k];
            if (gw) (*gw)[c * width + k] += g * xin[n * len + t + k];
          }
        }
  };
  if (has_bias) return make_op(std::move(out), {&x, &w, &b}, "conv1d", bw);
  return make_op(std::move(out), {&x, &w}, "conv1d", bw);
}

Var conv1d(const Var& x, const Var& w) { return conv1d(x, w, Var()); }

Var global_mean_over_time(const Var& x) {
  require_rank("global_mean_over_time", x, 3);
  const std::size_t rows = x.shape()[0] * x.shape()[1], steps = x.shape()[2];
  Tensor out({x.shape()[0], x.shape()[1]});
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t t = 0; t < steps; ++t) s += x.value()[r * steps + t];
    out[r] = s / static_cast<double>(steps);
  }
  return make_op(std::move(out), {&x}, "global_mean_over_time", [rows, steps](Node& self) {
    if (Tensor* g = pgrad(self, 0))
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t t = 0; t < steps; ++t) (*g)[r * steps + t] += self.grad[r] / static_cast<double>(steps);
  });
}

Var sum(const Var& a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return make_op(Tensor::scalar(s), {&a}, "sum", [](Node& self) {
    if (Tensor* g = pgrad(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[0];
  });
}

Var mean(const Var& a) {
  const double n = static_cast<double>(a.value().size());
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return make_op(Tensor::scalar(s / n), {&a}, "mean", [n](Node& self) {
    if (Tensor* g = pgrad(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[0] / n;
  });
}

Var concat_time(const std::vector<Var>& parts) {
  if (parts.empty()) throw UsageError("concat_time: no inputs");
  const std::size_t batch = parts[0].shape()[0];
  const std::size_t feat = parts[0].shape().back();
  std::vector<std::size_t> steps;
  std::size_t total = 0;
  for (const auto& p : parts) {
    const auto& s = p.shape();
    if (s.size() != 2 && s.size() != 3) throw UsageError("concat_time: inputs must be [B,D] or [B,T,D]");
    if (s[0] != batch || s.back() != feat) shape_error("concat_time", parts[0].shape(), s);
    steps.push_back(s.size() == 2 ? 1 : s[1]);
    total += steps.back();
  }
  Tensor out({batch, total, feat});
  std::size_t offset = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& v = parts[i].value();
    for (std::size_t n = 0; n < batch; ++n)
      std::copy_n(v.data().begin() + static_cast<std::ptrdiff_t>(n * steps[i] * feat), steps[i] * feat,
                  out.data().begin() + static_cast<std::ptrdiff_t>((n * total + offset) * feat));
    offset += steps[i];
  }
  return make_op_n(std::move(out), parts, "concat_time", [batch, feat, total, steps](Node& self) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < steps.size(); ++i) {
      if (Tensor* g = pgrad(self, i))
        for (std::size_t n = 0; n < batch; ++n)
          for (std::size_t j = 0; j < steps[i] * feat; ++j)
            (*g)[n * steps[i] * feat + j] += self.grad[(n * total + off) * feat + j];
      off += steps[i];
    }
  });
}

Var slice_time(const Var& x, std::size_t start, std::size_t len) {
  require_rank("slice_time", x, 3);
  const std::size_t batch = x.shape()[0], total = x.shape()[1], feat = x.shape()[2];
  if (len == 0 || start + len > total) throw UsageError("slice_time: range outside " + shape_str(x.shape()));
  Tensor out({batch, len, feat});
  for (std::size_t n = 0; n < batch; ++n)
    std::copy_n(x.value().data().begin() + static_cast<std::ptrdiff_t>((n * total + start) * feat), len * feat,
                out.data().begin() + static_cast<std::ptrdiff_t>(n * len * feat));
  return make_op(std::move(out), {&x}, "slice_time", [=](Node& self) {
    if (Tensor* g = pgrad(self, 0))
      for (std::size_t n = 0; n < batch; ++n)
        for (std::size_t j = 0; j < len * feat; ++j) (*g)[(n * total + start) * feat + j] += self.grad[n * len * feat + j];
  });
}

Var time_step(const Var& x, std::size_t t) {
  return reshape(slice_time(x, t, 1), {x.shape()[0], x.shape()[2]});
}

Var reshape(const Var& x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return make_op(std::move(out), {&x}, "reshape", [](Node& self) {
    if (Tensor* g = pgrad(self, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
  });
}

Var mse_loss(const Var& a, const Var& b) {
  if (a.shape() != b.shape()) shape_error("mse_loss", a.shape(), b.shape());
  const double n = static_cast<double>(a.value().size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.value().size(); ++i) {
    const double d = a.value()[i] - b.value()[i];
    s += d * d;
  }
  return make_op(Tensor::scalar(s / n), {&a, &b}, "mse_loss", [n](Node& self) {
    const Tensor& x = pval(self, 0);
    const Tensor& y = pval(self, 1);
    const double g = self.grad[0] * 2.0 / n;
    if (Tensor* ga = pgrad(self, 0))
      for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += g * (x[i] - y[i]);
    if (Tensor* gb = pgrad(self, 1))
      for (std::size_t i = 0; i < gb->size(); ++i) (*gb)[i] -= g * (x[i] - y[i]);
  });
}

Var bce_loss(const Var& p, const Tensor& target) {
  if (p.shape() != target.shape()) shape_error("bce_loss", p.shape(), target.shape());
  const double n = static_cast<double>(p.value().size());
  double s = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double q = p.value()[i];
    if (!(q > 0.0 && q < 1.0)) throw UsageError("bce_loss: probabilities must lie in (0,1)");
    s -= target[i] * std::log(q) + (1.0 - target[i]) * std::log(1.0 - q);
  }
  return make_op(Tensor::scalar(s / n), {&p}, "bce_loss", [target, n](Node& self) {
    if (Tensor* g = pgrad(self, 0)) {
      const Tensor& q = pval(self, 0);
      for (std::size_t i = 0; i < g->size(); ++i)
        (*g)[i] += self.grad[0] * (-target[i] / q[i] + (1.0 - target[i]) / (1.0 - q[i])) / n;
    }
  });
}

Var bce_with_logits(const Var& logits, const Tensor& target) {
  if (logits.shape() != target.shape()) shape_error("bce_with_logits", logits.shape(), target.shape());
  const double n = static_cast<double>(target.size());
  double s = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double z = logits.value()[i];
    s += std::max(z, 0.0) - z * target[i] + std::log1p(std::exp(-std::abs(z)));
  }
  return make_op(Tensor::scalar(s / n), {&logits}, "bce_with_logits", [target, n](Node& self) {
    if (Tensor* g = pgrad(self, 0)) {
      const Tensor& z = pval(self, 0);
      for (std::size_t i = 0; i < g->size(); ++i) {
        const double sig = 1.0 / (1.0 + std::exp(-z[i]));
        (*g)[i] += self.grad[0] * (sig - target[i]) / n;
      }
    }
  });
}

namespace {
Shape batch_reduced_shape(const Shape& s) {
  if (s.size() == 1) return {1};
  return Shape(s.begin() + 1, s.end());
}
}  // namespace

Var batch_mean(const Var& x) {
  const std::size_t batch = x.shape()[0];
  const std::size_t inner = x.value().size() / batch;
  Tensor out(batch_reduced_shape(x.shape()));
  for (std::size_t n = 0; n < batch; ++n)
    for (std::size_t j = 0; j < inner; ++j) out[j] += x.value()[n * inner + j];
  for (std::size_t j = 0; j < inner; ++j) out[j] /= static_cast<double>(batch);
  return make_op(std::move(out), {&x}, "batch_mean", [batch, inner](Node& self) {
    if (Tensor* g = pgrad(self, 0))
      for (std::size_t n = 0; n < batch; ++n)
        for (std::size_t j = 0; j < inner; ++j) (*g)[n * inner + j] += self.grad[j] / static_cast<double>(batch);
  });
}

Var batch_std(const Var& x, double eps) {
  const std::size_t batch = x.shape()[0];
  const std::size_t inner = x.value().size() / batch;
  const double b = static_cast<double>(batch);
  std::vector<double> mu(inner, 0.0);
  for (std::size_t n = 0; n < batch; ++n)
    for (std::size_t j = 0; j < inner; ++j) mu[j] += x.value()[n * inner + j];
  for (auto& m : mu) m /= b;
  Tensor out(batch_reduced_shape(x.shape()));
  for (std::size_t n = 0; n < batch; ++n)
    for (std::size_t j = 0; j < inner; ++j) {
      const double d = x.value()[n * inner + j] - mu[j];
      out[j] += d * d;
    }
  for (std::size_t j = 0; j < inner; ++j) out[j] = std::sqrt(out[j] / b + eps);
  return make_op(std::move(out), {&x}, "batch_std", [batch, inner, b, mu](Node& self) {
    if (Tensor* g = pgrad(self, 0)) {
      const Tensor& xv = pval(self, 0);
      for (std::size_t n = 0; n < batch; ++n)
        for (std::size_t j = 0; j < inner; ++j)
          (*g)[n * inner + j] += self.grad[j] * (xv[n * inner + j] - mu[j]) / (b * self.value[j]);
    }
  });
}

Var gru_cell(const Var& x, const Var& h, const GruWeights& w) {
  require_rank("gru_cell", x, 2);
  require_rank("gru_cell", h, 2);
  const std::size_t batch = x.shape()[0], in = x.shape()[1], hid = h.shape()[1];
  if (h.shape()[0] != batch) shape_error("gru_cell", x.shape(), h.shape());
  for (const Var* m : {&w.w_z, &w.w_r, &w.w_h})
    if (m->shape() != Shape{in, hid}) shape_error("gru_cell", x.shape(), m->shape());
  for (const Var* m : {&w.u_z, &w.u_r, &w.u_h})
    if (m->shape() != Shape{hid, hid}) shape_error("gru_cell", h.shape(), m->shape());
  for (const Var* m : {&w.b_z, &w.b_r, &w.b_h})
    if (m->value().size() != hid) shape_error("gru_cell", h.shape(), m->shape());

  const std::size_t bh = batch * hid;
  const double* xp = x.value().data().data();
  const double* hp = h.value().data().data();
  auto pre = [&](const Var& wx, const Var& b) {
    std::vector<double> a(bh);
    for (std::size_t n = 0; n < batch; ++n)
      std::copy_n(b.value().data().begin(), hid, a.begin() + static_cast<std::ptrdiff_t>(n * hid));
    mm_acc(xp, wx.value().data().data(), a.data(), batch, in, hid);
    return a;
  };
  std::vector<double> z = pre(w.w_z, w.b_z);
  std::vector<double> r = pre(w.w_r, w.b_r);
  std::vector<double> c = pre(w.w_h, w.b_h);
  mm_acc(hp, w.u_z.value().data().data(), z.data(), batch, hid, hid);
  mm_acc(hp, w.u_r.value().data().data(), r.data(), batch, hid, hid);
  std::vector<double> rh(bh);
  for (std::size_t i = 0; i < bh; ++i) {
    z[i] = 1.0 / (1.0 + std::exp(-z[i]));
    r[i] = 1.0 / (1.0 + std::exp(-r[i]));
    rh[i] = r[i] * hp[i];
  }
  mm_acc(rh.data(), w.u_h.value().data().data(), c.data(), batch, hid, hid);
  Tensor out({batch, hid});
  for (std::size_t i = 0; i < bh; ++i) {
    c[i] = std::tanh(c[i]);
    out[i] = hp[i] + z[i] * (c[i] - hp[i]);
  }

  auto bw = [batch, in, hid, z = std::move(z), r = std::move(r), c = std::move(c), rh = std::move(rh)](Node& self) {
    const std::size_t n_el = batch * hid;
    const double* xv = pval(self, 0).data().data();
    const double* hv = pval(self, 1).data().data();
    const double* g = self.grad.data().data();
    std::vector<double> da_z(n_el), da_r(n_el), da_c(n_el), d_rh(n_el, 0.0);
    for (std::size_t i = 0; i < n_el; ++i) {
      da_z[i] = g[i] * (c[i] - hv[i]) * z[i] * (1.0 - z[i]);
      da_c[i] = g[i] * z[i] * (1.0 - c[i] * c[i]);
    }
    // parents: 0 x, 1 h, 2 w_z, 3 w_r, 4 w_h, 5 u_z, 6 u_r, 7 u_h, 8 b_z, 9 b_r, 10 b_h
    mm_nt_acc(da_c.data(), pval(self, 7).data().data(), d_rh.data(), batch, hid, hid);
    for (std::size_t i = 0; i < n_el; ++i) da_r[i] = d_rh[i] * hv[i] * r[i] * (1.0 - r[i]);

    if (Tensor* gh = pgrad(self, 1)) {
      double* ghp = gh->data().data();
      for (std::size_t i = 0; i < n_el; ++i) ghp[i] += g[i] * (1.0 - z[i]) + d_rh[i] * r[i];
      mm_nt_acc(da_z.data(), pval(self, 5).data().data(), ghp, batch, hid, hid);
      mm_nt_acc(da_r.data(), pval(self, 6).data().data(), ghp, batch, hid, hid);
    }
    if (Tensor* gx = pgrad(self, 0)) {
      double* gxp = gx->data().data();
      mm_nt_acc(da_z.data(), pval(self, 2).data().data(), gxp, batch, in, hid);
      mm_nt_acc(da_r.data(), pval(self, 3).data().data(), gxp, batch, in, hid);
      mm_nt_acc(da_c.data(), pval(self, 4).data().data(), gxp, batch, in, hid);
    }
    const std::vector<double>* das[3] = {&da_z, &da_r, &da_c};
    for (std::size_t k = 0; k < 3; ++k) {
      if (Tensor* gw = pgrad(self, 2 + k)) mm_tn_acc(xv, das[k]->data(), gw->data().data(), batch, in, hid);
      if (Tensor* gb = pgrad(self, 8 + k))
        for (std::size_t n = 0; n < batch; ++n)
          for (std::size_t j = 0; j < hid; ++j) (*gb)[j] += (*das[k])[n * hid + j];
    }
    if (Tensor* gu = pgrad(self, 5)) mm_tn_acc(hv, da_z.data(), gu->data().data(), batch, hid, hid);
    if (Tensor* gu = pgrad(self, 6)) mm_tn_acc(hv, da_r.data(), gu->data().data(), batch, hid, hid);
    if (Tensor* gu = pgrad(self, 7)) mm_tn_acc(rh.data(), da_c.data(), gu->data().data(), batch, hid, hid);
  };
  return make_op(std::move(out), {&x, &h, &w.w_z, &w.w_r, &w.w_h, &w.u_z, &w.u_r, &w.u_h, &w.b_z, &w.b_r, &w.b_h},
                 "gru_cell", std::move(bw));
}

}  // namespace timecf::ad
