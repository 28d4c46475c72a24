#include "timecf/autodiff/layers.hpp"

#include <cmath>

#include "timecf/error.hpp"

namespace timecf::ad {

void ParameterSet::add(std::string name, Var v) {
  for (const auto& [n, _] : items_)
    if (n == name) throw UsageError("duplicate parameter name " + name);
  items_.emplace_back(std::move(name), std::move(v));
}

void ParameterSet::append(const std::string& prefix, const ParameterSet& other) {
  for (const auto& [n, v] : other.items_) add(prefix + n, v);
}

std::vector<Var> ParameterSet::vars() const {
  std::vector<Var> out;
  out.reserve(items_.size());
  for (const auto& [_, v] : items_) out.push_back(v);
  return out;
}

void ParameterSet::zero_grad() {
  for (auto& [_, v] : items_) v.zero_grad();
}

std::vector<std::pair<std::string, Tensor>> ParameterSet::snapshot() const {
  std::vector<std::pair<std::string, Tensor>> out;
  out.reserve(items_.size());
  for (const auto& [n, v] : items_) out.emplace_back(n, v.value());
  return out;
}

void ParameterSet::load(const std::vector<std::pair<std::string, Tensor>>& values) {
  for (auto& [name, var] : items_) {
    const Tensor* found = nullptr;
    for (const auto& [n, t] : values)
      if (n == name) found = &t;
    if (!found) throw UsageError("parameter file lacks tensor " + name);
    if (found->shape() != var.shape())
      throw UsageError("tensor " + name + " has shape " + shape_str(found->shape()) + ", expected " +
                       shape_str(var.shape()));
    var.mutable_value() = *found;
  }
}

Tensor uniform_init(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

Linear::Linear(std::size_t in, std::size_t out, std::mt19937_64& rng)
    : w(Var::parameter(uniform_init({in, out}, in, rng))), b(Var::parameter(uniform_init({1, out}, in, rng))) {}

ParameterSet Linear::parameters() const {
  ParameterSet p;
  p.add("w", w);
  p.add("b", b);
  return p;
}

GruCell::GruCell(std::size_t input, std::size_t hidden, std::mt19937_64& rng) : input_dim(input), hidden_dim(hidden) {
  // fan_in of each gate pre-activation is the concatenated [x, h] width.
  const std::size_t fan = input + hidden;
  w.w_z = Var::parameter(uniform_init({input, hidden}, fan, rng));
  w.w_r = Var::parameter(uniform_init({input, hidden}, fan, rng));
  w.w_h = Var::parameter(uniform_init({input, hidden}, fan, rng));
  w.u_z = Var::parameter(uniform_init({hidden, hidden}, fan, rng));
  w.u_r = Var::parameter(uniform_init({hidden, hidden}, fan, rng));
  w.u_h = Var::parameter(uniform_init({hidden, hidden}, fan, rng));
  w.b_z = Var::parameter(uniform_init({1, hidden}, fan, rng));
  w.b_r = Var::parameter(uniform_init({1, hidden}, fan, rng));
  w.b_h = Var::parameter(uniform_init({1, hidden}, fan, rng));
}

ParameterSet GruCell::parameters() const {
  ParameterSet p;
  p.add("w_z", w.w_z);
  p.add("w_r", w.w_r);
  p.add("w_h", w.w_h);
  p.add("u_z", w.u_z);
  p.add("u_r", w.u_r);
  p.add("u_h", w.u_h);
  p.add("b_z", w.b_z);
  p.add("b_r", w.b_r);
  p.add("b_h", w.b_h);
  return p;
}

Var gru_step_reference(const GruCell& cell, const Var& x, const Var& h) {
  const auto& w = cell.w;
  const Var z = sigmoid(add(add(matmul(x, w.w_z), matmul(h, w.u_z)), w.b_z));
  const Var r = sigmoid(add(add(matmul(x, w.w_r), matmul(h, w.u_r)), w.b_r));
  const Var cand = tanh(add(add(matmul(x, w.w_h), matmul(mul(r, h), w.u_h)), w.b_h));
  return add(h, mul(z, sub(cand, h)));
}

GruStack::GruStack(std::size_t input, std::size_t hidden, std::size_t num_layers, std::mt19937_64& rng) {
  if (num_layers == 0) throw UsageError("GRU stack needs at least one layer");
  for (std::size_t l = 0; l < num_layers; ++l) layers.emplace_back(l == 0 ? input : hidden, hidden, rng);
}

std::vector<Var> GruStack::run(const std::vector<Var>& steps) const {
  if (steps.empty()) throw UsageError("GRU stack run on an empty sequence");
  std::vector<Var> current = steps;
  const std::size_t batch = steps.front().shape()[0];
  for (const auto& cell : layers) {
    Var h = Var::constant(Tensor({batch, cell.hidden_dim}, 0.0));
    std::vector<Var> next;
    next.reserve(current.size());
    for (const auto& x : current) {
      h = cell.step(x, h);
      next.push_back(h);
    }
    current = std::move(next);
  }
  return current;
}

ParameterSet GruStack::parameters() const {
  ParameterSet p;
  for (std::size_t l = 0; l < layers.size(); ++l) p.append("gru" + std::to_string(l) + ".", layers[l].parameters());
  return p;
}

}  // namespace timecf::ad
