#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "timecf/autodiff/graph.hpp"

namespace timecf::ad {

// Named, ordered parameter collection. Order is registration order and
// defines the serialization layout.
class ParameterSet {
 public:
  void add(std::string name, Var v);
  void append(const std::string& prefix, const ParameterSet& other);

  const std::vector<std::pair<std::string, Var>>& items() const noexcept { return items_; }
  std::vector<Var> vars() const;
  std::size_t size() const noexcept { return items_.size(); }
  void zero_grad();
  std::vector<std::pair<std::string, Tensor>> snapshot() const;
  // Copies values by name; throws UsageError on missing names or shape mismatch.
  void load(const std::vector<std::pair<std::string, Tensor>>& values);

 private:
  std::vector<std::pair<std::string, Var>> items_;
};

// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
Tensor uniform_init(Shape shape, std::size_t fan_in, std::mt19937_64& rng);

struct Linear {
  Var w;  // [in,out]
  Var b;  // [1,out]

  Linear() = default;
  Linear(std::size_t in, std::size_t out, std::mt19937_64& rng);
  Var operator()(const Var& x) const { return affine(x, w, b); }
  ParameterSet parameters() const;
};

struct GruCell {
  GruWeights w;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;

  GruCell() = default;
  GruCell(std::size_t input, std::size_t hidden, std::mt19937_64& rng);
  Var step(const Var& x, const Var& h) const { return gru_cell(x, h, w); }
  ParameterSet parameters() const;
};

// Same update written with primitive ops; used to cross-check gru_cell.
Var gru_step_reference(const GruCell& cell, const Var& x, const Var& h);

// Stacked GRU unrolled over a sequence of [B,I] steps. Returns the top
// layer's hidden state at every step.
struct GruStack {
  std::vector<GruCell> layers;

  GruStack() = default;
  GruStack(std::size_t input, std::size_t hidden, std::size_t num_layers, std::mt19937_64& rng);
  std::vector<Var> run(const std::vector<Var>& steps) const;
  std::size_t hidden_dim() const { return layers.back().hidden_dim; }
  ParameterSet parameters() const;
};

}  // namespace timecf::ad
