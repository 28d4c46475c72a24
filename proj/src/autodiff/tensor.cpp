#include "timecf/autodiff/tensor.hpp"

#include <algorithm>
#include <numeric>

#include "timecf/error.hpp"

namespace timecf::ad {

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  if (shape_.empty()) throw UsageError("tensor rank must be at least 1");
  for (auto d : shape_)
    if (d == 0) throw UsageError("tensor dimensions must be positive: " + shape_str(shape_));
  data_.assign(numel(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_.empty()) throw UsageError("tensor rank must be at least 1");
  for (auto d : shape_)
    if (d == 0) throw UsageError("tensor dimensions must be positive: " + shape_str(shape_));
  if (data_.size() != numel(shape_))
    throw UsageError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                     shape_str(shape_));
}

double Tensor::item() const {
  if (data_.size() != 1) throw UsageError("item() on a tensor of shape " + shape_str(shape_));
  return data_[0];
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor Tensor::reshaped(Shape shape) const {
  if (numel(shape) != data_.size())
    throw UsageError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
  return Tensor(std::move(shape), data_);
}

}  // namespace timecf::ad
