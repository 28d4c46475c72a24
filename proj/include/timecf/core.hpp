#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "timecf/error.hpp"

namespace timecf {

// Default tolerance under which two real values count as unaltered.
inline constexpr double kDefaultEps = 1e-8;

// Immutable, finite-valued univariate series.
class TimeSeries {
 public:
  TimeSeries() = default;
  explicit TimeSeries(std::vector<double> values, std::optional<std::string> id = std::nullopt);

  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& vec() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::optional<std::string>& id() const noexcept { return id_; }

  bool operator==(const TimeSeries& other) const { return values_ == other.values_; }

 private:
  std::vector<double> values_;
  std::optional<std::string> id_;
};

struct ClassLabel {
  int value = 0;
  auto operator<=>(const ClassLabel&) const = default;
};

struct LabeledInstance {
  TimeSeries series;
  ClassLabel label;
};

struct Interval {
  std::size_t start = 0;
  std::size_t length = 1;

  std::size_t end() const noexcept { return start + length; }
  bool fits(std::size_t n) const noexcept { return length >= 1 && start + length <= n; }
  bool contains(std::size_t t) const noexcept { return t >= start && t < end(); }
  // Number of indices shared with another interval.
  std::size_t overlap(const Interval& other) const noexcept;
  bool operator==(const Interval&) const = default;
};

// Equal-length labeled series. Labels are expected to be normalized to 0..K-1.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<LabeledInstance> instances);

  const std::vector<LabeledInstance>& instances() const noexcept { return instances_; }
  const LabeledInstance& operator[](std::size_t i) const { return instances_[i]; }
  std::size_t size() const noexcept { return instances_.size(); }
  bool empty() const noexcept { return instances_.empty(); }
  std::size_t series_length() const noexcept { return series_length_; }

  // Distinct labels in ascending order.
  std::vector<ClassLabel> labels() const;
  std::size_t count(ClassLabel label) const;
  // Instances whose label differs from `excluded`, in original order.
  Dataset without_label(ClassLabel excluded) const;

 private:
  std::vector<LabeledInstance> instances_;
  std::size_t series_length_ = 0;
};

// Black-box classifier contract. predict must be const, deterministic and
// safe to call concurrently once the model is trained.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual ClassLabel predict(const TimeSeries& t) const = 0;
  virtual std::string name() const = 0;
};

double l1_distance(const TimeSeries& a, const TimeSeries& b);
double l1_distance(std::span<const double> a, std::span<const double> b);
double squared_euclidean(std::span<const double> a, std::span<const double> b);

// Positions where |a_t - b_t| > eps.
std::size_t hamming_distance(const TimeSeries& a, const TimeSeries& b, double eps = kDefaultEps);

std::vector<double> crop(const TimeSeries& t, const Interval& iv);
TimeSeries replace_segment(const TimeSeries& t, std::span<const double> seg, const Interval& iv);

}  // namespace timecf
