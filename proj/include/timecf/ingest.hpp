#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "timecf/core.hpp"

namespace timecf {

// Maps raw file labels (e.g. -1/1 or 1/2) onto 0..K-1 in ascending raw order.
// Passing the codec filled by the training file keeps a test file consistent.
struct LabelCodec {
  std::vector<double> raw;  // raw[k] is the file label of normalized class k
  bool empty() const noexcept { return raw.empty(); }
};

// UCR text rows: label first, then values; tab- or comma-delimited (detected
// from the first non-empty line, whitespace as a fallback).
Dataset parse_ucr_text(const std::string& text, LabelCodec* codec = nullptr);
Dataset parse_ucr_file(const std::filesystem::path& path, LabelCodec* codec = nullptr);

// Writes normalized labels and values with round-trip precision.
void write_ucr(std::ostream& os, const Dataset& d, char delimiter = '\t');
void write_ucr_file(const std::filesystem::path& path, const Dataset& d, char delimiter = '\t');

struct SyntheticSpec {
  std::size_t n_per_class = 30;
  std::size_t length = 100;
  Interval bump_interval{40, 20};
  double bump_height = 2.0;
  double noise_sigma = 0.1;
  std::uint64_t seed = 7;

  void validate() const;
};

// Class 0: sin(2*pi*t/N) + noise. Class 1: the same plus a Gaussian-shaped
// bump confined to bump_interval. Class 0 instances come first.
Dataset make_synthetic_bump(const SyntheticSpec& spec);

// Global min/max scaling onto [0,1]. No clamping outside the fitted range.
class MinMaxScaler {
 public:
  MinMaxScaler() = default;
  MinMaxScaler(double min_v, double max_v);

  static MinMaxScaler fit(const Dataset& d);

  double min() const noexcept { return min_; }
  double max() const noexcept { return max_; }

  double transform(double x) const noexcept { return (x - min_) / (max_ - min_); }
  double inverse_transform(double y) const noexcept { return y * (max_ - min_) + min_; }
  TimeSeries transform(const TimeSeries& t) const;
  TimeSeries inverse_transform(const TimeSeries& t) const;
  Dataset transform(const Dataset& d) const;

 private:
  double min_ = 0.0;
  double max_ = 1.0;
};

// Per-class random split; proportions preserved to rounding, each class keeps
// at least one instance on both sides. Returns (train, test) in original order.
std::pair<Dataset, Dataset> stratified_split(const Dataset& d, double test_fraction, std::uint64_t seed);

}  // namespace timecf
