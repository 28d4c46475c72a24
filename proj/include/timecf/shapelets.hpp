#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "timecf/core.hpp"

namespace timecf {

struct ShapeletCandidate {
  std::size_t source_index = 0;  // index into the dataset the shapelet was cut from
  ClassLabel class_label;        // label of the source instance
  Interval interval;
  std::vector<double> values;
  double quality = 0.0;          // information gain, bits
  double split_threshold = 0.0;
};

struct RstConfig {
  std::vector<std::size_t> lengths;  // empty: default_lengths(N)
  std::size_t max_candidates = 500;
  std::size_t n_keep = 20;
  std::optional<double> time_budget;  // wall-clock seconds
  std::uint64_t seed = 1;
  double overlap_threshold = 0.5;
  bool z_normalize = false;
  // Split n_keep evenly across classes; off keeps a class-blind top-N.
  bool balance_classes = true;
  std::size_t threads = 1;

  // max(3, ceil(0.1N)), ceil(0.2N), ceil(0.3N), deduplicated and capped at N.
  static std::vector<std::size_t> default_lengths(std::size_t n);
  std::vector<std::size_t> resolved_lengths(std::size_t n) const;
  void validate(std::size_t n) const;
};

// min over offsets of mean squared difference between the candidate and a
// window of t. With z_normalize, both sides are z-normalized first.
double min_subsequence_distance(std::span<const double> candidate, const TimeSeries& t, bool z_normalize = false);

struct SplitResult {
  double gain = 0.0;       // bits
  double threshold = 0.0;  // midpoint between consecutive distinct distances
};

// Best binary split of `distances` w.r.t. `labels`. On ties the lowest
// threshold wins. When all distances coincide the gain is 0 and the
// threshold is that distance.
SplitResult information_gain(std::span<const double> distances, std::span<const ClassLabel> labels);

// Shannon entropy in bits of a class-count histogram, summed in class order.
double entropy_bits(std::span<const std::size_t> counts, std::size_t total);

// Random Shapelet Transform: sample candidates, score, sort, prune overlaps,
// keep the best n_keep (per-class shares when balance_classes is set).
std::vector<ShapeletCandidate> extract_top_shapelets(const Dataset& d, const RstConfig& cfg);

}  // namespace timecf
