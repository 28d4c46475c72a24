#include "timecf/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace timecf {

TimeSeries::TimeSeries(std::vector<double> values, std::optional<std::string> id)
    : values_(std::move(values)), id_(std::move(id)) {
  if (values_.empty()) throw InputError("time series must not be empty");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]))
      throw InputError("time series value at index " + std::to_string(i) + " is not finite");
  }
}

std::size_t Interval::overlap(const Interval& other) const noexcept {
  const std::size_t lo = std::max(start, other.start);
  const std::size_t hi = std::min(end(), other.end());
  return hi > lo ? hi - lo : 0;
}

Dataset::Dataset(std::vector<LabeledInstance> instances) : instances_(std::move(instances)) {
  if (instances_.empty()) throw InputError("dataset must contain at least one instance");
  series_length_ = instances_.front().series.size();
  for (std::size_t i = 0; i < instances_.size(); ++i) {
    if (instances_[i].series.size() != series_length_)
      throw InputError("instance " + std::to_string(i) + " has length " +
                       std::to_string(instances_[i].series.size()) + ", expected " +
                       std::to_string(series_length_));
    if (instances_[i].label.value < 0)
      throw InputError("instance " + std::to_string(i) + " has a negative label");
  }
}

std::vector<ClassLabel> Dataset::labels() const {
  std::set<ClassLabel> seen;
  for (const auto& inst : instances_) seen.insert(inst.label);
  return {seen.begin(), seen.end()};
}

std::size_t Dataset::count(ClassLabel label) const {
  return static_cast<std::size_t>(std::count_if(
      instances_.begin(), instances_.end(), [&](const auto& i) { return i.label == label; }));
}

Dataset Dataset::without_label(ClassLabel excluded) const {
  std::vector<LabeledInstance> kept;
  for (const auto& inst : instances_)
    if (inst.label != excluded) kept.push_back(inst);
  if (kept.empty()) throw UsageError("no instances with a label other than " + std::to_string(excluded.value));
  return Dataset(std::move(kept));
}

namespace {
void require_same_length(std::size_t a, std::size_t b) {
  if (a != b)
    throw InputError("length mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
}
}  // namespace

double l1_distance(std::span<const double> a, std::span<const double> b) {
  require_same_length(a.size(), b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

double l1_distance(const TimeSeries& a, const TimeSeries& b) { return l1_distance(a.values(), b.values()); }

double squared_euclidean(std::span<const double> a, std::span<const double> b) {
  require_same_length(a.size(), b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::size_t hamming_distance(const TimeSeries& a, const TimeSeries& b, double eps) {
  require_same_length(a.size(), b.size());
  if (!(eps >= 0.0)) throw InputError("hamming tolerance must be non-negative");
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > eps) ++n;
  return n;
}

std::vector<double> crop(const TimeSeries& t, const Interval& iv) {
  if (!iv.fits(t.size()))
    throw InputError("interval [" + std::to_string(iv.start) + ", +" + std::to_string(iv.length) +
                     ") does not fit a series of length " + std::to_string(t.size()));
  return {t.vec().begin() + static_cast<std::ptrdiff_t>(iv.start),
          t.vec().begin() + static_cast<std::ptrdiff_t>(iv.end())};
}

TimeSeries replace_segment(const TimeSeries& t, std::span<const double> seg, const Interval& iv) {
  if (!iv.fits(t.size()))
    throw InputError("interval [" + std::to_string(iv.start) + ", +" + std::to_string(iv.length) +
                     ") does not fit a series of length " + std::to_string(t.size()));
  if (seg.size() != iv.length)
    throw InputError("segment length " + std::to_string(seg.size()) + " does not match interval length " +
                     std::to_string(iv.length));
  std::vector<double> out = t.vec();
  std::copy(seg.begin(), seg.end(), out.begin() + static_cast<std::ptrdiff_t>(iv.start));
  return TimeSeries(std::move(out), t.id());
}

}  // namespace timecf
