#include "timecf/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

namespace timecf {

namespace {

std::vector<std::string_view> split_fields(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  if (delim == ' ') {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
      if (i >= line.size()) break;
      std::size_t j = i;
      while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
      out.push_back(line.substr(i, j - i));
      i = j;
    }
    return out;
  }
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view tok, std::size_t line_no) {
  tok = trim(tok);
  if (tok.empty()) throw ParseError("empty field", line_no);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ParseError("non-numeric token '" + std::string(tok) + "'", line_no);
  if (!std::isfinite(v)) throw ParseError("non-finite value '" + std::string(tok) + "'", line_no);
  return v;
}

}  // namespace

Dataset parse_ucr_text(const std::string& text, LabelCodec* codec) {
  struct Row {
    double raw_label;
    std::vector<double> values;
    std::size_t line_no;
  };
  std::vector<Row> rows;
  char delim = 0;
  std::size_t expected = 0;
  std::size_t line_no = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    if (delim == 0) delim = view.find('\t') != std::string_view::npos ? '\t'
                           : view.find(',') != std::string_view::npos ? ','
                                                                       : ' ';
    const auto fields = split_fields(view, delim);
    if (fields.size() < 2) throw ParseError("row needs a label and at least one value", line_no);
    Row row{parse_number(fields[0], line_no), {}, line_no};
    row.values.reserve(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) row.values.push_back(parse_number(fields[i], line_no));
    if (rows.empty()) {
      expected = row.values.size();
    } else if (row.values.size() != expected) {
      throw ParseError("row has " + std::to_string(row.values.size()) + " values, expected " +
                           std::to_string(expected),
                       line_no);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("file contains no data rows", 0);

  LabelCodec local;
  LabelCodec& lc = codec ? *codec : local;
  if (lc.empty()) {
    for (const auto& r : rows) lc.raw.push_back(r.raw_label);
    std::sort(lc.raw.begin(), lc.raw.end());
    lc.raw.erase(std::unique(lc.raw.begin(), lc.raw.end()), lc.raw.end());
  }
  std::vector<LabeledInstance> instances;
  instances.reserve(rows.size());
  for (auto& r : rows) {
    const auto it = std::find(lc.raw.begin(), lc.raw.end(), r.raw_label);
    if (it == lc.raw.end()) {
      std::ostringstream msg;
      msg << "label " << r.raw_label << " is not in the known label set";
      throw ParseError(msg.str(), r.line_no);
    }
    instances.push_back({TimeSeries(std::move(r.values), "row-" + std::to_string(r.line_no)),
                         ClassLabel{static_cast<int>(it - lc.raw.begin())}});
  }
  return Dataset(std::move(instances));
}

Dataset parse_ucr_file(const std::filesystem::path& path, LabelCodec* codec) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_ucr_text(buf.str(), codec);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

void write_ucr(std::ostream& os, const Dataset& d, char delimiter) {
  char buf[32];
  for (const auto& inst : d.instances()) {
    os << inst.label.value;
    for (double v : inst.series.values()) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), v);
      os << delimiter << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    os << '\n';
  }
}

void write_ucr_file(const std::filesystem::path& path, const Dataset& d, char delimiter) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  write_ucr(out, d, delimiter);
  if (!out) throw InputError("failed writing " + path.string());
}

void SyntheticSpec::validate() const {
  if (n_per_class == 0) throw InputError("n_per_class must be positive");
  if (length < 4) throw InputError("series length must be at least 4");
  if (!bump_interval.fits(length)) throw InputError("bump interval does not fit the series length");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw InputError("noise_sigma must be >= 0");
  if (!std::isfinite(bump_height)) throw InputError("bump_height must be finite");
}

Dataset make_synthetic_bump(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t n = spec.length;
  std::vector<double> base(n);
  for (std::size_t t = 0; t < n; ++t)
    base[t] = std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(n));

  std::vector<double> bump(n, 0.0);
  const double centre = static_cast<double>(spec.bump_interval.start) +
                        0.5 * static_cast<double>(spec.bump_interval.length - 1);
  const double width = std::max(1.0, static_cast<double>(spec.bump_interval.length) / 4.0);
  for (std::size_t t = spec.bump_interval.start; t < spec.bump_interval.end(); ++t) {
    const double u = (static_cast<double>(t) - centre) / width;
    bump[t] = spec.bump_height * std::exp(-0.5 * u * u);
  }

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<LabeledInstance> out;
  out.reserve(2 * spec.n_per_class);
  for (int cls = 0; cls < 2; ++cls) {
    for (std::size_t i = 0; i < spec.n_per_class; ++i) {
      std::vector<double> v(n);
      for (std::size_t t = 0; t < n; ++t) {
        const double eps = spec.noise_sigma > 0.0 ? spec.noise_sigma * noise(rng) : 0.0;
        v[t] = base[t] + (cls == 1 ? bump[t] : 0.0) + eps;
      }
      const std::size_t idx = static_cast<std::size_t>(cls) * spec.n_per_class + i;
      out.push_back({TimeSeries(std::move(v), "synth-" + std::to_string(idx)), ClassLabel{cls}});
    }
  }
  return Dataset(std::move(out));
}

MinMaxScaler::MinMaxScaler(double min_v, double max_v) : min_(min_v), max_(max_v) {
  if (!(max_v > min_v)) throw FitError("scaler requires max > min");
}

MinMaxScaler MinMaxScaler::fit(const Dataset& d) {
  if (d.empty()) throw FitError("cannot fit a scaler on an empty dataset");
  double lo = d[0].series[0];
  double hi = lo;
  for (const auto& inst : d.instances()) {
    for (double v : inst.series.values()) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!(hi > lo)) throw FitError("dataset is constant-valued; cannot fit a min/max scaler");
  return MinMaxScaler(lo, hi);
}

TimeSeries MinMaxScaler::transform(const TimeSeries& t) const {
  std::vector<double> v(t.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = transform(t[i]);
  return TimeSeries(std::move(v), t.id());
}

TimeSeries MinMaxScaler::inverse_transform(const TimeSeries& t) const {
  std::vector<double> v(t.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = inverse_transform(t[i]);
  return TimeSeries(std::move(v), t.id());
}

Dataset MinMaxScaler::transform(const Dataset& d) const {
  std::vector<LabeledInstance> out;
  out.reserve(d.size());
  for (const auto& inst : d.instances()) out.push_back({transform(inst.series), inst.label});
  return Dataset(std::move(out));
}

std::pair<Dataset, Dataset> stratified_split(const Dataset& d, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw InputError("test_fraction must lie in (0, 1)");
  std::map<ClassLabel, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < d.size(); ++i) by_class[d[i].label].push_back(i);
  std::mt19937_64 rng(seed);
  std::vector<bool> in_test(d.size(), false);
  for (auto& [label, idx] : by_class) {
    if (idx.size() < 2)
      throw InputError("class " + std::to_string(label.value) + " has fewer than 2 instances; cannot split");
    std::shuffle(idx.begin(), idx.end(), rng);
    auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(idx.size())));
    n_test = std::clamp<std::size_t>(n_test, 1, idx.size() - 1);
    for (std::size_t k = 0; k < n_test; ++k) in_test[idx[k]] = true;
  }
  std::vector<LabeledInstance> train, test;
  for (std::size_t i = 0; i < d.size(); ++i) (in_test[i] ? test : train).push_back(d[i]);
  return {Dataset(std::move(train)), Dataset(std::move(test))};
}

}  // namespace timecf
