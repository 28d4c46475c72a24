#include "timecf/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "timecf/parallel.hpp"

namespace timecf {

namespace {

constexpr double kEulerGamma = 0.5772156649;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

double closeness(const TimeSeries& orig, const TimeSeries& cf) { return l1_distance(orig, cf); }

double sparsity(const TimeSeries& orig, const TimeSeries& cf, double eps) {
  const std::size_t h = hamming_distance(orig, cf, eps);
  return 100.0 * (1.0 - static_cast<double>(h) / static_cast<double>(orig.size()));
}

double sensibility(const std::vector<bool>& explained) {
  if (explained.empty()) throw InputError("sensibility of an empty outcome list");
  const auto hits = std::count(explained.begin(), explained.end(), true);
  return static_cast<double>(hits) / static_cast<double>(explained.size());
}

double iforest_c(double n) {
  if (n <= 1.0) return 0.0;
  return 2.0 * (std::log(n - 1.0) + kEulerGamma) - 2.0 * (n - 1.0) / n;
}

double iforest_score(double expected_path_length, double psi) {
  return std::pow(2.0, -expected_path_length / iforest_c(psi));
}

IsolationForest IsolationForest::fit(const Dataset& d, const IForestConfig& cfg) {
  std::vector<std::vector<double>> rows;
  rows.reserve(d.size());
  for (const auto& inst : d.instances()) rows.push_back(inst.series.vec());
  return fit(rows, cfg);
}

IsolationForest IsolationForest::fit(const std::vector<std::vector<double>>& rows, const IForestConfig& cfg) {
  if (rows.size() < 2) throw FitError("isolation forest needs at least 2 training points");
  if (cfg.n_trees == 0 || cfg.subsample < 2) throw UsageError("isolation forest needs n_trees >= 1 and subsample >= 2");
  IsolationForest forest;
  forest.n_features_ = rows.front().size();
  for (const auto& r : rows)
    if (r.size() != forest.n_features_ || r.empty()) throw InputError("isolation forest rows differ in length");
  forest.psi_ = std::min(cfg.subsample, rows.size());
  forest.max_depth_ = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(forest.psi_))));

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> all(rows.size());
  std::iota(all.begin(), all.end(), 0);
  for (std::size_t k = 0; k < cfg.n_trees; ++k) {
    for (std::size_t i = 0; i < forest.psi_; ++i) {
      const std::size_t j = std::uniform_int_distribution<std::size_t>(i, all.size() - 1)(rng);
      std::swap(all[i], all[j]);
    }
    std::vector<std::size_t> sample(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(forest.psi_));

    Tree tree;
    // (node index, members)
    std::vector<std::pair<int, std::vector<std::size_t>>> stack;
    tree.push_back({0, 0.0, -1, -1, sample.size(), 0});
    stack.emplace_back(0, std::move(sample));
    while (!stack.empty()) {
      auto [idx, members] = std::move(stack.back());
      stack.pop_back();
      const std::size_t depth = tree[static_cast<std::size_t>(idx)].depth;
      if (depth >= forest.max_depth_ || members.size() <= 1) continue;
      std::vector<std::size_t> splittable;
      std::vector<std::pair<double, double>> ranges(forest.n_features_);
      for (std::size_t q = 0; q < forest.n_features_; ++q) {
        double lo = rows[members[0]][q], hi = lo;
        for (auto m : members) {
          lo = std::min(lo, rows[m][q]);
          hi = std::max(hi, rows[m][q]);
        }
        ranges[q] = {lo, hi};
        if (hi > lo) splittable.push_back(q);
      }
      if (splittable.empty()) continue;
      const std::size_t q = splittable[std::uniform_int_distribution<std::size_t>(0, splittable.size() - 1)(rng)];
      const double p = std::uniform_real_distribution<double>(ranges[q].first, ranges[q].second)(rng);
      std::vector<std::size_t> left, right;
      for (auto m : members) (rows[m][q] < p ? left : right).push_back(m);
      if (left.empty() || right.empty()) continue;  // p fell on the max; keep as leaf
      const int li = static_cast<int>(tree.size());
      tree.push_back({0, 0.0, -1, -1, left.size(), depth + 1});
      const int ri = static_cast<int>(tree.size());
      tree.push_back({0, 0.0, -1, -1, right.size(), depth + 1});
      auto& node = tree[static_cast<std::size_t>(idx)];
      node.feature = q;
      node.threshold = p;
      node.left = li;
      node.right = ri;
      stack.emplace_back(li, std::move(left));
      stack.emplace_back(ri, std::move(right));
    }
    forest.trees_.push_back(std::move(tree));
  }
  return forest;
}

double IsolationForest::expected_path_length(std::span<const double> x) const {
  if (x.size() != n_features_) throw InputError("isolation forest input has the wrong length");
  double total = 0.0;
  for (const auto& tree : trees_) {
    const Node* node = &tree[0];
    while (node->left >= 0) node = &tree[static_cast<std::size_t>(x[node->feature] < node->threshold ? node->left : node->right)];
    total += static_cast<double>(node->depth) + iforest_c(static_cast<double>(node->size));
  }
  return total / static_cast<double>(trees_.size());
}

double IsolationForest::score(std::span<const double> x) const {
  return iforest_score(expected_path_length(x), static_cast<double>(psi_));
}

std::size_t IsolationForest::deepest_leaf() const {
  std::size_t d = 0;
  for (const auto& tree : trees_)
    for (const auto& node : tree)
      if (node.left < 0) d = std::max(d, node.depth);
  return d;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw InputError("percentile of an empty list");
  if (!(q >= 0.0 && q <= 1.0)) throw UsageError("percentile rank must lie in [0,1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

PlausibilityModel PlausibilityModel::fit(const Dataset& train, const IForestConfig& cfg, double q) {
  PlausibilityModel m{IsolationForest::fit(train, cfg), 0.0};
  std::vector<double> scores;
  for (const auto& inst : train.instances()) scores.push_back(m.forest.score(inst.series));
  m.threshold = percentile(std::move(scores), q);
  return m;
}

double plausibility(const std::vector<TimeSeries>& cfs, const IsolationForest& forest, double threshold) {
  if (cfs.empty()) throw InputError("plausibility of an empty counterfactual list");
  std::size_t out = 0;
  for (const auto& cf : cfs) out += forest.score(cf) > threshold;
  return static_cast<double>(out) / static_cast<double>(cfs.size());
}

const CellMetrics* MetricsReport::find(const std::string& classifier, Method method) const {
  for (const auto& c : cells)
    if (c.classifier == classifier && c.method == to_string(method)) return &c;
  return nullptr;
}

namespace {

struct Verified {
  std::size_t total = 0, flipped = 0, local = 0;
};

Verified verify(const ExplanationReport& rep, const Predictor& f) {
  Verified v;
  for (const auto& r : rep.results) {
    ++v.total;
    v.flipped += f.predict(r.counterfactual) != rep.original_label;
    bool local = true;
    for (std::size_t t = 0; t < rep.original.size() && local; ++t)
      if (!r.interval.contains(t) && r.counterfactual[t] != rep.original[t]) local = false;
    v.local += local;
  }
  return v;
}

void run_cell(CellMetrics& cell, const Predictor& f, const std::vector<ClassLabel>& preds, Method method,
              const Dataset& train, const Dataset& test, const std::vector<ShapeletCandidate>& shapelets, GanCache& gans,
              const PlausibilityModel& plaus, const BenchmarkConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  if (method == Method::timecf && gans.enabled()) {
    std::set<ClassLabel> needed(preds.begin(), preds.end());
    gans.prewarm(train, {needed.begin(), needed.end()}, cfg.threads);
  }
  std::vector<InstanceRecord> records(test.size());
  std::vector<Verified> checks(test.size());
  parallel_for(test.size(), cfg.threads, [&](std::size_t i) {
    const TimeSeries& t = test[i].series;
    ExplanationReport rep;
    if (method == Method::timecf) {
      ExplainConfig ec = cfg.explain;
      ec.threads = 1;
      ec.sample_seed = cfg.explain.sample_seed + i;
      rep = explain(t, preds[i], train, f, shapelets, gans, ec);
    } else {
      rep = explain_nun(t, preds[i], train, f, cfg.explain.eps);
    }
    checks[i] = verify(rep, f);
    InstanceRecord& rec = records[i];
    rec.test_index = i;
    rec.id = rep.original_id;
    rec.true_label = test[i].label;
    rec.explained_label = preds[i];
    rec.candidates = rep.results.size();
    if (rep.recommended) {
      rec.recommended = rep.recommended;
      rec.sparsity = sparsity(t, rep.recommended->counterfactual, cfg.explain.eps);
      rec.outlier_score = plaus.forest.score(rep.recommended->counterfactual);
    }
  });

  std::vector<bool> explained;
  std::vector<TimeSeries> cfs;
  double l1_sum = 0.0, sp_sum = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    explained.push_back(rec.recommended.has_value());
    cell.results_total += checks[i].total;
    cell.results_flipped += checks[i].flipped;
    cell.results_local += checks[i].local;
    if (!rec.recommended) continue;
    l1_sum += closeness(test[i].series, rec.recommended->counterfactual);
    sp_sum += *rec.sparsity;
    cfs.push_back(rec.recommended->counterfactual);
  }
  cell.instances = records.size();
  cell.explained = cfs.size();
  cell.sensibility = sensibility(explained);
  if (!cfs.empty()) {
    const double k = static_cast<double>(cfs.size());
    cell.closeness = l1_sum / k;
    cell.closeness_per_step = l1_sum / k / static_cast<double>(train.series_length());
    cell.sparsity = sp_sum / k;
    cell.plausibility = plausibility(cfs, plaus.forest, plaus.threshold);
  }
  cell.records = std::move(records);
  cell.seconds = seconds_since(t0);
}

}  // namespace

MetricsReport run_benchmark(const Dataset& train, const Dataset& test, const BenchmarkConfig& cfg) {
  if (test.empty()) throw InputError("benchmark needs a non-empty test set");
  if (test.series_length() != train.series_length()) throw InputError("train and test series lengths differ");
  const auto start = std::chrono::steady_clock::now();
  MetricsReport report;

  RstConfig rst = cfg.rst;
  rst.threads = cfg.threads;
  auto t0 = std::chrono::steady_clock::now();
  const auto shapelets = extract_top_shapelets(train, rst);
  report.shapelet_seconds = seconds_since(t0);
  report.shapelets = shapelets.size();

  const auto plaus = PlausibilityModel::fit(train, cfg.iforest);
  report.plausibility_threshold = plaus.threshold;
  std::vector<TimeSeries> real;
  for (const auto& inst : test.instances()) real.push_back(inst.series);
  report.test_outlier_rate = plausibility(real, plaus.forest, plaus.threshold);

  GanCache gans(cfg.gan, cfg.cache_gans);
  for (const auto& name : cfg.classifiers) {
    std::unique_ptr<Predictor> f;
    std::optional<std::string> build_error;
    std::vector<ClassLabel> preds;
    double acc = 0.0;
    try {
      f = make_classifier(name, train, cfg.cnn);
      for (const auto& inst : test.instances()) preds.push_back(f->predict(inst.series));
      acc = accuracy(*f, test);
    } catch (const std::exception& e) {
      build_error = e.what();
    }
    for (Method method : cfg.methods) {
      CellMetrics cell;
      cell.dataset = cfg.dataset;
      cell.classifier = name;
      cell.method = to_string(method);
      cell.classifier_accuracy = acc;
      if (build_error) {
        cell.error = *build_error;
      } else {
        try {
          run_cell(cell, *f, preds, method, train, test, shapelets, gans, plaus, cfg);
        } catch (const std::exception& e) {
          cell.error = e.what();
        }
      }
      report.cells.push_back(std::move(cell));
    }
  }
  report.gan_seconds = gans.training_seconds();
  report.total_seconds = seconds_since(start);
  return report;
}

std::string format_table(const MetricsReport& r) {
  auto opt = [](const std::optional<double>& v, int prec) {
    if (!v) return std::string("-");
    std::ostringstream os;
    os << std::fixed << std::setprecision(prec) << *v;
    return os.str();
  };
  std::vector<std::vector<std::string>> rows{
      {"dataset", "classifier", "method", "acc", "explained", "sensibility", "closeness", "sparsity%", "plausibility", "note"}};
  for (const auto& c : r.cells) {
    rows.push_back({c.dataset, c.classifier, c.method, opt(c.classifier_accuracy, 3),
                    std::to_string(c.explained) + "/" + std::to_string(c.instances), opt(c.sensibility, 3),
                    opt(c.closeness, 3), opt(c.sparsity, 2), opt(c.plausibility, 3), c.error.value_or("")});
  }
  std::vector<std::size_t> width(rows[0].size(), 0);
  for (const auto& row : rows)
    for (std::size_t j = 0; j < row.size(); ++j) width[j] = std::max(width[j], row[j].size());
  std::ostringstream os;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t j = 0; j < row.size(); ++j) {
      line += row[j];
      if (j + 1 < row.size()) line += std::string(width[j] - row[j].size() + 2, ' ');
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    os << line << '\n';
  }
  return os.str();
}

}  // namespace timecf
