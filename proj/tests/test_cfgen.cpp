#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "timecf/cfgen.hpp"
#include "timecf/classifiers.hpp"
#include "timecf/ingest.hpp"

using namespace timecf;

namespace {

TimeGanConfig quick_gan() {
  TimeGanConfig cfg;
  cfg.hidden_dim = 8;
  cfg.iters_embed = 60;
  cfg.iters_supervised = 30;
  cfg.iters_joint = 20;
  cfg.batch_size = 8;
  cfg.lr = 5e-3;
  cfg.seed = 42;
  return cfg;
}

SyntheticSpec small_bump(double noise) {
  SyntheticSpec spec;
  spec.n_per_class = 8;
  spec.length = 40;
  spec.bump_interval = {16, 8};
  spec.noise_sigma = noise;
  return spec;
}

ShapeletCandidate shapelet_at(const Dataset& d, std::size_t source, Interval iv) {
  ShapeletCandidate s;
  s.source_index = source;
  s.class_label = d[source].label;
  s.interval = iv;
  s.values = crop(d[source].series, iv);
  return s;
}

// Exhaustive argmin applying the tie rules one at a time.
std::size_t oracle_recommend(const std::vector<CounterfactualResult>& c, const TimeSeries& t) {
  std::vector<std::size_t> idx(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) idx[i] = i;
  auto keep_min = [&](auto score) {
    auto best = score(c[idx[0]]);
    for (auto i : idx) best = std::min(best, score(c[i]));
    std::vector<std::size_t> next;
    for (auto i : idx)
      if (score(c[i]) == best) next.push_back(i);
    idx = next;
  };
  keep_min([&](const CounterfactualResult& r) { return hamming_distance(t, r.counterfactual); });
  keep_min([](const CounterfactualResult& r) { return r.l1; });
  keep_min([](const CounterfactualResult& r) { return r.interval.start; });
  keep_min([](const CounterfactualResult& r) { return *r.fake_index; });
  return idx.front();
}

void check_locality(const ExplanationReport& rep) {
  for (const auto& r : rep.results) {
    CHECK(hamming_distance(rep.original, r.counterfactual, 0.0) <= r.interval.length);
    for (std::size_t t = 0; t < rep.original.size(); ++t)
      if (!r.interval.contains(t)) CHECK(r.counterfactual[t] == rep.original[t]);
  }
}

}  // namespace

TEST_CASE("method names") {
  CHECK(parse_method("timecf") == Method::timecf);
  CHECK(to_string(parse_method("nun")) == "nun");
  CHECK_THROWS_AS(parse_method("wachter"), UsageError);
}

TEST_CASE("constant classifier never flips") {
  const Dataset d = make_synthetic_bump(small_bump(0.0));
  const ConstantClassifier f(ClassLabel{1});
  const std::vector<ShapeletCandidate> shapelets{shapelet_at(d, 8, {16, 8})};
  const std::vector<TimeSeries> fakes{d[0].series, d[1].series};
  CHECK(generate_counterfactuals(d[9].series, ClassLabel{1}, shapelets, fakes, f).empty());
  CHECK_THROWS_AS(recommend({}, d[9].series), NoCounterfactual);
  CHECK(!nun_baseline(d[9].series, ClassLabel{1}, d, f));
}

TEST_CASE("removing the bump flips 1-NN") {
  const Dataset d = make_synthetic_bump(small_bump(0.0));
  const auto f = fit_1nn(d);
  const TimeSeries& t = d[10].series;  // class 1, has the bump
  REQUIRE(f.predict(t) == ClassLabel{1});
  std::vector<ShapeletCandidate> shapelets{shapelet_at(d, 9, {0, 8}), shapelet_at(d, 9, {16, 8}),
                                           shapelet_at(d, 2, {16, 8})};
  const std::vector<TimeSeries> fakes{d[0].series, d[3].series};
  const auto results = generate_counterfactuals(t, ClassLabel{1}, shapelets, fakes, f, kDefaultEps, 3);
  REQUIRE(!results.empty());
  for (const auto& r : results) {
    CHECK(f.predict(r.counterfactual) != ClassLabel{1});
    CHECK(r.predicted_label == ClassLabel{0});
    CHECK(r.shapelet_ref == std::optional<std::size_t>(1));  // class-0 shapelet skipped, off-bump one fails
    CHECK(r.interval == Interval{16, 8});
    CHECK(r.counterfactual == replace_segment(t, crop(fakes[*r.fake_index], r.interval), r.interval));
  }
  CHECK(results.size() == 2);
  CHECK(results[0].fake_index == std::optional<std::size_t>(0));

  const std::vector<TimeSeries> wrong{TimeSeries(std::vector<double>(39, 0.0))};
  CHECK_THROWS_AS(generate_counterfactuals(t, ClassLabel{1}, shapelets, wrong, f), InputError);
}

TEST_CASE("recommend") {
  const TimeSeries t(std::vector<double>(50, 0.0));
  auto make = [&](std::size_t start, std::size_t len, double v, std::size_t fake) {
    std::vector<double> x(50, 0.0);
    for (std::size_t i = start; i < start + len; ++i) x[i] = v;
    CounterfactualResult r;
    r.counterfactual = TimeSeries(x);
    r.interval = {start, len};
    r.fake_index = fake;
    r.hamming = len;
    r.l1 = l1_distance(t, r.counterfactual);
    return r;
  };
  const std::vector<CounterfactualResult> one{make(3, 5, 1.0, 0)};
  CHECK(&recommend(one, t) == &one[0]);
  const std::vector<CounterfactualResult> two{make(0, 30, 1.0, 0), make(20, 10, 1.0, 1)};
  CHECK(recommend(two, t).hamming == 10);

  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<CounterfactualResult> c;
    const auto n = std::uniform_int_distribution<int>(1, 12)(rng);
    for (int i = 0; i < n; ++i) {
      const auto start = std::uniform_int_distribution<std::size_t>(0, 3)(rng) * 10;
      const auto len = std::uniform_int_distribution<std::size_t>(1, 3)(rng) * 5;
      const double v = std::uniform_int_distribution<int>(1, 2)(rng) * 0.5;
      c.push_back(make(start, len, v, std::uniform_int_distribution<std::size_t>(0, 4)(rng)));
    }
    CHECK(&recommend(c, t) == &c[oracle_recommend(c, t)]);
  }
}

TEST_CASE("nun baseline") {
  const Dataset d = make_synthetic_bump(small_bump(0.1));
  const auto f = fit_1nn(d);
  for (std::size_t i : {0, 5, 9, 14}) {
    const TimeSeries& t = d[i].series;
    const ClassLabel l = f.predict(t);
    const auto r = nun_baseline(t, l, d, f);
    REQUIRE(r);  // 1-NN always flips on its own training point
    CHECK(r->method == Method::nun);
    CHECK(r->interval == Interval{0, t.size()});
    CHECK(d[*r->neighbor_index].label != l);
    CHECK(100.0 * (1.0 - static_cast<double>(r->hamming) / static_cast<double>(t.size())) < 5.0);
  }
}

TEST_CASE("explain trains on the other labels only and caches per label") {
  const Dataset d = make_synthetic_bump(small_bump(0.05));
  const auto f = fit_1nn(d);
  GanCache gans(quick_gan());
  std::vector<std::pair<int, std::set<int>>> seen;
  gans.set_train_hook([&](const Dataset& subset, ClassLabel excluded) {
    std::set<int> labels;
    for (const auto& inst : subset.instances()) labels.insert(inst.label.value);
    seen.emplace_back(excluded.value, labels);
  });
  std::size_t reads = 0;
  gans.set_observer({[&](std::size_t) { ++reads; }});

  RstConfig rst;
  rst.lengths = {4, 8};
  rst.seed = 2;
  const auto shapelets = extract_top_shapelets(d, rst);
  ExplainConfig cfg;
  cfg.m = 10;

  const auto rep = explain(d[1].series, ClassLabel{0}, d, f, shapelets, gans, cfg);
  REQUIRE(seen.size() == 1);
  CHECK(seen[0].first == 0);
  CHECK(seen[0].second == std::set<int>{1});
  CHECK(reads > 0);
  CHECK(rep.fakes == 10);
  CHECK(rep.outcomes.size() == shapelets.size());
  check_locality(rep);
  if (rep.recommended)
    for (const auto& r : rep.results) CHECK(rep.recommended->hamming <= r.hamming);

  explain(d[2].series, ClassLabel{0}, d, f, shapelets, gans, cfg);
  CHECK(gans.trainings() == 1);
  explain(d[12].series, ClassLabel{1}, d, f, shapelets, gans, cfg);
  CHECK(gans.trainings() == 2);
  CHECK(seen[1].second == std::set<int>{0});

  GanCache literal(quick_gan(), false);
  explain(d[1].series, ClassLabel{0}, d, f, shapelets, literal, cfg);
  explain(d[2].series, ClassLabel{0}, d, f, shapelets, literal, cfg);
  CHECK(literal.trainings() == 2);

  CHECK_THROWS_AS(explain(d[1].series, ClassLabel{0}, d.without_label(ClassLabel{1}), f, shapelets, gans, cfg),
                  UsageError);
}

TEST_CASE("noise-free bump: recommended edit overlaps the bump") {
  const SyntheticSpec spec = small_bump(0.0);
  const Dataset d = make_synthetic_bump(spec);
  const auto f = fit_1nn(d);
  RstConfig rst;
  rst.lengths = {4, 8, 12};
  rst.seed = 4;
  const auto shapelets = extract_top_shapelets(d, rst);
  GanCache gans(quick_gan());
  ExplainConfig cfg;
  cfg.m = 20;
  // class-1 instances carry the bump; removing it is the only way to flip
  const auto rep = explain(d[12].series, ClassLabel{1}, d, f, shapelets, gans, cfg);
  REQUIRE(rep.recommended);
  CHECK(rep.recommended->interval.overlap(spec.bump_interval) > 0);
  for (const auto& r : rep.results) {
    CHECK(r.interval.overlap(spec.bump_interval) > 0);
    CHECK(f.predict(r.counterfactual) != ClassLabel{1});
  }
  check_locality(rep);

  const auto again = explain(d[12].series, ClassLabel{1}, d, f, shapelets, gans, cfg);
  REQUIRE(again.results.size() == rep.results.size());
  for (std::size_t i = 0; i < rep.results.size(); ++i)
    CHECK(again.results[i].counterfactual == rep.results[i].counterfactual);
}
