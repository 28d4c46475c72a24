#include <doctest.h>

#include <cmath>
#include <random>

#include "timecf/core.hpp"

using namespace timecf;

namespace {

TimeSeries random_series(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return TimeSeries(v);
}

// Oracles written as plain index loops, independent of the library code.
double oracle_l1(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
  return s;
}

std::size_t oracle_hamming(const std::vector<double>& a, const std::vector<double>& b, double eps) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::fabs(a[i] - b[i]) > eps) n++;
  return n;
}

}  // namespace

TEST_CASE("time series rejects non-finite values") {
  CHECK_THROWS_AS(TimeSeries({1.0, NAN}), InputError);
  CHECK_THROWS_AS(TimeSeries({INFINITY}), InputError);
  CHECK_THROWS_AS(TimeSeries(std::vector<double>{}), InputError);
}

TEST_CASE("l1 distance") {
  CHECK(l1_distance(TimeSeries({1, 2, 3}), TimeSeries({1, 2, 3})) == 0.0);
  CHECK(l1_distance(TimeSeries({0, 0}), TimeSeries({1, -1})) == 2.0);
  CHECK_THROWS_AS(l1_distance(TimeSeries({0, 0}), TimeSeries({1, 2, 3})), InputError);

  std::mt19937_64 rng(11);
  for (int k = 0; k < 20; ++k) {
    const auto a = random_series(rng, 50);
    const auto b = random_series(rng, 50);
    CHECK(l1_distance(a, b) == doctest::Approx(oracle_l1(a.vec(), b.vec())).epsilon(1e-14));
    CHECK(l1_distance(a, b) == l1_distance(b, a));
    CHECK(l1_distance(a, b) > 0.0);
  }
}

TEST_CASE("hamming distance") {
  std::mt19937_64 rng(12);
  const auto x = random_series(rng, 30);
  CHECK(hamming_distance(x, x, 1e-8) == 0);
  CHECK(hamming_distance(TimeSeries({0, 0, 0}), TimeSeries({0, 5, 5}), 1e-8) == 2);
  CHECK_THROWS_AS(hamming_distance(TimeSeries({0, 0}), TimeSeries({0}), 1e-8), InputError);
  CHECK_THROWS_AS(hamming_distance(x, x, -1.0), InputError);

  std::uniform_int_distribution<int> coin(0, 2);
  for (int k = 0; k < 50; ++k) {
    const auto a = random_series(rng, 40);
    std::vector<double> bv = a.vec();
    for (auto& v : bv)
      if (coin(rng) == 0) v += 1e-3 * coin(rng);
    const TimeSeries b(bv);
    CHECK(hamming_distance(a, b, 1e-8) == oracle_hamming(a.vec(), bv, 1e-8));
    CHECK(hamming_distance(a, b, 0.0) == hamming_distance(b, a, 0.0));
    CHECK((hamming_distance(a, b, 0.0) == 0) == (a == b));
  }
}

TEST_CASE("crop") {
  const TimeSeries t({1, 2, 3, 4});
  CHECK(crop(t, {1, 2}) == std::vector<double>{2, 3});
  CHECK(crop(t, {0, 4}) == t.vec());
  CHECK_THROWS_AS(crop(t, {3, 2}), InputError);
  CHECK_THROWS_AS(crop(t, {0, 0}), InputError);

  std::mt19937_64 rng(13);
  for (int k = 0; k < 30; ++k) {
    const auto s = random_series(rng, 25);
    const std::size_t start = std::uniform_int_distribution<std::size_t>(0, 24)(rng);
    const std::size_t len = std::uniform_int_distribution<std::size_t>(1, 25 - start)(rng);
    const auto seg = crop(s, {start, len});
    REQUIRE(seg.size() == len);
    for (std::size_t i = 0; i < len; ++i) CHECK(seg[i] == s[start + i]);
  }
}

TEST_CASE("replace segment") {
  std::mt19937_64 rng(14);
  const auto x = random_series(rng, 20);
  const Interval iv{5, 6};
  CHECK(replace_segment(x, crop(x, iv), iv) == x);
  const std::vector<double> nines{9, 9};
  CHECK(replace_segment(TimeSeries({0, 0, 0, 0}), nines, {1, 2}).vec() == std::vector<double>{0, 9, 9, 0});
  CHECK_THROWS_AS(replace_segment(x, nines, {0, 3}), InputError);
  CHECK_THROWS_AS(replace_segment(x, nines, {19, 2}), InputError);

  for (int k = 0; k < 100; ++k) {
    const auto t = random_series(rng, 32);
    const std::size_t start = std::uniform_int_distribution<std::size_t>(0, 31)(rng);
    const std::size_t len = std::uniform_int_distribution<std::size_t>(1, 32 - start)(rng);
    const Interval r{start, len};
    const auto seg = crop(random_series(rng, 32), r);
    const auto before = t.vec();
    const auto out = replace_segment(t, seg, r);
    CHECK(t.vec() == before);
    CHECK(hamming_distance(out, t, 0.0) <= len);
    CHECK(crop(out, r) == seg);
    for (std::size_t i = 0; i < 32; ++i)
      if (!r.contains(i)) CHECK(out[i] == t[i]);
  }
}

TEST_CASE("interval overlap") {
  CHECK(Interval{0, 10}.overlap({5, 10}) == 5);
  CHECK(Interval{0, 5}.overlap({5, 10}) == 0);
  CHECK(Interval{3, 2}.overlap({0, 10}) == 2);
}

TEST_CASE("dataset invariants") {
  CHECK_THROWS_AS(Dataset(std::vector<LabeledInstance>{}), InputError);
  CHECK_THROWS_AS(Dataset({{TimeSeries({1, 2}), {0}}, {TimeSeries({1, 2, 3}), {1}}}), InputError);
  const Dataset d({{TimeSeries({1, 2}), {1}}, {TimeSeries({3, 4}), {0}}, {TimeSeries({5, 6}), {1}}});
  CHECK(d.series_length() == 2);
  CHECK(d.labels() == std::vector<ClassLabel>{{0}, {1}});
  CHECK(d.count({1}) == 2);
  const auto rest = d.without_label({1});
  CHECK(rest.size() == 1);
  CHECK(rest[0].series[0] == 3.0);
  CHECK_THROWS_AS(Dataset({{TimeSeries({1, 2}), {0}}}).without_label({0}), UsageError);
}
