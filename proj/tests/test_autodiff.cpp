#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "graph_oracle.hpp"
#include "timecf/autodiff/adam.hpp"
#include "timecf/autodiff/graph.hpp"
#include "timecf/autodiff/layers.hpp"
#include "timecf/autodiff/serialize.hpp"
#include "timecf/error.hpp"

using namespace timecf;
using namespace timecf::ad;

TEST_CASE("forward values") {
  CHECK(sigmoid(Var(Tensor::scalar(0.0))).item() == 0.5);
  const Var x(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
  CHECK(mse_loss(x, x).item() == 0.0);
  const Var conv = conv1d(Var(Tensor({1, 4}, {1, 2, 3, 4})), Var(Tensor({1, 2}, {1, 1})));
  CHECK(conv.shape() == Shape{1, 1, 3});
  CHECK(conv.value().vec() == std::vector<double>{3, 5, 7});
  const Var m = matmul(Var(Tensor({1, 2}, {1, 2})), Var(Tensor({2, 2}, {1, 2, 3, 4})));
  CHECK(m.value().vec() == std::vector<double>{7, 10});
  CHECK(bce_with_logits(Var(Tensor::scalar(0.0)), Tensor::scalar(1.0)).item() == doctest::Approx(std::log(2.0)));
  CHECK(std::isfinite(bce_with_logits(Var(Tensor::scalar(800.0)), Tensor::scalar(0.0)).item()));
}

TEST_CASE("shape errors") {
  const Var a(Tensor({2, 3}));
  const Var b(Tensor({3, 2}));
  CHECK_THROWS_AS(add(a, b), UsageError);
  CHECK_THROWS_AS(mul(a, b), UsageError);
  CHECK_THROWS_AS(matmul(a, a), UsageError);
  CHECK_THROWS_AS(conv1d(Var(Tensor({1, 2})), Var(Tensor({1, 3}))), UsageError);
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), UsageError);
}

TEST_CASE("backward basics") {
  Var x = Var::parameter(Tensor({2, 3}, {1, -2, 3, 0.5, 0, 2}));
  backward(sum(x));
  for (double g : x.grad().data()) CHECK(g == 1.0);

  Var s = Var::parameter(Tensor::scalar(0.0));
  backward(sigmoid(s));
  CHECK(s.grad().item() == doctest::Approx(0.25));

  CHECK_THROWS_AS(backward(x), UsageError);
}

TEST_CASE("repeated backward accumulates, zero_grad resets") {
  Var x = Var::parameter(Tensor({3}, {1, 2, 3}));
  const Var loss = sum(square(x));
  backward(loss);
  backward(loss);
  CHECK(x.grad().vec() == std::vector<double>{4, 8, 12});
  x.zero_grad();
  CHECK(x.grad().vec() == std::vector<double>{0, 0, 0});
}

TEST_CASE("backward is linear in the loss") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    testing::RandomGraph g(seed);
    backward(g.loss());
    std::vector<Tensor> base;
    for (const auto& l : g.leaves()) base.push_back(l.grad());

    testing::RandomGraph g2(seed);
    backward(scale(g2.loss(), 2.5));
    for (std::size_t k = 0; k < base.size(); ++k)
      for (std::size_t i = 0; i < base[k].size(); ++i)
        CHECK(g2.leaves()[k].grad()[i] == doctest::Approx(2.5 * base[k][i]).epsilon(1e-12));
  }
}

TEST_CASE("node values are not mutated by backward") {
  for (std::uint64_t seed = 20; seed < 30; ++seed) {
    testing::RandomGraph g(seed);
    std::vector<Tensor> before;
    std::vector<std::shared_ptr<Node>> nodes{g.loss().node()};
    for (std::size_t i = 0; i < nodes.size(); ++i)
      for (const auto& p : nodes[i]->parents) nodes.push_back(p);
    for (const auto& n : nodes) before.push_back(n->value);
    backward(g.loss());
    for (std::size_t i = 0; i < nodes.size(); ++i) CHECK(nodes[i]->value == before[i]);
  }
}

TEST_CASE("random graphs match central finite differences") {
  const auto res = testing::run_random_graph_suite(60, 5000);
  MESSAGE("max relative error " << res.max_rel_error << " (" << res.skipped << " kink-adjacent graphs skipped)");
  CHECK(res.max_rel_error < 1e-4);
}

TEST_CASE("no_grad builds no graph") {
  Var x = Var::parameter(Tensor({2}, {1, 2}));
  NoGradGuard guard;
  const Var y = tanh(x);
  CHECK_FALSE(y.requires_grad());
  CHECK(y.node()->parents.empty());
}

TEST_CASE("gru step") {
  std::mt19937_64 rng(3);
  GruCell zero(2, 3, rng);
  for (auto v : zero.parameters().vars()) v.mutable_value().fill(0.0);
  const Var h = zero.step(Var(Tensor({1, 2}, 0.0)), Var(Tensor({1, 3}, 0.0)));
  for (double v : h.value().data()) CHECK(v == 0.0);

  GruCell cell(2, 3, rng);
  std::uniform_real_distribution<double> u(-0.99, 0.99);
  for (int k = 0; k < 50; ++k) {
    Tensor x({4, 2}), hp({4, 3});
    for (auto& v : x.data()) v = 5 * u(rng);
    for (auto& v : hp.data()) v = u(rng);
    const Var fused = cell.step(Var(x), Var(hp));
    const Var ref = gru_step_reference(cell, Var(x), Var(hp));
    for (std::size_t i = 0; i < fused.value().size(); ++i) {
      CHECK(fused.value()[i] > -1.0);
      CHECK(fused.value()[i] < 1.0);
      CHECK(fused.value()[i] == doctest::Approx(ref.value()[i]).epsilon(1e-13));
    }
  }
}

TEST_CASE("gru gradients through three unrolled steps") {
  std::mt19937_64 rng(4);
  GruCell cell(2, 3, rng);
  std::vector<Var> leaves = cell.parameters().vars();
  Tensor xs({2, 3, 2});
  std::normal_distribution<double> n(0, 1);
  for (auto& v : xs.data()) v = n(rng);
  Var x = Var::parameter(xs);
  leaves.push_back(x);

  auto build = [&](bool fused) {
    Var h(Tensor({2, 3}, 0.0));
    for (std::size_t t = 0; t < 3; ++t) {
      const Var xt = time_step(x, t);
      h = fused ? cell.step(xt, h) : gru_step_reference(cell, xt, h);
    }
    return sum(square(h));
  };
  backward(build(true));
  std::vector<Tensor> values, grads;
  for (auto& l : leaves) {
    values.push_back(l.value());
    grads.push_back(l.grad());
    l.zero_grad();
  }
  backward(build(false));
  for (std::size_t k = 0; k < leaves.size(); ++k)
    for (std::size_t i = 0; i < grads[k].size(); ++i)
      CHECK(leaves[k].grad()[i] == doctest::Approx(grads[k][i]).epsilon(1e-10));

  const auto chk = testing::check_gradients(values, grads, [&](const std::vector<Tensor>& v) {
    for (std::size_t k = 0; k < leaves.size(); ++k) leaves[k].mutable_value() = v[k];
    NoGradGuard guard;
    const double out = build(true).item();
    for (std::size_t k = 0; k < leaves.size(); ++k) leaves[k].mutable_value() = values[k];
    return out;
  });
  CHECK(chk.max_rel_error < 1e-4);
}

TEST_CASE("adam") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    Var p = Var::parameter(Tensor({3}, {1, 2, 3}));
    Adam opt({p}, 1e-3);
    p.mutable_grad();
    for (int i = 0; i < 5; ++i) opt.step();
    CHECK(p.value().vec() == std::vector<double>{1, 2, 3});
  }
  SUBCASE("first step moves by lr for a constant gradient") {
    // Bias correction makes mhat = g and vhat = g^2, so the step is lr*g/(|g|+eps).
    AdamState st;
    Tensor p({2}, {0.5, -0.5});
    const Tensor g({2}, {3.0, -0.2});
    Tensor* ps[] = {&p};
    const Tensor* gs[] = {&g};
    adam_step(st, ps, gs);
    CHECK(p[0] == doctest::Approx(0.5 - 1e-3 * 3.0 / (3.0 + 1e-8)).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(-0.5 + 1e-3 * 0.2 / (0.2 + 1e-8)).epsilon(1e-12));
  }
  SUBCASE("deterministic trajectories") {
    auto run = [] {
      std::mt19937_64 rng(9);
      Linear lin(3, 2, rng);
      Adam opt(lin.parameters().vars(), 1e-2);
      const Var x(Tensor({4, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12}));
      for (int i = 0; i < 20; ++i) {
        opt.zero_grad();
        backward(mean(square(lin(x))));
        opt.step();
      }
      return lin.parameters().snapshot();
    };
    const auto a = run();
    const auto b = run();
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k].second == b[k].second);
  }
  SUBCASE("shape mismatch") {
    AdamState st;
    Tensor p({2});
    const Tensor g({3});
    Tensor* ps[] = {&p};
    const Tensor* gs[] = {&g};
    CHECK_THROWS_AS(adam_step(st, ps, gs), UsageError);
  }
}

TEST_CASE("parameter file round trip") {
  std::mt19937_64 rng(1);
  GruStack stack(1, 4, 2, rng);
  const auto snap = stack.parameters().snapshot();
  std::stringstream buf;
  write_tensors(buf, snap);
  const std::string bytes = buf.str();
  CHECK(bytes.substr(0, 4) == "TCF1");
  const auto back = read_tensors(buf);
  REQUIRE(back.size() == snap.size());
  for (std::size_t i = 0; i < snap.size(); ++i) {
    CHECK(back[i].first == snap[i].first);
    CHECK(back[i].second == snap[i].second);
  }
  std::mt19937_64 rng2(2);
  GruStack other(1, 4, 2, rng2);
  auto params = other.parameters();
  params.load(back);
  CHECK(params.snapshot()[0].second == snap[0].second);

  std::stringstream bad("XXXX");
  CHECK_THROWS_AS(read_tensors(bad), ParseError);
  std::stringstream cut(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(read_tensors(cut), ParseError);
}
