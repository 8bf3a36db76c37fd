#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "smadrl/dqn.hpp"
#include "smadrl/errors.hpp"
#include "smadrl/mlp.hpp"

using namespace smadrl;

namespace {

using MatD = Mlp<double>::Matrix;

MatD random_inputs(int dim, int batch, Rng& rng) {
  MatD x(dim, batch);
  for (int b = 0; b < batch; ++b) {
    for (int i = 0; i < dim; ++i) x(i, b) = 2.0 * rng.uniform() - 1.0;
  }
  return x;
}

std::vector<double> column(const MatD& m, int b) {
  return std::vector<double>(m.col(b).data(), m.col(b).data() + m.rows());
}

DqnConfig tiny_config() {
  DqnConfig c;
  c.hidden = {8};
  c.batch_size = 4;
  c.buffer_capacity = 64;
  c.learn_start = 1;
  c.sync_interval = 1000;
  return c;
}

}  // namespace

TEST_CASE("forward: zero net and hand-set identity") {
  Mlp<double> zero({3, 4, 2});
  const std::vector<double> x{1.0, -2.0, 0.5};
  for (double y : zero.forward(x)) CHECK(y == 0.0);

  Mlp<double> id({1, 1});
  id.weight(0)(0, 0) = 1.0;
  const std::vector<double> in{0.75};
  CHECK(id.forward(in)[0] == 0.75);
}

TEST_CASE("forward matches the loop oracle") {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const std::vector<int> sizes{7, 9, 6, 5};
    Mlp<double> net(sizes);
    net.init_uniform(rng);
    const std::vector<double> params(net.params().begin(), net.params().end());
    const MatD x = random_inputs(7, 5, rng);
    const MatD y = net.forward(x);
    for (int b = 0; b < 5; ++b) {
      const auto ref = oracle::forward(sizes, params, column(x, b));
      for (int k = 0; k < 5; ++k) CHECK(std::abs(y(k, b) - ref[k]) <= 1e-12);
    }
  }
}

TEST_CASE("loss gradients") {
  SUBCASE("targets equal predictions") {
    Rng rng(2);
    Mlp<double> net({3, 6, 5});
    net.init_uniform(rng);
    const MatD x = random_inputs(3, 4, rng);
    const MatD q = net.forward(x);
    std::vector<int> actions{0, 4, 2, 1};
    std::vector<double> targets(4), grads(net.param_count());
    for (int b = 0; b < 4; ++b) targets[b] = q(actions[b], b);
    CHECK(loss_and_grads<double>(net, x, actions, targets, grads) == 0.0);
    for (double g : grads) CHECK(g == 0.0);
  }
  SUBCASE("one-parameter linear model") {
    // q = w x with no effective bias: d/dw (w x - y)^2 = 2 x (w x - y).
    Mlp<double> net({1, 1});
    net.weight(0)(0, 0) = 0.5;
    MatD x(1, 1);
    x(0, 0) = 3.0;
    const std::vector<int> a{0};
    const std::vector<double> y{2.0};
    std::vector<double> g(2);
    const double l = loss_and_grads<double>(net, x, a, y, g);
    CHECK(l == doctest::Approx(0.25));
    CHECK(g[0] == doctest::Approx(2.0 * 3.0 * (1.5 - 2.0)));
    CHECK(g[1] == doctest::Approx(2.0 * (1.5 - 2.0)));
  }
  SUBCASE("finite differences on a random net") {
    Rng rng(5);
    const std::vector<int> sizes{4, 6, 6, 5};
    Mlp<double> net(sizes);
    net.init_uniform(rng);
    const int batch = 3;
    const MatD x = random_inputs(4, batch, rng);
    std::vector<int> actions;
    std::vector<double> targets;
    std::vector<std::vector<double>> rows;
    for (int b = 0; b < batch; ++b) {
      actions.push_back(static_cast<int>(rng.below(5)));
      targets.push_back(2.0 * rng.uniform() - 1.0);
      rows.push_back(column(x, b));
    }
    std::vector<double> grads(net.param_count());
    loss_and_grads<double>(net, x, actions, targets, grads);
    const std::vector<double> params(net.params().begin(), net.params().end());
    const auto numeric = oracle::numeric_grad(sizes, params, rows, actions, targets, 1e-5);
    for (std::size_t i = 0; i < grads.size(); ++i) {
      CHECK_MESSAGE(oracle::rel_error(grads[i], numeric[i]) < 1e-4, "param " << i);
    }
  }
  SUBCASE("non-finite loss is a divergence") {
    Mlp<double> net({1, 1});
    net.weight(0)(0, 0) = 1.0;
    MatD x(1, 1);
    x(0, 0) = 1.0;
    const std::vector<int> a{0};
    const std::vector<double> y{std::nan("")};
    std::vector<double> g(2);
    CHECK_THROWS_AS(loss_and_grads<double>(net, x, a, y, g), DivergenceError);
  }
}

TEST_CASE("adam update") {
  SUBCASE("zero gradient") {
    std::vector<double> p{0.3, -0.2};
    AdamState<double> adam(2);
    const std::vector<double> g{0.0, 0.0};
    adam_update<double>(p, adam, g);
    CHECK(p[0] == 0.3);
    CHECK(p[1] == -0.2);
    CHECK(adam.t == 1);
  }
  SUBCASE("first step with unit gradient") {
    std::vector<double> p{1.0};
    AdamState<double> adam(1, 1e-4);
    const std::vector<double> g{1.0};
    adam_update<double>(p, adam, g);
    // m_hat = 1, v_hat = 1: step = lr / (1 + eps).
    CHECK(p[0] == doctest::Approx(1.0 - 1e-4 / (1.0 + 1e-8)).epsilon(1e-14));
    CHECK(adam.m[0] == doctest::Approx(0.1));
    CHECK(adam.v[0] == doctest::Approx(0.001));
  }
  SUBCASE("second step by hand") {
    std::vector<double> p{0.0};
    AdamState<double> adam(1, 0.01);
    adam_update<double>(p, adam, std::vector<double>{2.0});
    adam_update<double>(p, adam, std::vector<double>{-1.0});
    const double m = 0.9 * 0.2 + 0.1 * -1.0, v = 0.999 * 0.004 + 0.001 * 1.0;
    const double mh = m / (1 - 0.81), vh = v / (1 - 0.999 * 0.999);
    const double first = -0.01 * 2.0 / (2.0 + 1e-8);
    CHECK(p[0] == doctest::Approx(first - 0.01 * mh / (std::sqrt(vh) + 1e-8)).epsilon(1e-12));
  }
}

TEST_CASE("td targets") {
  // Single linear layer on a one-dimensional input so outputs are hand-computable.
  Mlp<double> online({1, 5}), target({1, 5});
  // online(s') = [1,3,2,0,0] * x, target(s') = [10,20,30,40,50] * x, x = 1
  const double on[] = {1, 3, 2, 0, 0}, tg[] = {10, 20, 30, 40, 50};
  for (int k = 0; k < 5; ++k) {
    online.weight(0)(k, 0) = on[k];
    target.weight(0)(k, 0) = tg[k];
  }
  MatD next(1, 3);
  next << 1.0, 1.0, 1.0;
  const std::vector<double> r{0.5, -0.4, 1.0};
  const std::vector<std::uint8_t> done{0, 1, 0};
  const auto y = td_targets<double>(online, target, next, r, done, 0.9);
  // Online argmax is action 1 while the target's own argmax is 4.
  CHECK(y[0] == doctest::Approx(0.5 + 0.9 * 20));
  CHECK(y[1] == doctest::Approx(-0.4));
  CHECK(y[2] == doctest::Approx(1.0 + 0.9 * 20));
  const auto y0 = td_targets<double>(online, target, next, r, std::vector<std::uint8_t>{0, 0, 0}, 0.0);
  for (int b = 0; b < 3; ++b) CHECK(y0[b] == r[b]);
}

TEST_CASE("action selection") {
  Rng rng(0);
  const std::array<float, 5> q{0, 3, 1, 1, 2};
  CHECK(act(q, 0.0, rng) == 1);
  const std::array<float, 5> tie{2, 2, 0, 0, 0};
  CHECK(act(tie, 0.0, rng) == 0);
  // epsilon 0 consumes nothing
  Rng a(9), b(9);
  act(q, 0.0, a);
  CHECK(a == b);

  std::array<int, 5> counts{};
  Rng r(123);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) ++counts[act(q, 1.0, r)];
  for (int c : counts) CHECK(std::abs(c / double(draws) - 0.2) < 0.01);
}

TEST_CASE("epsilon schedule") {
  EpsilonSchedule s{1.0, 0.02, 1000};
  CHECK(s.at(0) == 1.0);
  CHECK(s.at(500) == doctest::Approx(0.51));
  CHECK(s.at(1000) == 0.02);
  CHECK(s.at(50000) == 0.02);
  DqnAgent agent(3, tiny_config(), 1);
  agent.set_training_horizon(100000);
  CHECK(agent.schedule().horizon == 10000);
  CHECK(agent.epsilon() == 1.0);
  agent.set_learning(false);
  CHECK(agent.epsilon() == 0.0);
}

TEST_CASE("replay buffer is a FIFO ring") {
  ReplayBuffer buf(3, 2);
  for (int i = 0; i < 5; ++i) {
    const std::vector<float> o{float(i), 0}, n{float(i + 1), 0};
    buf.push(o, i % 5, float(i), n, i == 4);
  }
  CHECK(buf.size() == 3);
  for (int i = 0; i < 3; ++i) {
    const auto t = buf.get(static_cast<std::size_t>(i));
    CHECK(t.obs[0] == float(i + 2));
    CHECK(t.reward == float(i + 2));
  }
  CHECK(buf.get(2).done);
  CHECK_THROWS(buf.get(3));

  ReplayBuffer::Batch batch;
  Rng rng(4);
  buf.sample(1000, rng, batch);
  std::array<int, 5> seen{};
  for (float r : batch.rewards) ++seen[static_cast<int>(r)];
  CHECK(seen[0] == 0);
  CHECK(seen[1] == 0);
  for (int k = 2; k < 5; ++k) CHECK(seen[k] > 250);
}

TEST_CASE("target sync interval") {
  DqnConfig c = tiny_config();
  DqnAgent agent(3, c, 7);
  const std::vector<float> o{0.1f, 0.2f, 0.3f}, n{0.3f, 0.2f, 0.1f};
  agent.observe(o, 1, 1.0f, n, false);
  while (agent.updates() < 999) agent.train_step();
  CHECK_FALSE(agent.target() == agent.online());
  agent.train_step();
  CHECK(agent.updates() == 1000);
  CHECK(agent.target() == agent.online());
  const std::vector<float> probe{0.5f, -0.5f, 0.0f};
  CHECK(agent.target().forward(probe) == agent.online().forward(probe));
}

TEST_CASE("frozen agents do not change") {
  DqnAgent agent(3, tiny_config(), 3);
  const std::vector<float> o{0.1f, 0.2f, 0.3f};
  for (int i = 0; i < 10; ++i) agent.observe(o, i % 5, 1.0f, o, false);
  const DqnAgent before = agent;
  agent.set_learning(false);
  for (int i = 0; i < 50; ++i) {
    agent.select_action(o);
    CHECK_FALSE(agent.observe(o, 2, 5.0f, o, false).has_value());
  }
  CHECK(agent.online() == before.online());
  CHECK(agent.target() == before.target());
  CHECK(agent.adam().m == before.adam().m);
  CHECK(agent.replay().size() == before.replay().size());
  CHECK(agent.rng() == before.rng());
  CHECK(agent.steps() == before.steps());
}

TEST_CASE("identical seeds train identically") {
  auto run = [] {
    DqnAgent agent(3, tiny_config(), 99);
    Rng env(1);
    std::vector<float> o{0, 0, 0};
    for (int t = 0; t < 200; ++t) {
      const int a = agent.select_action(o);
      std::vector<float> n{float(env.uniform()), float(a) / 4, 1};
      agent.observe(o, a, float(env.uniform()), n, false);
      o = n;
    }
    return agent;
  };
  const DqnAgent a = run(), b = run();
  CHECK(a.online() == b.online());
  CHECK(a.updates() == 200);
}

TEST_CASE("config validation") {
  DqnConfig c;
  CHECK_NOTHROW(c.validate());
  c.gamma = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.hidden.clear();
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
