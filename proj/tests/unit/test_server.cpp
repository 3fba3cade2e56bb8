#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fedsim/error.hpp"
#include "fedsim/server.hpp"

using namespace fedsim;

namespace {

ClientUpdate update(std::size_t id, ParamVector delta, std::size_t n = 1) {
  ClientUpdate u;
  u.client_id = id;
  u.delta = std::move(delta);
  u.n_examples = n;
  return u;
}

ServerDelta single(ParamVector d) {
  return {std::move(d), 1, 1};
}

// One coordinate of each rule, written independently of the library.
struct ScalarOracle {
  ServerRule rule;
  double lr, b1, b2, tau;
  double x, m, v;

  void step(double d) {
    switch (rule) {
      case ServerRule::fedavg:
        x = x - lr * d;
        return;
      case ServerRule::fedavgm:
        m = b1 * m + d;
        x = x - lr * m;
        return;
      case ServerRule::fedadagrad:
        v = v + d * d;
        break;
      case ServerRule::fedadam:
        v = b2 * v + (1 - b2) * d * d;
        break;
      case ServerRule::fedyogi: {
        const double diff = v - d * d;
        const double sgn = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
        v = v - (1 - b2) * (d * d) * sgn;
        break;
      }
    }
    m = b1 * m + (1 - b1) * d;
    x = x - lr * m / (std::sqrt(v) + tau);
  }
};

const ServerRule kRules[] = {ServerRule::fedavg, ServerRule::fedavgm, ServerRule::fedadagrad,
                             ServerRule::fedadam, ServerRule::fedyogi};

}  // namespace

TEST(Aggregate, UniformAndWeighted) {
  std::vector<ClientUpdate> ups{update(2, ParamVector{3.0, 0.0}, 3),
                                update(0, ParamVector{1.0, 4.0}, 1)};
  const auto u = aggregate(ups, Weighting::uniform);
  EXPECT_EQ(u.delta, (ParamVector{2.0, 2.0}));
  EXPECT_EQ(u.num_updates, 2u);
  EXPECT_EQ(u.total_examples, 4u);
  const auto w = aggregate(ups, Weighting::by_examples);
  EXPECT_EQ(w.delta, (ParamVector{2.5, 1.0}));
}

TEST(Aggregate, OrderInsensitiveBitwise) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<ClientUpdate> ups;
  for (std::size_t id = 0; id < 9; ++id) {
    std::vector<double> d(50);
    for (auto& v : d) v = n(rng) * std::pow(10.0, static_cast<double>(id % 5) - 2);
    ups.push_back(update(id, ParamVector(d), 1 + id));
  }
  const auto ref = aggregate(ups, Weighting::uniform);
  const auto ref_w = aggregate(ups, Weighting::by_examples);
  for (int t = 0; t < 20; ++t) {
    std::shuffle(ups.begin(), ups.end(), rng);
    EXPECT_EQ(aggregate(ups, Weighting::uniform).delta, ref.delta);
    EXPECT_EQ(aggregate(ups, Weighting::by_examples).delta, ref_w.delta);
  }
}

TEST(Aggregate, Errors) {
  std::vector<ClientUpdate> none;
  EXPECT_THROW(aggregate(none, Weighting::uniform), DomainError);
  std::vector<ClientUpdate> mixed{update(0, ParamVector::zeros(2)), update(1, ParamVector::zeros(3))};
  EXPECT_THROW(aggregate(mixed, Weighting::uniform), DimensionError);
}

TEST(ServerStep, AveragingFixedPoint) {
  // Clients at [0,2] and [2,0] around x=[1,1]: deltas cancel.
  std::vector<ClientUpdate> ups{update(0, ParamVector{1.0, -1.0}), update(1, ParamVector{-1.0, 1.0})};
  const auto s0 = make_server_state(ServerRule::fedavg, ParamVector{1.0, 1.0},
                                    ServerHyper::defaults_for(ServerRule::fedavg));
  const auto s1 = server_step(s0, aggregate(ups, Weighting::uniform));
  EXPECT_EQ(s1.params, (ParamVector{1.0, 1.0}));
  EXPECT_EQ(s1.round, 1u);
  EXPECT_EQ(s0.round, 0u);
}

TEST(ServerStep, AdagradWalkThrough) {
  ServerOptimizerState s;
  s.rule = ServerRule::fedadagrad;
  s.hyper = {0.1, 0.9, 0.99, 1e-3};
  s.params = ParamVector{0.0};
  s.momentum = ParamVector{0.0};
  s.second_moment = ParamVector{0.0};
  const auto next = server_step(s, single(ParamVector{1.0}));
  EXPECT_DOUBLE_EQ(next.momentum[0], 0.1);
  EXPECT_DOUBLE_EQ(next.second_moment[0], 1.0);
  EXPECT_DOUBLE_EQ(next.params[0], -0.1 * 0.1 / 1.001);
}

TEST(ServerStep, YogiSignBranches) {
  auto state = [](double v) {
    ServerOptimizerState s;
    s.rule = ServerRule::fedyogi;
    s.hyper = {0.01, 0.9, 0.99, 1e-3};
    s.params = ParamVector{0.0};
    s.momentum = ParamVector{0.0};
    s.second_moment = ParamVector{v};
    return s;
  };
  // v == d^2: sign term 0, v unchanged.
  EXPECT_EQ(server_step(state(4.0), single(ParamVector{2.0})).second_moment[0], 4.0);
  // v < d^2: v grows by (1 - b2) d^2.
  EXPECT_DOUBLE_EQ(server_step(state(1.0), single(ParamVector{2.0})).second_moment[0], 1.0 + 0.01 * 4.0);
  // v > d^2: v shrinks by (1 - b2) d^2.
  EXPECT_DOUBLE_EQ(server_step(state(9.0), single(ParamVector{2.0})).second_moment[0], 9.0 - 0.01 * 4.0);
}

TEST(ServerStep, MatchesScalarOracleOverLongRuns) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 0.3);
  for (auto rule : kRules) {
    const auto h = ServerHyper::defaults_for(rule);
    auto s = make_server_state(rule, ParamVector{0.5, -0.25, 2.0}, h);
    std::vector<ScalarOracle> ref;
    for (std::size_t i = 0; i < 3; ++i) {
      ref.push_back({rule, h.server_lr, h.beta1, h.beta2, h.tau, s.params[i], 0.0, s.second_moment[i]});
    }
    for (int r = 0; r < 200; ++r) {
      std::vector<double> d(3);
      for (auto& v : d) v = n(rng);
      s = server_step(s, single(ParamVector(d)));
      for (std::size_t i = 0; i < 3; ++i) {
        ref[i].step(d[i]);
        ASSERT_EQ(s.params[i], ref[i].x) << to_string(rule) << " round " << r;
        ASSERT_EQ(s.second_moment[i], ref[i].v) << to_string(rule) << " round " << r;
      }
    }
    EXPECT_EQ(s.round, 200u);
  }
}

TEST(ServerStepProperty, SecondMomentInvariants) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto rule : {ServerRule::fedadagrad, ServerRule::fedadam, ServerRule::fedyogi}) {
    auto s = make_server_state(rule, ParamVector::zeros(8), ServerHyper::defaults_for(rule));
    EXPECT_EQ(s.second_moment, ParamVector::filled(8, 1e-6));
    for (int r = 0; r < 300; ++r) {
      std::vector<double> d(8);
      for (auto& v : d) v = n(rng) * (r % 7 == 0 ? 10.0 : 0.01);
      const auto prev = s.second_moment;
      s = server_step(s, single(ParamVector(d)));
      for (std::size_t i = 0; i < 8; ++i) {
        EXPECT_GE(s.second_moment[i], 0.0);
        EXPECT_GT(std::sqrt(std::max(s.second_moment[i], 0.0)) + s.hyper.tau, 0.0);
        if (rule == ServerRule::fedadagrad) EXPECT_GE(s.second_moment[i], prev[i]);
      }
    }
  }
}

TEST(ServerStepProperty, FedavgIgnoresMomentsAndZeroDeltas) {
  auto s = make_server_state(ServerRule::fedavg, ParamVector{1.0, -2.0}, ServerHyper{});
  const auto moved = server_step(s, single(ParamVector{0.0, 0.0}));
  EXPECT_EQ(moved.params, s.params);
  const auto after = server_step(s, single(ParamVector{0.3, 0.1}));
  EXPECT_EQ(after.momentum, ParamVector::zeros(2));
  EXPECT_EQ(after.second_moment, ParamVector::zeros(2));
}

TEST(ServerStepProperty, MomentumDecaysGeometricallyOnZeroDeltas) {
  for (auto rule : {ServerRule::fedavgm, ServerRule::fedadam}) {
    auto s = make_server_state(rule, ParamVector{0.0}, ServerHyper::defaults_for(rule));
    s = server_step(s, single(ParamVector{1.0}));
    double prev_move = 0.0;
    for (int k = 0; k < 10; ++k) {
      const auto next = server_step(s, single(ParamVector{0.0}));
      const double move = std::abs(next.params[0] - s.params[0]);
      if (k > 0 && rule == ServerRule::fedavgm) EXPECT_NEAR(move / prev_move, 0.9, 1e-12);
      if (k > 0) EXPECT_LT(move, prev_move);
      prev_move = move;
      s = next;
    }
  }
}

TEST(ServerStepProperty, FedavgScaleCovariance) {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> n(0.0, 1.0);
  for (double c : {0.5, 2.0, 4.0}) {
    std::vector<double> x(6), d(6);
    for (auto& v : x) v = n(rng);
    for (auto& v : d) v = n(rng);
    ServerHyper h;
    h.server_lr = 0.75;
    const auto a = server_step(make_server_state(ServerRule::fedavg, ParamVector(x), h),
                               single(scale(c, ParamVector(d))));
    h.server_lr = 0.75 * c;
    const auto b = server_step(make_server_state(ServerRule::fedavg, ParamVector(x), h),
                               single(ParamVector(d)));
    EXPECT_EQ(a.params, b.params);
  }
}

TEST(ServerStep, DivergenceNamesRuleAndRound) {
  ServerHyper h;
  h.server_lr = 1e300;
  auto s = make_server_state(ServerRule::fedavgm, ParamVector{0.0}, h);
  s = server_step(s, single(ParamVector{1.0}));
  try {
    (void)server_step(s, single(ParamVector{1e10}));
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("fedavgm"), std::string::npos);
    EXPECT_NE(msg.find("round 1"), std::string::npos);
  }
}

TEST(ServerHyper, DefaultsAndValidation) {
  EXPECT_EQ(ServerHyper::defaults_for(ServerRule::fedavg).server_lr, 1.0);
  EXPECT_EQ(ServerHyper::defaults_for(ServerRule::fedyogi).server_lr, 0.01);
  ServerHyper bad;
  bad.tau = 0.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = {};
  bad.beta2 = 1.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  EXPECT_THROW(parse_server_rule("fedprox"), ConfigError);
}
