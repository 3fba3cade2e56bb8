#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "fedsim/error.hpp"
#include "fedsim/netsim.hpp"

using namespace fedsim;

namespace {

NetworkProfile profile(double down, double up = 10.0, std::size_t id = 0) {
  NetworkProfile p;
  p.client_id = id;
  p.down_mbps = down;
  p.up_mbps = up;
  return p;
}

}  // namespace

TEST(Profiles, DegenerateMixes) {
  NetworkMix mix;
  mix.fraction_3g = 0.0;
  for (const auto& p : assign_profiles(50, mix, 1)) EXPECT_EQ(p.down_mbps, 40.0);
  mix.fraction_3g = 1.0;
  for (const auto& p : assign_profiles(50, mix, 1)) {
    EXPECT_EQ(p.down_mbps, 7.0);
    EXPECT_EQ(p.up_mbps, 1.75);
    EXPECT_EQ(p.compute_rate, 1e4);
  }
}

TEST(Profiles, SeededAndMixed) {
  const NetworkMix mix;
  const auto a = assign_profiles(200, mix, 5);
  const auto b = assign_profiles(200, mix, 5);
  std::size_t n3g = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].down_mbps, b[i].down_mbps);
    EXPECT_EQ(a[i].client_id, i);
    n3g += a[i].down_mbps == 7.0;
  }
  EXPECT_GT(n3g, 60u);
  EXPECT_LT(n3g, 140u);
}

TEST(RoundTime, WorkedExamples) {
  const std::vector<Participation> slow{{profile(7.0), 875000, 0, 0}};
  EXPECT_EQ(round_time(slow).clients[0].download_s, 1.0);
  EXPECT_EQ(round_time(slow).round_wall_s, 1.0);
  const std::vector<Participation> fast{{profile(40.0), 875000, 0, 0}};
  EXPECT_EQ(round_time(fast).clients[0].download_s, 0.175);

  // Compute and upload terms.
  const std::vector<Participation> full{{profile(40.0, 10.0), 0, 1250000, 5000}};
  const auto t = round_time(full);
  EXPECT_EQ(t.clients[0].compute_s, 0.5);
  EXPECT_EQ(t.clients[0].upload_s, 1.0);
  EXPECT_EQ(t.clients[0].total_s, 1.5);
  EXPECT_EQ(t.bytes_up, 1250000u);
}

TEST(RoundTime, BarrierIsSlowestClient) {
  // Totals 1.0 s and 0.3 s.
  const std::vector<Participation> two{{profile(7.0, 10.0, 0), 875000, 0, 0},
                                       {profile(40.0, 10.0, 1), 0, 0, 3000}};
  const auto t = round_time(two);
  EXPECT_EQ(t.clients[1].total_s, 0.3);
  EXPECT_EQ(t.round_wall_s, 1.0);
  EXPECT_EQ(t.bytes_down, 875000u);
  std::vector<Participation> none;
  EXPECT_THROW(round_time(none), DomainError);
}

TEST(RoundTimeProperty, MonotoneInPayloadAndBandwidth) {
  Rng rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Participation> ps;
    const std::size_t n = 1 + rng() % 6;
    for (std::size_t i = 0; i < n; ++i) {
      ps.push_back({profile(1 + uniform01(rng) * 50, 1 + uniform01(rng) * 10, i), rng() % 100000,
                    rng() % 100000, rng() % 1000});
    }
    const double base = round_time(ps).round_wall_s;
    auto bigger = ps;
    bigger[rng() % n].update_bytes_up += 1 + rng() % 1000;
    EXPECT_GE(round_time(bigger).round_wall_s, base);
    auto slower = ps;
    slower[rng() % n].profile.down_mbps *= 0.5;
    EXPECT_GE(round_time(slower).round_wall_s, base);
    for (const auto& c : round_time(ps).clients) {
      EXPECT_GE(c.download_s, 0.0);
      EXPECT_GE(c.compute_s, 0.0);
      EXPECT_GE(c.upload_s, 0.0);
    }
  }
}

TEST(Sampling, CountsAndFullParticipation) {
  EXPECT_EQ(clients_per_round(4, 0.5), 2u);
  EXPECT_EQ(clients_per_round(10, 0.01), 1u);
  EXPECT_EQ(clients_per_round(3, 1.0), 3u);
  EXPECT_THROW(clients_per_round(3, 0.0), ConfigError);
  EXPECT_THROW(clients_per_round(3, 1.1), ConfigError);

  Rng rng(1);
  const std::vector<std::size_t> hist(6, 0);
  for (auto s : {SamplingStrategy::uniform, SamplingStrategy::speed_adaptive}) {
    EXPECT_EQ(sample_clients(s, 6, 1.0, hist, 2.0, rng), (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));
  }
  for (int t = 0; t < 100; ++t) {
    const auto ids = sample_clients(SamplingStrategy::uniform, 4, 0.5, {}, 2.0, rng);
    ASSERT_EQ(ids.size(), 2u);
    EXPECT_LT(ids[0], ids[1]);
    EXPECT_LT(ids[1], 4u);
  }
}

TEST(Sampling, UniformIsUniform) {
  Rng rng(2);
  std::vector<int> hits(5, 0);
  const int draws = 20000;
  for (int t = 0; t < draws; ++t) {
    for (auto id : sample_clients(SamplingStrategy::uniform, 5, 0.4, {}, 2.0, rng)) ++hits[id];
  }
  for (int h : hits) EXPECT_NEAR(h / double(draws), 0.4, 0.02);
}

TEST(Sampling, SpeedAdaptiveWeights) {
  const std::vector<std::size_t> equal(4, 10);
  for (double w : speed_adaptive_weights(equal, 2.0)) EXPECT_EQ(w, 1.0);
  const std::vector<std::size_t> hist{99, 0, 99};
  const auto w = speed_adaptive_weights(hist, 2.0);
  EXPECT_EQ(w[0], 1.0);
  EXPECT_DOUBLE_EQ(w[1], (1.0 + 99.0 / 100.0) * (1.0 + 99.0 / 100.0));
  EXPECT_EQ(speed_adaptive_weights(hist, 0.0)[1], 1.0);
  Rng rng(1);
  EXPECT_THROW(sample_clients(SamplingStrategy::speed_adaptive, 4, 0.5, hist, 2.0, rng), DimensionError);
}

TEST(Sampling, SpeedAdaptiveFavorsLaggard) {
  Rng rng(4);
  std::vector<std::size_t> hist(8, 500);
  hist[5] = 0;
  int adaptive = 0, uniform = 0;
  for (int t = 0; t < 4000; ++t) {
    const auto a = sample_clients(SamplingStrategy::speed_adaptive, 8, 0.25, hist, 2.0, rng);
    const auto u = sample_clients(SamplingStrategy::uniform, 8, 0.25, hist, 2.0, rng);
    adaptive += std::count(a.begin(), a.end(), 5u);
    uniform += std::count(u.begin(), u.end(), 5u);
  }
  EXPECT_GT(adaptive, uniform + 500);
}

TEST(NetworkMix, Validation) {
  NetworkMix m;
  m.fraction_3g = 1.5;
  EXPECT_THROW(m.validate(), ConfigError);
  m = {};
  m.up_3g_mbps = 0.0;
  EXPECT_THROW(m.validate(), ConfigError);
  m = {};
  m.availability = 0.0;
  EXPECT_THROW(m.validate(), ConfigError);
  EXPECT_THROW(parse_sampling_strategy("fastest"), ConfigError);
}
