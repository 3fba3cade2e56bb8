#include <gtest/gtest.h>

#include <limits>

#include "fedsim/config.hpp"
#include "fedsim/error.hpp"

using namespace fedsim;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text).validate();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "no error";
}

}  // namespace

TEST(Config, DefaultsFollowTheExperimentSetup) {
  const RunConfig c;
  EXPECT_EQ(c.num_clients, 4u);
  EXPECT_EQ(c.sampling_ratio, 0.5);
  EXPECT_EQ(c.rounds, 100u);
  EXPECT_EQ(c.client.learning_rate, 0.001);
  EXPECT_EQ(c.client.momentum, 0.9);
  EXPECT_EQ(c.server_rule, ServerRule::fedavg);
  EXPECT_EQ(c.weighting, Weighting::uniform);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, ParsesEveryKindOfValue) {
  const auto c = parse_config(R"(
# comment line
model.kind = mlp          # trailing comment
model.hidden_dim = 16
data.num_classes = 3
data.spread = 0.5
data.seed = 42
fl.num_clients = 8
fl.weighting = by_examples
client.batch_size = full
client.shuffle = false
server.rule = fedyogi
server.tau = 1e-2
compress.scheme = quantize
compress.bits = 2
net.strategy = speed_adaptive
run.seed = 9
)");
  EXPECT_EQ(c.model_kind, ModelKind::mlp_one_hidden);
  EXPECT_EQ(c.hidden_dim, 16u);
  EXPECT_EQ(c.data.synth.num_classes, 3u);
  EXPECT_EQ(c.data.synth.cluster_spread, 0.5);
  EXPECT_EQ(c.data.seed, 42u);
  EXPECT_EQ(c.num_clients, 8u);
  EXPECT_EQ(c.weighting, Weighting::by_examples);
  EXPECT_EQ(c.client.batch_size, std::numeric_limits<std::size_t>::max());
  EXPECT_FALSE(c.client.shuffle);
  EXPECT_EQ(c.server_rule, ServerRule::fedyogi);
  EXPECT_EQ(c.server_hyper().tau, 1e-2);
  EXPECT_EQ(c.server_hyper().server_lr, 0.01);
  EXPECT_EQ(c.compression.kind, SchemeKind::quantize);
  EXPECT_EQ(c.compression.bits, 2u);
  EXPECT_EQ(c.sampling, SamplingStrategy::speed_adaptive);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, UnknownKeyIsAnErrorWithLine) {
  const auto msg = error_of("fl.rounds = 3\nfl.clients = 4\n");
  EXPECT_NE(msg.find("unknown config key 'fl.clients'"), std::string::npos);
  EXPECT_NE(msg.find("line 2"), std::string::npos);
}

TEST(Config, MalformedValues) {
  EXPECT_NE(error_of("fl.rounds = ten").find("fl.rounds"), std::string::npos);
  EXPECT_NE(error_of("fl.rounds = -1").find("fl.rounds"), std::string::npos);
  EXPECT_NE(error_of("fl.sampling_ratio = 0.5x").find("fl.sampling_ratio"), std::string::npos);
  EXPECT_NE(error_of("client.shuffle = maybe").find("client.shuffle"), std::string::npos);
  EXPECT_NE(error_of("server.rule = sgd").find("server.rule"), std::string::npos);
  EXPECT_NE(error_of("just some words").find("line 1"), std::string::npos);
}

TEST(Config, RangeValidation) {
  EXPECT_NE(error_of("fl.rounds = 0").find("fl.rounds"), std::string::npos);
  EXPECT_NE(error_of("fl.sampling_ratio = 0").find("sampling_ratio"), std::string::npos);
  EXPECT_NE(error_of("fl.num_clients = 0").find("num_clients"), std::string::npos);
  EXPECT_NE(error_of("client.momentum = 1").find("momentum"), std::string::npos);
  EXPECT_NE(error_of("compress.bits = 9").find("bits"), std::string::npos);
  EXPECT_NE(error_of("compress.keep_fraction = 0").find("keep_fraction"), std::string::npos);
  EXPECT_NE(error_of("server.beta2 = 1.0").find("beta2"), std::string::npos);
  EXPECT_NE(error_of("net.fraction_3g = 2").find("fraction_3g"), std::string::npos);
  EXPECT_NE(error_of("data.source = csv").find("csv_path"), std::string::npos);
  EXPECT_NE(error_of("data.eval_fraction = 1").find("eval_fraction"), std::string::npos);
}

TEST(Config, FormatRoundTrips) {
  auto c = parse_config("server.rule = fedadam\nclient.batch_size = full\ndata.scale_span = 1000\n"
                        "net.alpha = 1.5\nrun.out = results/x\n");
  const auto text = format_config(c);
  const auto back = parse_config(text);
  EXPECT_EQ(format_config(back), text);
  // Every registered key appears exactly once.
  for (const auto& key : config_keys()) {
    EXPECT_NE(text.find(key + " = "), std::string::npos) << key;
  }
  EXPECT_EQ(back.server_hyper().server_lr, c.server_hyper().server_lr);
  EXPECT_EQ(back.data.synth.scale_span, 1000.0);
  EXPECT_EQ(back.out_dir, "results/x");
}

TEST(Sweep, ParsesSections) {
  const auto sweep = parse_sweep("# rules\n[a]\nserver.rule = fedavg\n\n[b]\nserver.rule = fedadam\nserver.lr = 0.1\n");
  ASSERT_EQ(sweep.size(), 2u);
  EXPECT_EQ(sweep[0].name, "a");
  EXPECT_EQ(sweep[1].overrides.size(), 2u);
  EXPECT_EQ(sweep[1].overrides[1].key, "server.lr");
  EXPECT_EQ(sweep[1].overrides[1].line, 7u);

  RunConfig base;
  apply_settings(base, sweep[1].overrides);
  EXPECT_EQ(base.server_hyper().server_lr, 0.1);
}

TEST(Sweep, Errors) {
  EXPECT_THROW(parse_sweep(""), ConfigError);
  EXPECT_THROW(parse_sweep("server.rule = fedavg\n"), ConfigError);
  EXPECT_THROW(parse_sweep("[a]\n[a]\n"), ConfigError);
  EXPECT_THROW(parse_sweep("[a\n"), ConfigError);
}

TEST(Config, MissingFile) {
  EXPECT_THROW(load_config("/nonexistent/fedsim.cfg"), ConfigError);
}
