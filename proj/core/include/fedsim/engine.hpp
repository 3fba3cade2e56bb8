#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fedsim/client.hpp"
#include "fedsim/config.hpp"
#include "fedsim/data.hpp"
#include "fedsim/model.hpp"
#include "fedsim/netsim.hpp"
#include "fedsim/server.hpp"

namespace fedsim {

struct RoundRecord {
  std::size_t round = 0;  // 1-based
  double sim_seconds = 0.0;  // cumulative
  double train_loss = 0.0;
  double eval_acc = 0.0;
  std::size_t bytes_up = 0;    // cumulative
  std::size_t bytes_down = 0;  // cumulative
  std::size_t participants = 0;
};

struct MetricsLog {
  double initial_train_loss = 0.0;
  double initial_eval_acc = 0.0;
  std::vector<RoundRecord> rounds;
};

// Header plus one row per round; reals printed with 9 significant digits.
void write_metrics_csv(const MetricsLog& log, std::ostream& out);
std::string metrics_csv(const MetricsLog& log);

// Everything a round touched, for tests and tooling that need to look inside.
struct RoundTrace {
  std::size_t round = 0;  // 0-based
  std::vector<std::size_t> sampled;
  std::vector<std::size_t> participants;
  std::vector<ClientUpdate> raw_updates;      // before encoding
  std::vector<ClientUpdate> decoded_updates;  // what the server aggregated
  std::vector<std::size_t> update_bytes;
  std::size_t model_bytes = 0;
  ParamVector params_before = ParamVector::zeros(1);
  ParamVector params_after = ParamVector::zeros(1);
  RoundTiming timing;
};

struct RunHooks {
  std::function<void(const RoundTrace&)> on_round;
};

// Dataset split, shards and model resolved from a config and its seed.
struct Setup {
  ModelSpec spec;
  Dataset train;
  Dataset eval;
  std::vector<Shard> shards;
  ParamVector initial_params = ParamVector::zeros(1);
  std::vector<NetworkProfile> profiles;
};

Setup prepare(const RunConfig& cfg);

struct RunResult {
  MetricsLog log;
  ParamVector final_params = ParamVector::zeros(1);
};

// Runs the full round loop: sample, broadcast, local training, encode, decode,
// aggregate, server step, evaluate. Deterministic in cfg (thread count
// included). Throws ConfigError before round 0 and DivergenceError with the
// round number if training blows up.
RunResult run(const RunConfig& cfg, const RunHooks* hooks = nullptr);
RunResult run(const RunConfig& cfg, const Setup& setup, const RunHooks* hooks = nullptr);

// Bytes sent to each participant for the global model (identity encoding).
std::size_t model_serialized_bytes(std::size_t param_dim);

struct CompareRow {
  std::string name;
  bool ok = false;
  std::string error;
  double target_loss = 0.0;
  std::optional<std::size_t> rounds_to_target;
  double final_train_loss = 0.0;
  double final_eval_acc = 0.0;
  MetricsLog log;
};

// First round whose train_loss is at or below target, if any.
std::optional<std::size_t> rounds_to_target(const MetricsLog& log, double target);

// Runs each variant (base plus its overrides). A failing variant is
// reported in its row and does not stop the others.
std::vector<CompareRow> compare(const RunConfig& base, const std::vector<SweepVariant>& sweep);

void write_compare_csv(const std::vector<CompareRow>& rows, std::ostream& out);

}  // namespace fedsim
