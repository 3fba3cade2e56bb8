#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fedsim/client.hpp"
#include "fedsim/compressor.hpp"
#include "fedsim/data.hpp"
#include "fedsim/model.hpp"
#include "fedsim/netsim.hpp"
#include "fedsim/server.hpp"

namespace fedsim {

enum class DataSource { synthetic, csv };
enum class PartitionKind { dirichlet, quantity_skew };

struct DataConfig {
  DataSource source = DataSource::synthetic;
  SynthSpec synth;
  // Generator seed; derived from the master seed when unset.
  std::optional<std::uint64_t> seed;
  std::string csv_path;
  CsvSchema csv;
  // Held-out share of the dataset, never given to clients. 0 evaluates on
  // the training rows.
  double eval_fraction = 0.2;
};

struct PartitionConfig {
  PartitionKind kind = PartitionKind::dirichlet;
  double alpha = 0.5;
  double zipf_s = 0.0;
};

struct RunConfig {
  ModelKind model_kind = ModelKind::logistic_regression;
  std::size_t hidden_dim = 32;
  DataConfig data;
  PartitionConfig partition;

  std::size_t num_clients = 4;
  double sampling_ratio = 0.5;
  std::size_t rounds = 100;
  Weighting weighting = Weighting::uniform;
  std::size_t threads = 1;

  ClientConfig client;

  ServerRule server_rule = ServerRule::fedavg;
  // Unset fields take the rule's defaults (ServerHyper::defaults_for).
  std::optional<double> server_lr;
  std::optional<double> beta1;
  std::optional<double> beta2;
  std::optional<double> tau;

  CompressionScheme compression;

  NetworkMix net;
  SamplingStrategy sampling = SamplingStrategy::uniform;
  double adaptive_alpha = 2.0;

  std::uint64_t seed = 1;
  std::string out_dir;
  // compare: target loss is this fraction of the initial training loss.
  double target_fraction = 0.5;

  ServerHyper server_hyper() const;
  // Throws ConfigError describing the first invalid field.
  void validate() const;
};

// Parsed `key = value` lines; '#' starts a comment.
struct KeyValue {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

std::vector<KeyValue> parse_key_values(const std::string& text);

// Applies one dotted key. Unknown keys and malformed values throw ConfigError.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);
void apply_settings(RunConfig& cfg, const std::vector<KeyValue>& settings);

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

// Every key with its resolved value, in canonical order, as parseable text.
std::string format_config(const RunConfig& cfg);

// Names of every accepted key, in canonical order.
std::vector<std::string> config_keys();

// Sweep file: `[variant-name]` sections, each followed by override lines.
struct SweepVariant {
  std::string name;
  std::vector<KeyValue> overrides;
};

std::vector<SweepVariant> parse_sweep(const std::string& text);
std::vector<SweepVariant> load_sweep(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace fedsim
