#include "fedsim/config.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include "fedsim/error.hpp"

namespace fedsim {
namespace {

constexpr std::size_t kFullBatch = std::numeric_limits<std::size_t>::max();

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_real(const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(d)) {
    throw ConfigError(key + ": expected a real number, got '" + v + "'");
  }
  return d;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  errno = 0;
  const auto n = std::strtoull(v.c_str(), nullptr, 10);
  if (errno == ERANGE) throw ConfigError(key + ": integer out of range");
  return n;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string real_str(double v) {
  char buf[40];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, end);
}

template <typename E, typename Parse>
E parse_enum(const std::string& key, const std::string& v, Parse parse) {
  try {
    return parse(v);
  } catch (const Error& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

struct KeySpec {
  const char* name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<KeySpec>& registry() {
  static const std::vector<KeySpec> keys = {
      {"model.kind",
       [](RunConfig& c, const std::string& v) {
         c.model_kind = parse_enum<ModelKind>("model.kind", v, parse_model_kind);
       },
       [](const RunConfig& c) { return std::string(to_string(c.model_kind)); }},
      {"model.hidden_dim",
       [](RunConfig& c, const std::string& v) { c.hidden_dim = to_u64("model.hidden_dim", v); },
       [](const RunConfig& c) { return std::to_string(c.hidden_dim); }},

      {"data.source",
       [](RunConfig& c, const std::string& v) {
         if (v == "synthetic") c.data.source = DataSource::synthetic;
         else if (v == "csv") c.data.source = DataSource::csv;
         else throw ConfigError("data.source: expected synthetic or csv, got '" + v + "'");
       },
       [](const RunConfig& c) {
         return std::string(c.data.source == DataSource::synthetic ? "synthetic" : "csv");
       }},
      {"data.num_classes",
       [](RunConfig& c, const std::string& v) {
         c.data.synth.num_classes = to_u64("data.num_classes", v);
       },
       [](const RunConfig& c) { return std::to_string(c.data.synth.num_classes); }},
      {"data.input_dim",
       [](RunConfig& c, const std::string& v) { c.data.synth.input_dim = to_u64("data.input_dim", v); },
       [](const RunConfig& c) { return std::to_string(c.data.synth.input_dim); }},
      {"data.n_per_class",
       [](RunConfig& c, const std::string& v) {
         c.data.synth.n_per_class = to_u64("data.n_per_class", v);
       },
       [](const RunConfig& c) { return std::to_string(c.data.synth.n_per_class); }},
      {"data.spread",
       [](RunConfig& c, const std::string& v) { c.data.synth.cluster_spread = to_real("data.spread", v); },
       [](const RunConfig& c) { return real_str(c.data.synth.cluster_spread); }},
      {"data.scale_span",
       [](RunConfig& c, const std::string& v) { c.data.synth.scale_span = to_real("data.scale_span", v); },
       [](const RunConfig& c) { return real_str(c.data.synth.scale_span); }},
      {"data.seed",
       [](RunConfig& c, const std::string& v) {
         if (v == "auto") c.data.seed.reset();
         else c.data.seed = to_u64("data.seed", v);
       },
       [](const RunConfig& c) {
         return c.data.seed ? std::to_string(*c.data.seed) : std::string("auto");
       }},
      {"data.csv_path",
       [](RunConfig& c, const std::string& v) { c.data.csv_path = v; },
       [](const RunConfig& c) { return c.data.csv_path; }},
      {"data.label_column",
       [](RunConfig& c, const std::string& v) { c.data.csv.label_column = v; },
       [](const RunConfig& c) { return c.data.csv.label_column; }},
      {"data.csv_num_classes",
       [](RunConfig& c, const std::string& v) {
         c.data.csv.num_classes = v == "auto" ? 0 : to_u64("data.csv_num_classes", v);
       },
       [](const RunConfig& c) {
         return c.data.csv.num_classes == 0 ? std::string("auto")
                                            : std::to_string(c.data.csv.num_classes);
       }},
      {"data.eval_fraction",
       [](RunConfig& c, const std::string& v) { c.data.eval_fraction = to_real("data.eval_fraction", v); },
       [](const RunConfig& c) { return real_str(c.data.eval_fraction); }},

      {"partition.kind",
       [](RunConfig& c, const std::string& v) {
         if (v == "dirichlet") c.partition.kind = PartitionKind::dirichlet;
         else if (v == "quantity_skew") c.partition.kind = PartitionKind::quantity_skew;
         else throw ConfigError("partition.kind: expected dirichlet or quantity_skew, got '" + v + "'");
       },
       [](const RunConfig& c) {
         return std::string(c.partition.kind == PartitionKind::dirichlet ? "dirichlet" : "quantity_skew");
       }},
      {"partition.alpha",
       [](RunConfig& c, const std::string& v) { c.partition.alpha = to_real("partition.alpha", v); },
       [](const RunConfig& c) { return real_str(c.partition.alpha); }},
      {"partition.zipf_s",
       [](RunConfig& c, const std::string& v) { c.partition.zipf_s = to_real("partition.zipf_s", v); },
       [](const RunConfig& c) { return real_str(c.partition.zipf_s); }},

      {"fl.num_clients",
       [](RunConfig& c, const std::string& v) { c.num_clients = to_u64("fl.num_clients", v); },
       [](const RunConfig& c) { return std::to_string(c.num_clients); }},
      {"fl.sampling_ratio",
       [](RunConfig& c, const std::string& v) { c.sampling_ratio = to_real("fl.sampling_ratio", v); },
       [](const RunConfig& c) { return real_str(c.sampling_ratio); }},
      {"fl.rounds",
       [](RunConfig& c, const std::string& v) { c.rounds = to_u64("fl.rounds", v); },
       [](const RunConfig& c) { return std::to_string(c.rounds); }},
      {"fl.weighting",
       [](RunConfig& c, const std::string& v) {
         c.weighting = parse_enum<Weighting>("fl.weighting", v, parse_weighting);
       },
       [](const RunConfig& c) { return std::string(to_string(c.weighting)); }},
      {"fl.threads",
       [](RunConfig& c, const std::string& v) { c.threads = to_u64("fl.threads", v); },
       [](const RunConfig& c) { return std::to_string(c.threads); }},

      {"client.learning_rate",
       [](RunConfig& c, const std::string& v) {
         c.client.learning_rate = to_real("client.learning_rate", v);
       },
       [](const RunConfig& c) { return real_str(c.client.learning_rate); }},
      {"client.momentum",
       [](RunConfig& c, const std::string& v) { c.client.momentum = to_real("client.momentum", v); },
       [](const RunConfig& c) { return real_str(c.client.momentum); }},
      {"client.local_epochs",
       [](RunConfig& c, const std::string& v) { c.client.local_epochs = to_u64("client.local_epochs", v); },
       [](const RunConfig& c) { return std::to_string(c.client.local_epochs); }},
      {"client.batch_size",
       [](RunConfig& c, const std::string& v) {
         c.client.batch_size = v == "full" ? kFullBatch : to_u64("client.batch_size", v);
       },
       [](const RunConfig& c) {
         return c.client.batch_size == kFullBatch ? std::string("full")
                                                  : std::to_string(c.client.batch_size);
       }},
      {"client.shuffle",
       [](RunConfig& c, const std::string& v) { c.client.shuffle = to_bool("client.shuffle", v); },
       [](const RunConfig& c) { return std::string(c.client.shuffle ? "true" : "false"); }},

      {"server.rule",
       [](RunConfig& c, const std::string& v) {
         c.server_rule = parse_enum<ServerRule>("server.rule", v, parse_server_rule);
       },
       [](const RunConfig& c) { return std::string(to_string(c.server_rule)); }},
      {"server.lr",
       [](RunConfig& c, const std::string& v) { c.server_lr = to_real("server.lr", v); },
       [](const RunConfig& c) { return real_str(c.server_hyper().server_lr); }},
      {"server.beta1",
       [](RunConfig& c, const std::string& v) { c.beta1 = to_real("server.beta1", v); },
       [](const RunConfig& c) { return real_str(c.server_hyper().beta1); }},
      {"server.beta2",
       [](RunConfig& c, const std::string& v) { c.beta2 = to_real("server.beta2", v); },
       [](const RunConfig& c) { return real_str(c.server_hyper().beta2); }},
      {"server.tau",
       [](RunConfig& c, const std::string& v) { c.tau = to_real("server.tau", v); },
       [](const RunConfig& c) { return real_str(c.server_hyper().tau); }},

      {"compress.scheme",
       [](RunConfig& c, const std::string& v) {
         c.compression.kind = parse_enum<SchemeKind>("compress.scheme", v, parse_scheme_kind);
       },
       [](const RunConfig& c) { return std::string(to_string(c.compression.kind)); }},
      {"compress.rank",
       [](RunConfig& c, const std::string& v) { c.compression.rank = to_u64("compress.rank", v); },
       [](const RunConfig& c) { return std::to_string(c.compression.rank); }},
      {"compress.keep_fraction",
       [](RunConfig& c, const std::string& v) {
         c.compression.keep_fraction = to_real("compress.keep_fraction", v);
       },
       [](const RunConfig& c) { return real_str(c.compression.keep_fraction); }},
      {"compress.bits",
       [](RunConfig& c, const std::string& v) {
         const auto b = to_u64("compress.bits", v);
         if (b > 64) throw ConfigError("compress.bits must be in [1, 8]");
         c.compression.bits = static_cast<unsigned>(b);
       },
       [](const RunConfig& c) { return std::to_string(c.compression.bits); }},

      {"net.fraction_3g",
       [](RunConfig& c, const std::string& v) { c.net.fraction_3g = to_real("net.fraction_3g", v); },
       [](const RunConfig& c) { return real_str(c.net.fraction_3g); }},
      {"net.down_3g_mbps",
       [](RunConfig& c, const std::string& v) { c.net.down_3g_mbps = to_real("net.down_3g_mbps", v); },
       [](const RunConfig& c) { return real_str(c.net.down_3g_mbps); }},
      {"net.up_3g_mbps",
       [](RunConfig& c, const std::string& v) { c.net.up_3g_mbps = to_real("net.up_3g_mbps", v); },
       [](const RunConfig& c) { return real_str(c.net.up_3g_mbps); }},
      {"net.down_4g_mbps",
       [](RunConfig& c, const std::string& v) { c.net.down_4g_mbps = to_real("net.down_4g_mbps", v); },
       [](const RunConfig& c) { return real_str(c.net.down_4g_mbps); }},
      {"net.up_4g_mbps",
       [](RunConfig& c, const std::string& v) { c.net.up_4g_mbps = to_real("net.up_4g_mbps", v); },
       [](const RunConfig& c) { return real_str(c.net.up_4g_mbps); }},
      {"net.compute_rate",
       [](RunConfig& c, const std::string& v) { c.net.compute_rate = to_real("net.compute_rate", v); },
       [](const RunConfig& c) { return real_str(c.net.compute_rate); }},
      {"net.availability",
       [](RunConfig& c, const std::string& v) { c.net.availability = to_real("net.availability", v); },
       [](const RunConfig& c) { return real_str(c.net.availability); }},
      {"net.strategy",
       [](RunConfig& c, const std::string& v) {
         c.sampling = parse_enum<SamplingStrategy>("net.strategy", v, parse_sampling_strategy);
       },
       [](const RunConfig& c) { return std::string(to_string(c.sampling)); }},
      {"net.alpha",
       [](RunConfig& c, const std::string& v) { c.adaptive_alpha = to_real("net.alpha", v); },
       [](const RunConfig& c) { return real_str(c.adaptive_alpha); }},

      {"run.seed",
       [](RunConfig& c, const std::string& v) { c.seed = to_u64("run.seed", v); },
       [](const RunConfig& c) { return std::to_string(c.seed); }},
      {"run.out",
       [](RunConfig& c, const std::string& v) { c.out_dir = v; },
       [](const RunConfig& c) { return c.out_dir; }},
      {"compare.target_fraction",
       [](RunConfig& c, const std::string& v) {
         c.target_fraction = to_real("compare.target_fraction", v);
       },
       [](const RunConfig& c) { return real_str(c.target_fraction); }},
  };
  return keys;
}

}  // namespace

ServerHyper RunConfig::server_hyper() const {
  auto h = ServerHyper::defaults_for(server_rule);
  if (server_lr) h.server_lr = *server_lr;
  if (beta1) h.beta1 = *beta1;
  if (beta2) h.beta2 = *beta2;
  if (tau) h.tau = *tau;
  return h;
}

void RunConfig::validate() const {
  if (rounds < 1) throw ConfigError("fl.rounds must be >= 1");
  if (num_clients < 1) throw ConfigError("fl.num_clients must be >= 1");
  if (!(sampling_ratio > 0.0 && sampling_ratio <= 1.0)) {
    throw ConfigError("fl.sampling_ratio must be in (0, 1]");
  }
  if (threads < 1) throw ConfigError("fl.threads must be >= 1");
  if (model_kind == ModelKind::mlp_one_hidden && hidden_dim < 1) {
    throw ConfigError("model.hidden_dim must be >= 1");
  }
  if (!(data.eval_fraction >= 0.0 && data.eval_fraction < 1.0)) {
    throw ConfigError("data.eval_fraction must be in [0, 1)");
  }
  if (data.source == DataSource::synthetic) {
    if (data.synth.num_classes < 2) throw ConfigError("data.num_classes must be >= 2");
    if (data.synth.input_dim < 1) throw ConfigError("data.input_dim must be >= 1");
    if (data.synth.n_per_class < 1) throw ConfigError("data.n_per_class must be >= 1");
    if (!(data.synth.cluster_spread > 0.0)) throw ConfigError("data.spread must be > 0");
    if (!(data.synth.scale_span >= 1.0)) throw ConfigError("data.scale_span must be >= 1");
  } else if (data.csv_path.empty()) {
    throw ConfigError("data.csv_path is required when data.source = csv");
  }
  if (partition.kind == PartitionKind::dirichlet && !(partition.alpha > 0.0)) {
    throw ConfigError("partition.alpha must be > 0");
  }
  if (!(partition.zipf_s >= 0.0)) throw ConfigError("partition.zipf_s must be >= 0");
  if (!(adaptive_alpha >= 0.0)) throw ConfigError("net.alpha must be >= 0");
  if (!(target_fraction > 0.0)) throw ConfigError("compare.target_fraction must be > 0");
  client.validate();
  server_hyper().validate();
  compression.validate();
  net.validate();
}

std::vector<KeyValue> parse_key_values(const std::string& text) {
  std::vector<KeyValue> out;
  std::istringstream in(text);
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    KeyValue kv{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), lineno};
    if (kv.key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    out.push_back(std::move(kv));
  }
  return out;
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& spec : registry()) {
    if (key == spec.name) {
      spec.set(cfg, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

void apply_settings(RunConfig& cfg, const std::vector<KeyValue>& settings) {
  for (const auto& kv : settings) {
    try {
      apply_setting(cfg, kv.key, kv.value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(kv.line) + ": " + e.what());
    }
  }
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  apply_settings(cfg, parse_key_values(text));
  return cfg;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig load_config(const std::filesystem::path& path) {
  try {
    return parse_config(read_text_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string format_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& spec : registry()) {
    out += spec.name;
    out += " = ";
    out += spec.get(cfg);
    out += '\n';
  }
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> names;
  for (const auto& spec : registry()) names.emplace_back(spec.name);
  return names;
}

std::vector<SweepVariant> parse_sweep(const std::string& text) {
  std::vector<SweepVariant> out;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ConfigError("sweep line " + std::to_string(lineno) + ": malformed section header");
      }
      auto name = trim(line.substr(1, line.size() - 2));
      if (!seen.insert(name).second) {
        throw ConfigError("sweep line " + std::to_string(lineno) + ": duplicate variant '" + name + "'");
      }
      out.push_back({std::move(name), {}});
      continue;
    }
    if (out.empty()) {
      throw ConfigError("sweep line " + std::to_string(lineno) + ": setting before any [variant]");
    }
    auto kvs = parse_key_values(line);
    kvs.front().line = lineno;
    out.back().overrides.push_back(std::move(kvs.front()));
  }
  if (out.empty()) throw ConfigError("sweep defines no variants");
  return out;
}

std::vector<SweepVariant> load_sweep(const std::filesystem::path& path) {
  try {
    return parse_sweep(read_text_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace fedsim
