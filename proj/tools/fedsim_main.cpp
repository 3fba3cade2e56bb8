// fedsim command-line driver.
//
//   fedsim run      --config <file> [--seed N] [--out <dir>] [--threads T]
//   fedsim compare  --config <file> --sweep <file> [--out <dir>]
//   fedsim gen-data --spec <file> --out <csv>
//   fedsim inspect  --config <file>
//
// Exit codes: 0 success, 2 configuration or input error, 3 divergence,
// 1 anything else.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "fedsim/compressor.hpp"
#include "fedsim/config.hpp"
#include "fedsim/engine.hpp"
#include "fedsim/error.hpp"

namespace fs = std::filesystem;
using namespace fedsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
}

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> threads;
};

int cmd_run(const RunArgs& a) {
  auto cfg = load_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (!a.out.empty()) cfg.out_dir = a.out;
  if (a.threads) cfg.threads = *a.threads;
  cfg.validate();

  const auto res = run(cfg);
  const auto csv = metrics_csv(res.log);
  if (cfg.out_dir.empty()) {
    std::cout << csv;
  } else {
    const fs::path dir(cfg.out_dir);
    write_file(dir / "metrics.csv", csv);
    write_file(dir / "config.resolved", format_config(cfg));
    const auto& last = res.log.rounds.back();
    std::fprintf(stderr, "%zu rounds, final train_loss %.6g, eval_acc %.4f -> %s\n",
                 last.round, last.train_loss, last.eval_acc, (dir / "metrics.csv").c_str());
  }
  return kExitOk;
}

struct CompareArgs {
  std::string config;
  std::string sweep;
  std::string out;
  std::optional<std::size_t> threads;
};

int cmd_compare(const CompareArgs& a) {
  auto base = load_config(a.config);
  if (a.threads) base.threads = *a.threads;
  const auto sweep = load_sweep(a.sweep);
  // Reject malformed variants before spending time on any run.
  for (const auto& v : sweep) {
    RunConfig cfg = base;
    try {
      apply_settings(cfg, v.overrides);
      cfg.validate();
    } catch (const ConfigError& e) {
      throw ConfigError("variant [" + v.name + "]: " + e.what());
    }
  }

  const auto rows = compare(base, sweep);
  write_compare_csv(rows, std::cout);
  if (!a.out.empty()) {
    const fs::path dir(a.out);
    std::ostringstream ss;
    write_compare_csv(rows, ss);
    write_file(dir / "compare.csv", ss.str());
    for (const auto& row : rows) {
      if (row.ok) write_file(dir / (row.name + ".metrics.csv"), metrics_csv(row.log));
    }
  }
  for (const auto& row : rows) {
    if (!row.ok) std::fprintf(stderr, "variant %s failed: %s\n", row.name.c_str(), row.error.c_str());
  }
  return kExitOk;
}

int cmd_gen_data(const std::string& spec_path, const std::string& out) {
  const auto cfg = load_config(spec_path);
  auto synth = cfg.data.synth;
  synth.seed = cfg.data.seed.value_or(derive_seed(cfg.seed, "data"));
  const auto data = synth_generate(synth);
  const fs::path path(out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_csv(data, path);
  std::fprintf(stderr, "wrote %zu rows x %zu features, %zu classes -> %s\n", data.size(),
               data.input_dim, data.num_classes, path.c_str());
  return kExitOk;
}

int cmd_inspect(const std::string& config_path) {
  const auto cfg = load_config(config_path);
  const auto setup = prepare(cfg);
  std::cout << format_config(cfg);

  const std::size_t dim = setup.spec.param_dim();
  std::printf("\n# model %s, %zu parameters\n", to_string(setup.spec.kind), dim);
  for (const auto& slot : setup.spec.layout) {
    std::printf("#   %-14s %zu x %zu at %zu\n", slot.name.c_str(), slot.rows, slot.cols, slot.offset);
  }
  std::printf("# data: %zu train rows, %zu eval rows, %zu features, %zu classes\n",
              setup.train.size(), setup.eval.size(), setup.train.input_dim,
              setup.train.num_classes);
  std::printf("# shards:");
  for (const auto& s : setup.shards) std::printf(" %zu", s.size());
  std::printf("\n# clients per round: %zu of %zu\n",
              clients_per_round(cfg.num_clients, cfg.sampling_ratio), cfg.num_clients);

  std::size_t n3g = 0;
  for (const auto& p : setup.profiles) n3g += p.down_mbps == cfg.net.down_3g_mbps ? 1 : 0;
  std::printf("# links: %zu on 3G, %zu on 4G\n", n3g, setup.profiles.size() - n3g);

  const auto delta = ParamVector::filled(dim, 1e-3);
  const Codec codec(cfg.compression, 0);
  const auto enc = codec.encode(delta, setup.spec.layout, 0, 0, 1);
  std::printf("# model download: %zu bytes; update upload (%s): %zu bytes (%.1f%%)\n",
              model_serialized_bytes(dim), cfg.compression.describe().c_str(), enc.wire_bytes,
              100.0 * static_cast<double>(enc.wire_bytes) /
                  static_cast<double>(model_serialized_bytes(dim)));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated learning simulator"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "Run one simulation and emit per-round metrics");
  run_cmd->add_option("--config", run_args.config, "Config file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", run_args.seed, "Override run.seed");
  run_cmd->add_option("--out", run_args.out, "Output directory (default: CSV to stdout)");
  run_cmd->add_option("--threads", run_args.threads, "Client worker threads");

  CompareArgs cmp_args;
  auto* cmp_cmd = app.add_subcommand("compare", "Run sweep variants and report rounds-to-target");
  cmp_cmd->add_option("--config", cmp_args.config, "Base config file")->required()->check(CLI::ExistingFile);
  cmp_cmd->add_option("--sweep", cmp_args.sweep, "Sweep file")->required()->check(CLI::ExistingFile);
  cmp_cmd->add_option("--out", cmp_args.out, "Directory for compare.csv and per-variant metrics");
  cmp_cmd->add_option("--threads", cmp_args.threads, "Client worker threads");

  std::string gen_spec;
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen-data", "Write a synthetic dataset as CSV");
  gen_cmd->add_option("--spec", gen_spec, "Config file with data.* keys")->required()->check(CLI::ExistingFile);
  gen_cmd->add_option("--out", gen_out, "Output CSV path")->required();

  std::string inspect_config;
  auto* inspect_cmd = app.add_subcommand("inspect", "Print the resolved config and setup summary");
  inspect_cmd->add_option("--config", inspect_config, "Config file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run_cmd) return cmd_run(run_args);
    if (*cmp_cmd) return cmd_compare(cmp_args);
    if (*gen_cmd) return cmd_gen_data(gen_spec, gen_out);
    if (*inspect_cmd) return cmd_inspect(inspect_config);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitConfig;
  } catch (const DivergenceError& e) {
    std::fprintf(stderr, "diverged: %s\n", e.what());
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitOther;
  }
  return kExitOther;
}
