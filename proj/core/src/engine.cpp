#include "fedsim/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "fedsim/compressor.hpp"
#include "fedsim/error.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {
namespace {

std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

Dataset load_dataset(const RunConfig& cfg) {
  if (cfg.data.source == DataSource::csv) {
    auto schema = cfg.data.csv;
    return load_csv(cfg.data.csv_path, schema);
  }
  auto spec = cfg.data.synth;
  spec.seed = cfg.data.seed.value_or(derive_seed(cfg.seed, "data"));
  return synth_generate(spec);
}

// Runs fn(i) for i in [0, n) on up to `threads` workers. Exceptions are
// rethrown in index order once every task has finished.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn fn) {
  std::vector<std::exception_ptr> errors(n);
  auto guarded = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t workers = std::min(threads, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) guarded(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) guarded(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

std::size_t model_serialized_bytes(std::size_t param_dim) {
  return kHeaderBytes + 8 * param_dim;
}

Setup prepare(const RunConfig& cfg) {
  cfg.validate();
  Dataset all = load_dataset(cfg);
  validate_dataset(all);

  Setup s;
  const std::size_t n = all.size();
  const auto n_eval = static_cast<std::size_t>(std::floor(cfg.data.eval_fraction * static_cast<double>(n)));
  if (n_eval == 0) {
    s.train = all;
    s.eval = std::move(all);
  } else {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng = make_rng(cfg.seed, "split");
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::size_t> eval_idx(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_eval));
    std::vector<std::size_t> train_idx(perm.begin() + static_cast<std::ptrdiff_t>(n_eval), perm.end());
    std::sort(eval_idx.begin(), eval_idx.end());
    std::sort(train_idx.begin(), train_idx.end());
    s.train = subset(all, train_idx);
    s.eval = subset(all, eval_idx);
  }
  if (s.train.size() < cfg.num_clients) {
    throw ConfigError("training set has " + std::to_string(s.train.size()) + " rows, fewer than " +
                      std::to_string(cfg.num_clients) + " clients");
  }

  const auto part_seed = derive_seed(cfg.seed, "partition");
  s.shards = cfg.partition.kind == PartitionKind::dirichlet
                 ? partition_dirichlet(s.train, cfg.num_clients, cfg.partition.alpha, part_seed)
                 : partition_quantity_skew(s.train, cfg.num_clients, cfg.partition.zipf_s, part_seed);

  s.spec = make_model_spec(cfg.model_kind, s.train.input_dim, s.train.num_classes,
                           cfg.model_kind == ModelKind::mlp_one_hidden ? cfg.hidden_dim : 0);
  s.initial_params = init_params(s.spec, derive_seed(cfg.seed, "init"));
  s.profiles = assign_profiles(cfg.num_clients, cfg.net, derive_seed(cfg.seed, "profiles"));
  return s;
}

RunResult run(const RunConfig& cfg, const RunHooks* hooks) {
  const Setup setup = prepare(cfg);
  return run(cfg, setup, hooks);
}

RunResult run(const RunConfig& cfg, const Setup& setup, const RunHooks* hooks) {
  cfg.validate();
  const auto& spec = setup.spec;
  const std::size_t m = setup.shards.size();
  if (m != cfg.num_clients || setup.profiles.size() != m) {
    throw ConfigError("setup does not match fl.num_clients");
  }

  auto state = make_server_state(cfg.server_rule, setup.initial_params, cfg.server_hyper());
  const Codec codec(cfg.compression, derive_seed(cfg.seed, "codec"));
  const std::size_t model_bytes = model_serialized_bytes(spec.param_dim());
  const Batch train_view = setup.train.view();
  const Batch eval_view = setup.eval.view();

  RunResult result;
  result.log.initial_train_loss = evaluate(spec, state.params, train_view).mean_loss;
  result.log.initial_eval_acc = evaluate(spec, state.params, eval_view).accuracy;

  std::vector<std::size_t> history(m, 0);
  double clock = 0.0;
  std::size_t total_up = 0;
  std::size_t total_down = 0;

  for (std::size_t r = 0; r < cfg.rounds; ++r) {
    const auto round32 = static_cast<std::uint32_t>(r);
    try {
      Rng sample_rng = make_rng(cfg.seed, "sample", r);
      auto sampled = sample_clients(cfg.sampling, m, cfg.sampling_ratio, history,
                                    cfg.adaptive_alpha, sample_rng);

      std::vector<std::size_t> participants;
      for (auto id : sampled) {
        const double p = setup.profiles[id].availability;
        if (p >= 1.0) {
          participants.push_back(id);
          continue;
        }
        Rng avail = make_rng(cfg.seed, "avail", r, id);
        if (uniform01(avail) < p) participants.push_back(id);
      }

      const std::size_t k = participants.size();
      std::vector<std::optional<ClientUpdate>> raw(k);
      std::vector<std::optional<ClientUpdate>> decoded(k);
      std::vector<std::size_t> up_bytes(k, 0);
      parallel_for(k, cfg.threads, [&](std::size_t i) {
        const auto id = participants[i];
        auto upd = local_train(spec, state.params, setup.train, setup.shards[id], cfg.client,
                               derive_seed(cfg.seed, "client", r, id));
        const auto enc = codec.encode(upd.delta, spec.layout, round32, static_cast<std::uint32_t>(id),
                                      static_cast<std::uint32_t>(upd.n_examples));
        up_bytes[i] = enc.wire_bytes;
        ClientUpdate dec = upd;
        dec.delta = codec.decode(enc, spec.layout);
        raw[i] = std::move(upd);
        decoded[i] = std::move(dec);
      });

      RoundTrace trace;
      trace.round = r;
      trace.model_bytes = model_bytes;
      trace.params_before = state.params;

      std::vector<ClientUpdate> updates;
      updates.reserve(k);
      std::vector<Participation> parts;
      parts.reserve(k);
      for (std::size_t i = 0; i < k; ++i) {
        history[participants[i]] += decoded[i]->samples_processed;
        parts.push_back({setup.profiles[participants[i]], model_bytes, up_bytes[i],
                         decoded[i]->samples_processed});
        updates.push_back(*decoded[i]);
      }

      RoundTiming timing;
      if (k > 0) {
        state = server_step(state, aggregate(updates, cfg.weighting));
        timing = round_time(parts);
      }
      clock += timing.round_wall_s;
      total_up += timing.bytes_up;
      total_down += timing.bytes_down;

      RoundRecord rec;
      rec.round = r + 1;
      rec.sim_seconds = clock;
      rec.train_loss = evaluate(spec, state.params, train_view).mean_loss;
      rec.eval_acc = evaluate(spec, state.params, eval_view).accuracy;
      rec.bytes_up = total_up;
      rec.bytes_down = total_down;
      rec.participants = k;
      if (!std::isfinite(rec.train_loss)) throw DivergenceError("training loss is not finite");
      result.log.rounds.push_back(rec);

      if (hooks && hooks->on_round) {
        trace.sampled = std::move(sampled);
        trace.participants = participants;
        for (std::size_t i = 0; i < k; ++i) trace.raw_updates.push_back(std::move(*raw[i]));
        trace.decoded_updates = std::move(updates);
        trace.update_bytes = std::move(up_bytes);
        trace.params_after = state.params;
        trace.timing = std::move(timing);
        hooks->on_round(trace);
      }
    } catch (const DivergenceError& e) {
      throw DivergenceError("round " + std::to_string(r + 1) + ": " + e.what());
    }
  }
  result.final_params = state.params;
  return result;
}

void write_metrics_csv(const MetricsLog& log, std::ostream& out) {
  out << "round,sim_seconds,train_loss,eval_acc,bytes_up,bytes_down,participants\n";
  for (const auto& r : log.rounds) {
    out << r.round << ',' << fmt_real(r.sim_seconds) << ',' << fmt_real(r.train_loss) << ','
        << fmt_real(r.eval_acc) << ',' << r.bytes_up << ',' << r.bytes_down << ','
        << r.participants << '\n';
  }
}

std::string metrics_csv(const MetricsLog& log) {
  std::ostringstream ss;
  write_metrics_csv(log, ss);
  return ss.str();
}

std::optional<std::size_t> rounds_to_target(const MetricsLog& log, double target) {
  for (const auto& r : log.rounds) {
    if (r.train_loss <= target) return r.round;
  }
  return std::nullopt;
}

std::vector<CompareRow> compare(const RunConfig& base, const std::vector<SweepVariant>& sweep) {
  std::vector<CompareRow> rows;
  for (const auto& variant : sweep) {
    CompareRow row;
    row.name = variant.name;
    try {
      RunConfig cfg = base;
      apply_settings(cfg, variant.overrides);
      auto res = run(cfg);
      row.log = std::move(res.log);
      row.target_loss = cfg.target_fraction * row.log.initial_train_loss;
      row.rounds_to_target = rounds_to_target(row.log, row.target_loss);
      row.final_train_loss = row.log.rounds.back().train_loss;
      row.final_eval_acc = row.log.rounds.back().eval_acc;
      row.ok = true;
    } catch (const Error& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_compare_csv(const std::vector<CompareRow>& rows, std::ostream& out) {
  out << "variant,status,target_loss,rounds_to_target,final_train_loss,final_eval_acc\n";
  for (const auto& row : rows) {
    out << row.name << ',';
    if (!row.ok) {
      std::string msg = row.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      out << "error: " << msg << ",,,,\n";
      continue;
    }
    out << "ok," << fmt_real(row.target_loss) << ','
        << (row.rounds_to_target ? std::to_string(*row.rounds_to_target) : std::string("never"))
        << ',' << fmt_real(row.final_train_loss) << ',' << fmt_real(row.final_eval_acc) << '\n';
  }
}

}  // namespace fedsim
