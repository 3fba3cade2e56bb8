#include "fedsim/client.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fedsim/error.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

void ClientConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("client.learning_rate must be > 0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("client.momentum must be in [0, 1)");
  if (batch_size < 1) throw ConfigError("client.batch_size must be >= 1");
}

ClientUpdate local_train(const ModelSpec& spec, const ParamVector& global_params,
                         const Dataset& data, const Shard& shard, const ClientConfig& cfg,
                         std::uint64_t stream_seed) {
  cfg.validate();
  if (shard.size() == 0) {
    throw DataError("local_train: client " + std::to_string(shard.owner) + " has an empty shard");
  }
  require_same_dim(global_params.dim(), spec.param_dim(), "local_train params");

  const BatchData local = gather(data, shard.indices);
  const std::size_t n = local.labels.size();
  const std::size_t d = data.input_dim;

  ClientUpdate update;
  update.client_id = shard.owner;
  update.n_examples = n;
  auto client_loss = [&](const ParamVector& params) {
    try {
      return loss(spec, params, local.view());
    } catch (const DivergenceError& e) {
      throw DivergenceError("client " + std::to_string(shard.owner) + ": " + e.what());
    }
  };
  update.local_loss_before = client_loss(global_params);

  std::vector<double> w = global_params.to_vector();
  std::vector<double> velocity(w.size(), 0.0);
  std::vector<double> g(w.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(stream_seed);
  BatchData batch;
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < cfg.local_epochs; ++epoch) {
    if (cfg.shuffle) std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += cfg.batch_size, ++step) {
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      batch.features.clear();
      batch.labels.clear();
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t row = order[k];
        batch.features.insert(batch.features.end(), local.features.begin() + row * d,
                              local.features.begin() + (row + 1) * d);
        batch.labels.push_back(local.labels[row]);
      }
      try {
        loss_and_grad(spec, w, batch.view(), g);
      } catch (const DivergenceError& e) {
        throw DivergenceError("client " + std::to_string(shard.owner) + " diverged at local step " +
                              std::to_string(step) + ": " + e.what());
      }
      for (std::size_t i = 0; i < w.size(); ++i) {
        velocity[i] = cfg.momentum * velocity[i] + g[i];
        w[i] -= cfg.learning_rate * velocity[i];
        if (!std::isfinite(w[i])) {
          throw DivergenceError("client " + std::to_string(shard.owner) +
                                " diverged at local step " + std::to_string(step) +
                                ": non-finite parameter");
        }
      }
      update.samples_processed += stop - start;
    }
  }

  std::vector<double> delta(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) delta[i] = global_params[i] - w[i];
  update.delta = ParamVector(std::move(delta));
  update.local_params = ParamVector(std::move(w));
  update.local_loss_after = cfg.local_epochs == 0
                                ? update.local_loss_before
                                : client_loss(update.local_params);
  return update;
}

}  // namespace fedsim
