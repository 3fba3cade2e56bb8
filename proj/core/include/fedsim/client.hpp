#pragma once

#include <cstddef>
#include <cstdint>

#include "fedsim/data.hpp"
#include "fedsim/model.hpp"
#include "fedsim/param_space.hpp"

namespace fedsim {

struct ClientConfig {
  double learning_rate = 0.001;
  double momentum = 0.9;
  std::size_t local_epochs = 1;
  std::size_t batch_size = 32;
  bool shuffle = true;

  // Throws ConfigError on out-of-range fields.
  void validate() const;
};

struct ClientUpdate {
  std::size_t client_id = 0;
  // Pseudo-gradient: global params minus final local params.
  ParamVector delta = ParamVector::zeros(1);
  // Final local model. Stays on the client; kept here for inspection.
  ParamVector local_params = ParamVector::zeros(1);
  std::size_t n_examples = 0;
  std::size_t samples_processed = 0;
  double local_loss_before = 0.0;
  double local_loss_after = 0.0;
};

// Runs local_epochs passes of mini-batch heavy-ball SGD (v <- m*v + g,
// w <- w - lr*v, velocity starting at zero) over the shard, starting from
// global_params. Batch order depends only on stream_seed, so clients may run
// concurrently. The last batch of an epoch may be smaller than batch_size.
//
// Throws DivergenceError naming the step if the loss or parameters go
// non-finite.
ClientUpdate local_train(const ModelSpec& spec, const ParamVector& global_params,
                         const Dataset& data, const Shard& shard, const ClientConfig& cfg,
                         std::uint64_t stream_seed);

}  // namespace fedsim
