#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "fedsim/client.hpp"
#include "fedsim/param_space.hpp"

namespace fedsim {

enum class ServerRule { fedavg, fedavgm, fedadagrad, fedadam, fedyogi };

const char* to_string(ServerRule rule);
ServerRule parse_server_rule(const std::string& name);
bool is_adaptive(ServerRule rule) noexcept;

struct ServerHyper {
  double server_lr = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double tau = 1e-3;

  // server_lr is 1.0 for fedavg/fedavgm and 0.01 for the adaptive rules.
  static ServerHyper defaults_for(ServerRule rule);
  void validate() const;
};

struct ServerOptimizerState {
  ServerRule rule = ServerRule::fedavg;
  ServerHyper hyper;
  ParamVector params = ParamVector::zeros(1);
  ParamVector momentum = ParamVector::zeros(1);
  ParamVector second_moment = ParamVector::zeros(1);
  std::size_t round = 0;
};

// Fresh state at round 0: zero momentum; second moment tau^2 for the adaptive
// rules and zero otherwise.
ServerOptimizerState make_server_state(ServerRule rule, ParamVector params,
                                       const ServerHyper& hyper);

enum class Weighting { uniform, by_examples };

const char* to_string(Weighting w);
Weighting parse_weighting(const std::string& name);

struct ServerDelta {
  ParamVector delta = ParamVector::zeros(1);
  std::size_t total_examples = 0;
  std::size_t num_updates = 0;
};

// Mean of the client deltas, summed in ascending client-id order so the
// result does not depend on the order updates arrived in.
ServerDelta aggregate(std::span<const ClientUpdate> updates, Weighting weighting);

// One server update with d = agg.delta:
//   fedavg      x <- x - lr*d
//   fedavgm     m <- b1*m + d;            x <- x - lr*m
//   adaptive    m <- b1*m + (1-b1)*d, then
//     adagrad   v <- v + d^2
//     adam      v <- b2*v + (1-b2)*d^2
//     yogi      v <- v - (1-b2)*d^2*sign(v - d^2)
//               x <- x - lr*m/(sqrt(v) + tau)
// No bias correction. Returns the next state; the input is untouched.
ServerOptimizerState server_step(const ServerOptimizerState& state, const ServerDelta& agg);

}  // namespace fedsim
