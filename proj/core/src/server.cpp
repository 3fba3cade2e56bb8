#include "fedsim/server.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "fedsim/error.hpp"

namespace fedsim {

const char* to_string(ServerRule rule) {
  switch (rule) {
    case ServerRule::fedavg: return "fedavg";
    case ServerRule::fedavgm: return "fedavgm";
    case ServerRule::fedadagrad: return "fedadagrad";
    case ServerRule::fedadam: return "fedadam";
    case ServerRule::fedyogi: return "fedyogi";
  }
  return "?";
}

ServerRule parse_server_rule(const std::string& name) {
  for (auto r : {ServerRule::fedavg, ServerRule::fedavgm, ServerRule::fedadagrad,
                 ServerRule::fedadam, ServerRule::fedyogi}) {
    if (name == to_string(r)) return r;
  }
  throw ConfigError("unknown server rule '" + name + "'");
}

bool is_adaptive(ServerRule rule) noexcept {
  return rule == ServerRule::fedadagrad || rule == ServerRule::fedadam ||
         rule == ServerRule::fedyogi;
}

ServerHyper ServerHyper::defaults_for(ServerRule rule) {
  ServerHyper h;
  h.server_lr = is_adaptive(rule) ? 0.01 : 1.0;
  return h;
}

void ServerHyper::validate() const {
  if (!(server_lr > 0.0) || !std::isfinite(server_lr)) throw ConfigError("server.lr must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("server.beta1 must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("server.beta2 must be in [0, 1)");
  if (!(tau > 0.0)) throw ConfigError("server.tau must be > 0");
}

ServerOptimizerState make_server_state(ServerRule rule, ParamVector params,
                                       const ServerHyper& hyper) {
  hyper.validate();
  ServerOptimizerState s;
  s.rule = rule;
  s.hyper = hyper;
  const std::size_t dim = params.dim();
  s.params = std::move(params);
  s.momentum = ParamVector::zeros(dim);
  s.second_moment = ParamVector::filled(dim, is_adaptive(rule) ? hyper.tau * hyper.tau : 0.0);
  return s;
}

const char* to_string(Weighting w) { return w == Weighting::uniform ? "uniform" : "by_examples"; }

Weighting parse_weighting(const std::string& name) {
  if (name == "uniform") return Weighting::uniform;
  if (name == "by_examples") return Weighting::by_examples;
  throw ConfigError("unknown weighting '" + name + "'");
}

ServerDelta aggregate(std::span<const ClientUpdate> updates, Weighting weighting) {
  if (updates.empty()) throw DomainError("aggregate: no client updates");
  std::vector<const ClientUpdate*> ordered;
  ordered.reserve(updates.size());
  for (const auto& u : updates) ordered.push_back(&u);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto* a, const auto* b) { return a->client_id < b->client_id; });

  const std::size_t dim = ordered.front()->delta.dim();
  std::size_t total_examples = 0;
  for (const auto* u : ordered) {
    require_same_dim(u->delta.dim(), dim, "aggregate");
    total_examples += u->n_examples;
  }
  if (weighting == Weighting::by_examples && total_examples == 0) {
    throw DomainError("aggregate: by_examples weighting with zero total examples");
  }

  std::vector<double> acc(dim, 0.0);
  if (weighting == Weighting::uniform) {
    for (const auto* u : ordered) {
      for (std::size_t i = 0; i < dim; ++i) acc[i] += u->delta[i];
    }
    const double k = static_cast<double>(ordered.size());
    for (auto& v : acc) v /= k;
  } else {
    const double total = static_cast<double>(total_examples);
    for (const auto* u : ordered) {
      const double w = static_cast<double>(u->n_examples);
      for (std::size_t i = 0; i < dim; ++i) acc[i] += w * u->delta[i];
    }
    for (auto& v : acc) v /= total;
  }
  return {ParamVector(std::move(acc)), total_examples, ordered.size()};
}

ServerOptimizerState server_step(const ServerOptimizerState& state, const ServerDelta& agg) {
  const std::size_t dim = state.params.dim();
  require_same_dim(agg.delta.dim(), dim, "server_step");
  const auto& h = state.hyper;
  std::vector<double> x = state.params.to_vector();
  std::vector<double> m = state.momentum.to_vector();
  std::vector<double> v = state.second_moment.to_vector();

  for (std::size_t i = 0; i < dim; ++i) {
    const double d = agg.delta[i];
    switch (state.rule) {
      case ServerRule::fedavg:
        x[i] -= h.server_lr * d;
        continue;
      case ServerRule::fedavgm:
        m[i] = h.beta1 * m[i] + d;
        x[i] -= h.server_lr * m[i];
        continue;
      case ServerRule::fedadagrad:
        v[i] += d * d;
        break;
      case ServerRule::fedadam:
        v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * d * d;
        break;
      case ServerRule::fedyogi: {
        const double d2 = d * d;
        const double s = static_cast<double>((v[i] > d2) - (v[i] < d2));
        v[i] -= (1.0 - h.beta2) * d2 * s;
        break;
      }
    }
    m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * d;
    x[i] -= h.server_lr * m[i] / (std::sqrt(v[i]) + h.tau);
  }

  for (std::size_t i = 0; i < dim; ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(m[i]) || !std::isfinite(v[i])) {
      throw DivergenceError(std::string("server_step: ") + to_string(state.rule) +
                            " produced a non-finite value at round " +
                            std::to_string(state.round) + ", index " + std::to_string(i));
    }
  }

  ServerOptimizerState next;
  next.rule = state.rule;
  next.hyper = h;
  next.params = ParamVector(std::move(x));
  next.momentum = ParamVector(std::move(m));
  next.second_moment = ParamVector(std::move(v));
  next.round = state.round + 1;
  return next;
}

}  // namespace fedsim
