#include "fedsim/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedsim/error.hpp"
#include "fedsim/param_space.hpp"

namespace fedsim {

void NetworkMix::validate() const {
  if (!(fraction_3g >= 0.0 && fraction_3g <= 1.0)) {
    throw ConfigError("net.fraction_3g must be in [0, 1]");
  }
  for (double v : {down_3g_mbps, up_3g_mbps, down_4g_mbps, up_4g_mbps, compute_rate}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("net speeds and compute_rate must be > 0");
  }
  if (!(availability > 0.0 && availability <= 1.0)) {
    throw ConfigError("net.availability must be in (0, 1]");
  }
}

std::vector<NetworkProfile> assign_profiles(std::size_t num_clients, const NetworkMix& mix,
                                            std::uint64_t seed) {
  mix.validate();
  Rng rng(seed);
  std::vector<NetworkProfile> out(num_clients);
  for (std::size_t i = 0; i < num_clients; ++i) {
    const bool is_3g = uniform01(rng) < mix.fraction_3g;
    out[i].client_id = i;
    out[i].down_mbps = is_3g ? mix.down_3g_mbps : mix.down_4g_mbps;
    out[i].up_mbps = is_3g ? mix.up_3g_mbps : mix.up_4g_mbps;
    out[i].compute_rate = mix.compute_rate;
    out[i].availability = mix.availability;
  }
  return out;
}

RoundTiming round_time(std::span<const Participation> participants) {
  if (participants.empty()) throw DomainError("round_time: no participants");
  RoundTiming t;
  for (const auto& p : participants) {
    ClientTiming c;
    c.client_id = p.profile.client_id;
    c.download_s = 8.0 * static_cast<double>(p.model_bytes_down) / (p.profile.down_mbps * 1e6);
    c.compute_s = static_cast<double>(p.samples_processed) / p.profile.compute_rate;
    c.upload_s = 8.0 * static_cast<double>(p.update_bytes_up) / (p.profile.up_mbps * 1e6);
    c.total_s = c.download_s + c.compute_s + c.upload_s;
    t.round_wall_s = std::max(t.round_wall_s, c.total_s);
    t.bytes_up += p.update_bytes_up;
    t.bytes_down += p.model_bytes_down;
    t.clients.push_back(c);
  }
  return t;
}

const char* to_string(SamplingStrategy s) {
  return s == SamplingStrategy::uniform ? "uniform" : "speed_adaptive";
}

SamplingStrategy parse_sampling_strategy(const std::string& name) {
  if (name == "uniform") return SamplingStrategy::uniform;
  if (name == "speed_adaptive") return SamplingStrategy::speed_adaptive;
  throw ConfigError("unknown sampling strategy '" + name + "'");
}

std::size_t clients_per_round(std::size_t num_clients, double sampling_ratio) {
  if (!(sampling_ratio > 0.0 && sampling_ratio <= 1.0)) {
    throw ConfigError("sampling ratio must be in (0, 1]");
  }
  const auto k = static_cast<std::size_t>(std::llround(sampling_ratio * static_cast<double>(num_clients)));
  return std::clamp<std::size_t>(k, 1, num_clients);
}

std::vector<double> speed_adaptive_weights(std::span<const std::size_t> history, double alpha) {
  const std::size_t most = history.empty() ? 0 : *std::max_element(history.begin(), history.end());
  std::vector<double> w(history.size());
  for (std::size_t i = 0; i < history.size(); ++i) {
    const double deficit =
        static_cast<double>(most - history[i]) / (static_cast<double>(most) + 1.0);
    w[i] = std::pow(1.0 + deficit, alpha);
  }
  return w;
}

std::vector<std::size_t> sample_clients(SamplingStrategy strategy, std::size_t num_clients,
                                        double sampling_ratio,
                                        std::span<const std::size_t> history, double alpha,
                                        Rng& rng) {
  if (num_clients < 1) throw DomainError("sample_clients: num_clients must be >= 1");
  const std::size_t k = clients_per_round(num_clients, sampling_ratio);

  std::vector<double> weights(num_clients, 1.0);
  if (strategy == SamplingStrategy::speed_adaptive) {
    require_same_dim(history.size(), num_clients, "sample_clients history");
    weights = speed_adaptive_weights(history, alpha);
  }

  // Sequential weighted draws without replacement; with equal weights this is
  // a uniform k-subset.
  std::vector<std::size_t> pool(num_clients);
  std::iota(pool.begin(), pool.end(), 0);
  std::vector<std::size_t> chosen;
  chosen.reserve(k);
  while (chosen.size() < k) {
    double total = 0.0;
    for (auto id : pool) total += weights[id];
    double u = uniform01(rng) * total;
    std::size_t pick = pool.size() - 1;
    for (std::size_t j = 0; j < pool.size(); ++j) {
      u -= weights[pool[j]];
      if (u < 0.0) {
        pick = j;
        break;
      }
    }
    chosen.push_back(pool[pick]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

}  // namespace fedsim
