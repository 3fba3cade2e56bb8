#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedsim/rng.hpp"

namespace fedsim {

struct NetworkProfile {
  std::size_t client_id = 0;
  double down_mbps = 40.0;
  double up_mbps = 10.0;
  double compute_rate = 1e4;  // examples per second
  double availability = 1.0;  // probability of being reachable when sampled
};

// Link classes and per-client defaults used by assign_profiles.
struct NetworkMix {
  double fraction_3g = 0.5;
  double down_3g_mbps = 7.0;
  double up_3g_mbps = 7.0 / 4.0;
  double down_4g_mbps = 40.0;
  double up_4g_mbps = 10.0;
  double compute_rate = 1e4;
  double availability = 1.0;

  void validate() const;
};

// Each client is independently 3G with probability fraction_3g, else 4G.
std::vector<NetworkProfile> assign_profiles(std::size_t num_clients, const NetworkMix& mix,
                                            std::uint64_t seed);

struct Participation {
  NetworkProfile profile;
  std::size_t model_bytes_down = 0;
  std::size_t update_bytes_up = 0;
  std::size_t samples_processed = 0;
};

struct ClientTiming {
  std::size_t client_id = 0;
  double download_s = 0.0;
  double compute_s = 0.0;
  double upload_s = 0.0;
  double total_s = 0.0;
};

struct RoundTiming {
  std::vector<ClientTiming> clients;
  double round_wall_s = 0.0;  // synchronous barrier: slowest participant
  std::size_t bytes_up = 0;
  std::size_t bytes_down = 0;
};

// download = 8*bytes/(down_mbps*1e6), compute = samples/compute_rate,
// upload = 8*bytes/(up_mbps*1e6).
RoundTiming round_time(std::span<const Participation> participants);

enum class SamplingStrategy { uniform, speed_adaptive };

const char* to_string(SamplingStrategy s);
SamplingStrategy parse_sampling_strategy(const std::string& name);

// K = max(1, round(ratio * num_clients)).
std::size_t clients_per_round(std::size_t num_clients, double sampling_ratio);

// Returns K distinct ids in ascending order. speed_adaptive draws without
// replacement proportionally to (1 + deficit_i)^alpha with
// deficit_i = (max_j h_j - h_i) / (max_j h_j + 1), h = samples processed so far.
std::vector<std::size_t> sample_clients(SamplingStrategy strategy, std::size_t num_clients,
                                        double sampling_ratio,
                                        std::span<const std::size_t> history, double alpha,
                                        Rng& rng);

// Selection weights used by speed_adaptive, exposed for testing.
std::vector<double> speed_adaptive_weights(std::span<const std::size_t> history, double alpha);

}  // namespace fedsim
