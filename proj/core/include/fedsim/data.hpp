#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fedsim/model.hpp"

namespace fedsim {

// Row-major labelled feature matrix.
struct Dataset {
  std::size_t input_dim = 0;
  std::size_t num_classes = 0;
  std::vector<double> features;  // size() * input_dim
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(features).subspan(i * input_dim, input_dim);
  }
  Batch view() const noexcept { return {features, labels}; }
};

// Throws DataError if the dataset breaks its invariants (empty, ragged,
// labels out of range, non-finite features).
void validate_dataset(const Dataset& data);

// One client's slice of a dataset, as sorted unique row indices.
struct Shard {
  std::size_t owner = 0;
  std::vector<std::size_t> indices;

  std::size_t size() const noexcept { return indices.size(); }
};

// Copies the selected rows into contiguous storage.
BatchData gather(const Dataset& data, std::span<const std::size_t> indices);
Dataset subset(const Dataset& data, std::span<const std::size_t> indices);

struct SynthSpec {
  std::size_t num_classes = 10;
  std::size_t input_dim = 20;
  std::size_t n_per_class = 100;
  double cluster_spread = 1.0;
  // Ratio between the largest and smallest per-coordinate feature scale.
  // Coordinate j is multiplied by scale_span^(-j/(d-1)); 1 leaves features as is.
  double scale_span = 1.0;
  std::uint64_t seed = 0;
};

// One isotropic Gaussian cluster per class. Class means are seeded random
// directions on the sphere of radius 4; cluster_spread is the per-coordinate
// standard deviation around them. Rows are grouped by class.
Dataset synth_generate(const SynthSpec& spec);

// Label skew: for every class, per-client proportions ~ Dirichlet(alpha).
// Redraws (up to 100 attempts) until every client holds at least one row.
std::vector<Shard> partition_dirichlet(const Dataset& data, std::size_t num_clients, double alpha,
                                       std::uint64_t seed);

// Quantity skew: shard sizes proportional to (rank)^(-zipf_s), rounded by
// largest remainder to sum to n with every client keeping >= 1 row.
std::vector<Shard> partition_quantity_skew(const Dataset& data, std::size_t num_clients,
                                           double zipf_s, std::uint64_t seed);

// Splits total into integer parts proportional to weights. Leftover units go
// to the largest fractional remainders, ties to the lower index.
std::vector<std::size_t> largest_remainder(std::span<const double> weights, std::size_t total);

struct CsvSchema {
  // Header name, or a zero-based column index written as an integer.
  std::string label_column = "label";
  // 0 infers max(label) + 1.
  std::size_t num_classes = 0;
};

// Comma-separated, optional single header row (detected when the first cell
// is not numeric). Features are every non-label column in file order.
Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);

// Writes columns x0..x{d-1},label with a header row.
void write_csv(const Dataset& data, const std::filesystem::path& path);

}  // namespace fedsim
