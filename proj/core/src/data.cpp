#include "fedsim/data.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>

#include "fedsim/error.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {
namespace {

constexpr int kDirichletRetries = 100;

std::vector<Shard> shards_from_assignment(std::vector<std::vector<std::size_t>> buckets) {
  std::vector<Shard> shards(buckets.size());
  for (std::size_t c = 0; c < buckets.size(); ++c) {
    std::sort(buckets[c].begin(), buckets[c].end());
    shards[c].owner = c;
    shards[c].indices = std::move(buckets[c]);
  }
  return shards;
}

std::vector<double> draw_dirichlet(std::size_t k, double alpha, Rng& rng) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> p(k);
  double total = 0.0;
  for (auto& v : p) {
    v = gamma(rng);
    total += v;
  }
  if (total <= 0.0) {
    // Every gamma draw underflowed (alpha tiny): all mass on one client.
    std::fill(p.begin(), p.end(), 0.0);
    p[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(k))] = 1.0;
    return p;
  }
  for (auto& v : p) v /= total;
  return p;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::optional<double> parse_real(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<std::size_t> parse_index(const std::string& s) {
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); })) {
    return std::nullopt;
  }
  return static_cast<std::size_t>(std::stoull(s));
}

}  // namespace

void validate_dataset(const Dataset& data) {
  if (data.size() == 0) throw DataError("dataset: no rows");
  if (data.input_dim == 0) throw DataError("dataset: input_dim must be >= 1");
  if (data.num_classes < 2) throw DataError("dataset: num_classes must be >= 2");
  require_same_dim(data.features.size(), data.size() * data.input_dim, "dataset features");
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.labels[i] < 0 || static_cast<std::size_t>(data.labels[i]) >= data.num_classes) {
      throw DataError("dataset: label out of range at row " + std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < data.features.size(); ++i) {
    if (!std::isfinite(data.features[i])) {
      throw DataError("dataset: non-finite feature at row " + std::to_string(i / data.input_dim));
    }
  }
}

BatchData gather(const Dataset& data, std::span<const std::size_t> indices) {
  BatchData out;
  out.features.reserve(indices.size() * data.input_dim);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= data.size()) throw DataError("gather: row index " + std::to_string(i) + " out of bounds");
    const auto r = data.row(i);
    out.features.insert(out.features.end(), r.begin(), r.end());
    out.labels.push_back(data.labels[i]);
  }
  return out;
}

Dataset subset(const Dataset& data, std::span<const std::size_t> indices) {
  auto rows = gather(data, indices);
  Dataset out;
  out.input_dim = data.input_dim;
  out.num_classes = data.num_classes;
  out.features = std::move(rows.features);
  out.labels = std::move(rows.labels);
  return out;
}

Dataset synth_generate(const SynthSpec& spec) {
  if (spec.num_classes < 2) throw DomainError("synth_generate: num_classes must be >= 2");
  if (spec.input_dim < 1 || spec.n_per_class < 1) {
    throw DomainError("synth_generate: input_dim and n_per_class must be >= 1");
  }
  if (!(spec.cluster_spread > 0.0)) throw DomainError("synth_generate: cluster_spread must be > 0");
  if (!(spec.scale_span >= 1.0)) throw DomainError("synth_generate: scale_span must be >= 1");

  const std::size_t d = spec.input_dim;
  Rng rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<double> scales(d, 1.0);
  if (d > 1) {
    for (std::size_t j = 0; j < d; ++j) {
      scales[j] = std::pow(spec.scale_span, -static_cast<double>(j) / static_cast<double>(d - 1));
    }
  }

  std::vector<std::vector<double>> means(spec.num_classes, std::vector<double>(d));
  for (auto& mean : means) {
    double norm = 0.0;
    do {
      norm = 0.0;
      for (auto& v : mean) {
        v = normal(rng);
        norm += v * v;
      }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (auto& v : mean) v = 4.0 * v / norm;
  }

  Dataset out;
  out.input_dim = d;
  out.num_classes = spec.num_classes;
  out.features.reserve(spec.num_classes * spec.n_per_class * d);
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    for (std::size_t i = 0; i < spec.n_per_class; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        out.features.push_back((means[c][j] + spec.cluster_spread * normal(rng)) * scales[j]);
      }
      out.labels.push_back(static_cast<int>(c));
    }
  }
  return out;
}

std::vector<std::size_t> largest_remainder(std::span<const double> weights, std::size_t total) {
  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (weights.empty() || !(wsum > 0.0)) throw DomainError("largest_remainder: weights must sum > 0");
  std::vector<std::size_t> parts(weights.size());
  std::vector<double> frac(weights.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double quota = static_cast<double>(total) * weights[i] / wsum;
    parts[i] = static_cast<std::size_t>(std::floor(quota));
    frac[i] = quota - std::floor(quota);
    assigned += parts[i];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t k = 0; assigned < total; k = (k + 1) % order.size(), ++assigned) {
    ++parts[order[k]];
  }
  return parts;
}

std::vector<Shard> partition_dirichlet(const Dataset& data, std::size_t num_clients, double alpha,
                                       std::uint64_t seed) {
  if (num_clients < 1) throw DomainError("partition_dirichlet: num_clients must be >= 1");
  if (!(alpha > 0.0)) throw DomainError("partition_dirichlet: alpha must be > 0");
  if (num_clients > data.size()) {
    throw DataError("partition_dirichlet: more clients than examples");
  }

  std::vector<std::vector<std::size_t>> by_class(data.num_classes);
  for (std::size_t i = 0; i < data.size(); ++i) by_class[data.labels[i]].push_back(i);

  Rng rng(seed);
  for (int attempt = 0; attempt < kDirichletRetries; ++attempt) {
    std::vector<std::vector<std::size_t>> buckets(num_clients);
    for (auto cls : by_class) {
      if (cls.empty()) continue;
      std::shuffle(cls.begin(), cls.end(), rng);
      const auto props = draw_dirichlet(num_clients, alpha, rng);
      const auto counts = largest_remainder(props, cls.size());
      std::size_t pos = 0;
      for (std::size_t c = 0; c < num_clients; ++c) {
        buckets[c].insert(buckets[c].end(), cls.begin() + pos, cls.begin() + pos + counts[c]);
        pos += counts[c];
      }
    }
    const bool all_nonempty =
        std::all_of(buckets.begin(), buckets.end(), [](const auto& b) { return !b.empty(); });
    if (all_nonempty) return shards_from_assignment(std::move(buckets));
  }
  throw DataError("partition_dirichlet: could not give every one of " +
                  std::to_string(num_clients) + " clients an example in " +
                  std::to_string(kDirichletRetries) +
                  " draws; use a larger dataset or a larger alpha");
}

std::vector<Shard> partition_quantity_skew(const Dataset& data, std::size_t num_clients,
                                           double zipf_s, std::uint64_t seed) {
  if (num_clients < 1) throw DomainError("partition_quantity_skew: num_clients must be >= 1");
  if (!(zipf_s >= 0.0)) throw DomainError("partition_quantity_skew: zipf_s must be >= 0");
  const std::size_t n = data.size();
  if (num_clients > n) {
    throw DataError("partition_quantity_skew: num_clients (" + std::to_string(num_clients) +
                    ") exceeds dataset size (" + std::to_string(n) + ")");
  }

  std::vector<double> weights(num_clients);
  for (std::size_t i = 0; i < num_clients; ++i) {
    weights[i] = std::pow(static_cast<double>(i + 1), -zipf_s);
  }
  auto sizes = largest_remainder(weights, n);
  for (auto& s : sizes) {
    if (s > 0) continue;
    // Borrow one row from the currently largest shard (lowest index on ties).
    auto donor = std::max_element(sizes.begin(), sizes.end());
    --*donor;
    s = 1;
  }

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  std::vector<std::vector<std::size_t>> buckets(num_clients);
  std::size_t pos = 0;
  for (std::size_t c = 0; c < num_clients; ++c) {
    buckets[c].assign(perm.begin() + pos, perm.begin() + pos + sizes[c]);
    pos += sizes[c];
  }
  return shards_from_assignment(std::move(buckets));
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("load_csv: cannot open '" + path.string() + "'");

  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    rows.push_back(split_csv_line(line));
  }
  if (rows.empty()) throw DataError("load_csv: '" + path.string() + "' is empty");

  std::vector<std::string> header;
  std::size_t first_data = 0;
  if (!parse_real(rows[0].front())) {
    header = rows[0];
    first_data = 1;
  }
  if (first_data == rows.size()) throw DataError("load_csv: '" + path.string() + "' has no data rows");

  const std::size_t ncols = rows[first_data].size();
  if (ncols < 2) throw DataError("load_csv: need at least one feature column and a label column");

  std::optional<std::size_t> label_col;
  if (!header.empty()) {
    const auto it = std::find(header.begin(), header.end(), schema.label_column);
    if (it != header.end()) label_col = static_cast<std::size_t>(it - header.begin());
  }
  if (!label_col) label_col = parse_index(schema.label_column);
  if (!label_col || *label_col >= ncols) {
    throw DataError("load_csv: label column '" + schema.label_column + "' not found");
  }

  Dataset out;
  out.input_dim = ncols - 1;
  int max_label = -1;
  for (std::size_t r = first_data; r < rows.size(); ++r) {
    const auto& cells = rows[r];
    if (cells.size() != ncols) {
      throw DataError("load_csv: row " + std::to_string(r + 1) + " has " +
                      std::to_string(cells.size()) + " columns, expected " + std::to_string(ncols));
    }
    for (std::size_t c = 0; c < ncols; ++c) {
      const auto v = parse_real(cells[c]);
      if (!v) {
        throw DataError("load_csv: unparsable cell '" + cells[c] + "' at row " +
                        std::to_string(r + 1) + ", column " + std::to_string(c + 1));
      }
      if (c != *label_col) {
        out.features.push_back(*v);
        continue;
      }
      if (*v != std::floor(*v) || *v < 0.0 ||
          (schema.num_classes > 0 && *v >= static_cast<double>(schema.num_classes))) {
        throw DataError("load_csv: label '" + cells[c] + "' out of range at row " +
                        std::to_string(r + 1));
      }
      out.labels.push_back(static_cast<int>(*v));
      max_label = std::max(max_label, out.labels.back());
    }
  }
  out.num_classes = schema.num_classes > 0
                        ? schema.num_classes
                        : std::max<std::size_t>(2, static_cast<std::size_t>(max_label) + 1);
  validate_dataset(out);
  return out;
}

void write_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("write_csv: cannot open '" + path.string() + "' for writing");
  for (std::size_t j = 0; j < data.input_dim; ++j) out << 'x' << j << ',';
  out << "label\n";
  char buf[32];
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.row(i)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << buf << ',';
    }
    out << data.labels[i] << '\n';
  }
  if (!out) throw DataError("write_csv: write failed for '" + path.string() + "'");
}

}  // namespace fedsim
