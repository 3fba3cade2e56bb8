#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedsim/param_space.hpp"

namespace fedsim {

enum class ModelKind { logistic_regression, mlp_one_hidden };

const char* to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

// One named matrix inside the flat parameter vector. Biases are (n x 1).
struct LayerSlot {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const noexcept { return rows * cols; }
  bool is_matrix() const noexcept { return rows > 1 && cols > 1; }
};

using ParamLayout = std::vector<LayerSlot>;

struct ModelSpec {
  ModelKind kind = ModelKind::logistic_regression;
  std::size_t input_dim = 0;
  std::size_t num_classes = 0;
  std::size_t hidden_dim = 0;  // mlp only
  ParamLayout layout;

  std::size_t param_dim() const noexcept;
};

// Builds the spec and its contiguous layout. Logistic regression stores
// weight (C x d) then bias (C x 1); the MLP stores hidden.weight (h x d),
// hidden.bias, output.weight (C x h), output.bias.
ModelSpec make_model_spec(ModelKind kind, std::size_t input_dim, std::size_t num_classes,
                          std::size_t hidden_dim = 0);

// Non-owning row-major view: features holds labels.size() rows of input_dim.
struct Batch {
  std::span<const double> features;
  std::span<const int> labels;

  std::size_t size() const noexcept { return labels.size(); }
};

// Owning storage behind a Batch.
struct BatchData {
  std::vector<double> features;
  std::vector<int> labels;

  Batch view() const noexcept { return {features, labels}; }
};

struct EvalResult {
  double accuracy = 0.0;
  double mean_loss = 0.0;
};

// Mean softmax cross-entropy over the batch.
double loss(const ModelSpec& spec, const ParamVector& params, const Batch& batch);
ParamVector grad(const ModelSpec& spec, const ParamVector& params, const Batch& batch);

// Fused forward/backward pass on raw buffers for the training hot path.
// Writes the mean gradient into grad_out (resized by the caller to
// param_dim) and returns the mean loss.
double loss_and_grad(const ModelSpec& spec, std::span<const double> params, const Batch& batch,
                     std::span<double> grad_out);

// Accuracy uses argmax with ties going to the lowest class index.
EvalResult evaluate(const ModelSpec& spec, const ParamVector& params, const Batch& data);

// Per-layer uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]; biases use the fan-in
// of the layer they belong to.
ParamVector init_params(const ModelSpec& spec, std::uint64_t seed);

}  // namespace fedsim
