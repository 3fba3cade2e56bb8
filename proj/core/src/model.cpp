#include "fedsim/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fedsim/error.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {
namespace {

void validate(const ModelSpec& spec, std::size_t param_count, const Batch& batch) {
  require_same_dim(param_count, spec.param_dim(), "model params");
  if (batch.size() == 0) throw DataError("model: empty batch");
  require_same_dim(batch.features.size(), batch.size() * spec.input_dim, "batch features");
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const int y = batch.labels[n];
    if (y < 0 || static_cast<std::size_t>(y) >= spec.num_classes) {
      throw DataError("model: label " + std::to_string(y) + " at row " + std::to_string(n) +
                      " outside [0, " + std::to_string(spec.num_classes) + ")");
    }
  }
}

// Computes logits for one example. For the MLP, hidden receives tanh
// activations so the backward pass can reuse them.
void forward(const ModelSpec& spec, const double* p, const double* x, double* hidden,
             double* logits) {
  const std::size_t d = spec.input_dim;
  const std::size_t c = spec.num_classes;
  if (spec.kind == ModelKind::logistic_regression) {
    const double* w = p;
    const double* b = p + c * d;
    for (std::size_t k = 0; k < c; ++k) {
      double z = b[k];
      const double* row = w + k * d;
      for (std::size_t j = 0; j < d; ++j) z += row[j] * x[j];
      logits[k] = z;
    }
    return;
  }
  const std::size_t h = spec.hidden_dim;
  const double* w1 = p;
  const double* b1 = w1 + h * d;
  const double* w2 = b1 + h;
  const double* b2 = w2 + c * h;
  for (std::size_t u = 0; u < h; ++u) {
    double a = b1[u];
    const double* row = w1 + u * d;
    for (std::size_t j = 0; j < d; ++j) a += row[j] * x[j];
    hidden[u] = std::tanh(a);
  }
  for (std::size_t k = 0; k < c; ++k) {
    double z = b2[k];
    const double* row = w2 + k * h;
    for (std::size_t u = 0; u < h; ++u) z += row[u] * hidden[u];
    logits[k] = z;
  }
}

// Replaces logits with softmax probabilities and returns -log p[label].
double softmax_xent(double* logits, std::size_t c, int label) {
  const double mx = *std::max_element(logits, logits + c);
  const double z_label = logits[label];
  double total = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    logits[k] = std::exp(logits[k] - mx);
    total += logits[k];
  }
  const double lse = mx + std::log(total);
  for (std::size_t k = 0; k < c; ++k) logits[k] /= total;
  return lse - z_label;
}

double accumulate(const ModelSpec& spec, std::span<const double> params, const Batch& batch,
                  double* grad, std::size_t* correct) {
  const std::size_t d = spec.input_dim;
  const std::size_t c = spec.num_classes;
  const std::size_t h = spec.hidden_dim;
  const std::size_t n = batch.size();
  const double inv_n = 1.0 / static_cast<double>(n);

  std::vector<double> hidden(h);
  std::vector<double> probs(c);
  std::vector<double> dhidden(h);
  double total = 0.0;

  for (std::size_t i = 0; i < n; ++i) {
    const double* x = batch.features.data() + i * d;
    const int y = batch.labels[i];
    forward(spec, params.data(), x, hidden.data(), probs.data());
    if (correct != nullptr) {
      const auto best = std::max_element(probs.begin(), probs.end()) - probs.begin();
      if (best == y) ++*correct;
    }
    const double li = softmax_xent(probs.data(), c, y);
    if (!std::isfinite(li)) {
      throw DivergenceError("model: non-finite loss at batch row " + std::to_string(i));
    }
    total += li;
    if (grad == nullptr) continue;

    probs[y] -= 1.0;  // dL/dz for this example
    if (spec.kind == ModelKind::logistic_regression) {
      double* gw = grad;
      double* gb = grad + c * d;
      for (std::size_t k = 0; k < c; ++k) {
        const double dz = probs[k] * inv_n;
        double* row = gw + k * d;
        for (std::size_t j = 0; j < d; ++j) row[j] += dz * x[j];
        gb[k] += dz;
      }
      continue;
    }
    const double* w2 = params.data() + h * d + h;
    double* gw1 = grad;
    double* gb1 = gw1 + h * d;
    double* gw2 = gb1 + h;
    double* gb2 = gw2 + c * h;
    std::fill(dhidden.begin(), dhidden.end(), 0.0);
    for (std::size_t k = 0; k < c; ++k) {
      const double dz = probs[k] * inv_n;
      double* grow = gw2 + k * h;
      const double* wrow = w2 + k * h;
      for (std::size_t u = 0; u < h; ++u) {
        grow[u] += dz * hidden[u];
        dhidden[u] += wrow[u] * dz;
      }
      gb2[k] += dz;
    }
    for (std::size_t u = 0; u < h; ++u) {
      const double da = dhidden[u] * (1.0 - hidden[u] * hidden[u]);
      double* row = gw1 + u * d;
      for (std::size_t j = 0; j < d; ++j) row[j] += da * x[j];
      gb1[u] += da;
    }
  }
  return total * inv_n;
}

}  // namespace

const char* to_string(ModelKind kind) {
  return kind == ModelKind::logistic_regression ? "logistic_regression" : "mlp_one_hidden";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "logistic_regression" || name == "logistic") return ModelKind::logistic_regression;
  if (name == "mlp_one_hidden" || name == "mlp") return ModelKind::mlp_one_hidden;
  throw DomainError("unknown model kind '" + name + "'");
}

std::size_t ModelSpec::param_dim() const noexcept {
  std::size_t total = 0;
  for (const auto& slot : layout) total += slot.size();
  return total;
}

ModelSpec make_model_spec(ModelKind kind, std::size_t input_dim, std::size_t num_classes,
                          std::size_t hidden_dim) {
  if (input_dim < 1) throw DomainError("model: input_dim must be >= 1");
  if (num_classes < 2) throw DomainError("model: num_classes must be >= 2");
  ModelSpec spec;
  spec.kind = kind;
  spec.input_dim = input_dim;
  spec.num_classes = num_classes;
  std::size_t offset = 0;
  auto push = [&](std::string name, std::size_t rows, std::size_t cols) {
    spec.layout.push_back({std::move(name), offset, rows, cols});
    offset += rows * cols;
  };
  if (kind == ModelKind::logistic_regression) {
    push("weight", num_classes, input_dim);
    push("bias", num_classes, 1);
  } else {
    if (hidden_dim < 1) throw DomainError("model: mlp hidden_dim must be >= 1");
    spec.hidden_dim = hidden_dim;
    push("hidden.weight", hidden_dim, input_dim);
    push("hidden.bias", hidden_dim, 1);
    push("output.weight", num_classes, hidden_dim);
    push("output.bias", num_classes, 1);
  }
  return spec;
}

double loss(const ModelSpec& spec, const ParamVector& params, const Batch& batch) {
  validate(spec, params.dim(), batch);
  return accumulate(spec, params.values(), batch, nullptr, nullptr);
}

ParamVector grad(const ModelSpec& spec, const ParamVector& params, const Batch& batch) {
  std::vector<double> g(spec.param_dim(), 0.0);
  loss_and_grad(spec, params.values(), batch, g);
  return ParamVector(std::move(g));
}

double loss_and_grad(const ModelSpec& spec, std::span<const double> params, const Batch& batch,
                     std::span<double> grad_out) {
  validate(spec, params.size(), batch);
  require_same_dim(grad_out.size(), spec.param_dim(), "gradient buffer");
  std::fill(grad_out.begin(), grad_out.end(), 0.0);
  const double l = accumulate(spec, params, batch, grad_out.data(), nullptr);
  for (std::size_t i = 0; i < grad_out.size(); ++i) {
    if (!std::isfinite(grad_out[i])) {
      throw DivergenceError("model: non-finite gradient at index " + std::to_string(i));
    }
  }
  return l;
}

EvalResult evaluate(const ModelSpec& spec, const ParamVector& params, const Batch& data) {
  validate(spec, params.dim(), data);
  std::size_t correct = 0;
  const double mean_loss = accumulate(spec, params.values(), data, nullptr, &correct);
  return {static_cast<double>(correct) / static_cast<double>(data.size()), mean_loss};
}

ParamVector init_params(const ModelSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> p(spec.param_dim());
  // Slots come in (weight, bias) pairs; both use the weight's fan-in.
  std::size_t fan_in = 1;
  for (const auto& slot : spec.layout) {
    if (slot.name.find("weight") != std::string::npos) fan_in = slot.cols;
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < slot.size(); ++i) {
      p[slot.offset + i] = (2.0 * uniform01(rng) - 1.0) * bound;
    }
  }
  return ParamVector(std::move(p));
}

}  // namespace fedsim
