#include "fedsim/param_space.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "fedsim/error.hpp"

namespace fedsim {
namespace {

void check_finite(const std::vector<double>& v, const char* context) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw DivergenceError(std::string(context) + ": non-finite value at index " +
                            std::to_string(i));
    }
  }
}

template <typename F>
ParamVector zip_map(const ParamVector& x, const ParamVector& y, const char* context, F f) {
  require_same_dim(x.dim(), y.dim(), context);
  std::vector<double> out(x.dim());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x[i], y[i]);
  check_finite(out, context);
  return ParamVector(std::move(out));
}

}  // namespace

ParamVector::ParamVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw DomainError("ParamVector: dim must be >= 1");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw DomainError("ParamVector: non-finite entry at index " + std::to_string(i));
    }
  }
}

ParamVector::ParamVector(std::initializer_list<double> values)
    : ParamVector(std::vector<double>(values)) {}

ParamVector ParamVector::zeros(std::size_t dim) { return filled(dim, 0.0); }

ParamVector ParamVector::filled(std::size_t dim, double value) {
  return ParamVector(std::vector<double>(dim, value));
}

void require_same_dim(std::size_t a, std::size_t b, const char* context) {
  if (a != b) throw DimensionError(a, b, context);
}

ParamVector axpy(double a, const ParamVector& x, const ParamVector& y) {
  return zip_map(x, y, "axpy", [a](double xi, double yi) { return a * xi + yi; });
}

ParamVector hadamard(const ParamVector& x, const ParamVector& y) {
  return zip_map(x, y, "hadamard", [](double xi, double yi) { return xi * yi; });
}

ParamVector add(const ParamVector& x, const ParamVector& y) {
  return zip_map(x, y, "add", [](double xi, double yi) { return xi + yi; });
}

ParamVector sub(const ParamVector& x, const ParamVector& y) {
  return zip_map(x, y, "sub", [](double xi, double yi) { return xi - yi; });
}

ParamVector scale(double a, const ParamVector& x) {
  std::vector<double> out(x.dim());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x[i];
  check_finite(out, "scale");
  return ParamVector(std::move(out));
}

ParamVector elem_map(ElemKind kind, const ParamVector& x) {
  std::vector<double> out(x.dim());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = x[i];
    switch (kind) {
      case ElemKind::sign:
        out[i] = static_cast<double>((v > 0.0) - (v < 0.0));
        break;
      case ElemKind::sqrt:
        if (v < 0.0) {
          throw DomainError("elem_map(sqrt): negative entry " + std::to_string(v) +
                            " at index " + std::to_string(i));
        }
        out[i] = std::sqrt(v);
        break;
      case ElemKind::abs:
        out[i] = std::fabs(v);
        break;
    }
  }
  return ParamVector(std::move(out));
}

double dot(const ParamVector& x, const ParamVector& y) {
  require_same_dim(x.dim(), y.dim(), "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.dim(); ++i) acc += x[i] * y[i];
  return acc;
}

double sum(const ParamVector& x) {
  double acc = 0.0;
  for (double v : x) acc += v;
  return acc;
}

double norm2(const ParamVector& x) { return std::sqrt(dot(x, x)); }

double max_abs_diff(const ParamVector& x, const ParamVector& y) {
  require_same_dim(x.dim(), y.dim(), "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < x.dim(); ++i) m = std::max(m, std::fabs(x[i] - y[i]));
  return m;
}

}  // namespace fedsim
