#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace fedsim {

// Flat dense vector of model parameters or updates.
//
// Immutable once constructed: every operation returns a new vector, so
// instances can be shared read-only across concurrently training clients.
// Construction rejects empty input and non-finite entries; operations whose
// result would contain NaN/Inf throw DivergenceError instead of returning it.
class ParamVector {
 public:
  explicit ParamVector(std::vector<double> values);
  ParamVector(std::initializer_list<double> values);

  static ParamVector zeros(std::size_t dim);
  static ParamVector filled(std::size_t dim, double value);

  std::size_t dim() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  std::vector<double> to_vector() const { return values_; }

  auto begin() const noexcept { return values_.cbegin(); }
  auto end() const noexcept { return values_.cend(); }

  // Bitwise equality of every entry.
  friend bool operator==(const ParamVector& a, const ParamVector& b) = default;

 private:
  std::vector<double> values_;
};

enum class ElemKind { sign, sqrt, abs };

// result[i] = a * x[i] + y[i]
ParamVector axpy(double a, const ParamVector& x, const ParamVector& y);
// result[i] = x[i] * y[i]
ParamVector hadamard(const ParamVector& x, const ParamVector& y);
// Elementwise sign (sign(0) == 0), sqrt (requires x[i] >= 0) or abs.
ParamVector elem_map(ElemKind kind, const ParamVector& x);

ParamVector scale(double a, const ParamVector& x);
ParamVector add(const ParamVector& x, const ParamVector& y);
ParamVector sub(const ParamVector& x, const ParamVector& y);

// Reductions run in ascending index order; identical inputs give bit-identical
// outputs.
double dot(const ParamVector& x, const ParamVector& y);
double sum(const ParamVector& x);
double norm2(const ParamVector& x);
double max_abs_diff(const ParamVector& x, const ParamVector& y);

// Throws DimensionError naming both sizes unless a == b.
void require_same_dim(std::size_t a, std::size_t b, const char* context);

}  // namespace fedsim
