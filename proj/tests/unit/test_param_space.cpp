#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "fedsim/error.hpp"
#include "fedsim/param_space.hpp"

using namespace fedsim;

namespace {

ParamVector random_vector(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> n(0.0, 3.0);
  std::vector<double> v(dim);
  for (auto& x : v) x = n(rng);
  return ParamVector(std::move(v));
}

}  // namespace

TEST(ParamVector, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(ParamVector(std::vector<double>{}), DomainError);
  EXPECT_THROW((ParamVector{1.0, std::nan("")}), DomainError);
  EXPECT_THROW((ParamVector{std::numeric_limits<double>::infinity()}), DomainError);
  EXPECT_THROW(ParamVector::zeros(0), DomainError);
}

TEST(ParamVector, WorkedExamples) {
  const ParamVector x{1.0, 2.0};
  const ParamVector y{3.0, 4.0};
  EXPECT_EQ(axpy(2.0, x, y), (ParamVector{5.0, 8.0}));
  EXPECT_EQ(hadamard(x, y), (ParamVector{3.0, 8.0}));
  EXPECT_EQ(dot(x, y), 11.0);
  EXPECT_EQ(sum(x), 3.0);
  EXPECT_EQ(norm2(ParamVector{3.0, 4.0}), 5.0);
  EXPECT_EQ(elem_map(ElemKind::sign, ParamVector{-2.0, 0.0, 5.0}), (ParamVector{-1.0, 0.0, 1.0}));
  EXPECT_EQ(elem_map(ElemKind::sqrt, ParamVector{4.0, 9.0}), (ParamVector{2.0, 3.0}));
  EXPECT_EQ(elem_map(ElemKind::abs, ParamVector{-2.5, 1.0}), (ParamVector{2.5, 1.0}));
  EXPECT_EQ(max_abs_diff(x, y), 2.0);
}

TEST(ParamVector, DimensionMismatchNamesBothSizes) {
  const auto a = ParamVector::zeros(3);
  const auto b = ParamVector::zeros(4);
  try {
    (void)add(a, b);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    EXPECT_EQ(e.lhs(), 3u);
    EXPECT_EQ(e.rhs(), 4u);
    EXPECT_NE(std::string(e.what()).find("3 vs 4"), std::string::npos);
  }
  EXPECT_THROW((void)dot(a, b), DimensionError);
  EXPECT_THROW((void)hadamard(a, b), DimensionError);
  EXPECT_THROW((void)axpy(1.0, a, b), DimensionError);
}

TEST(ParamVector, SqrtOfNegativeIsDomainErrorWithIndex) {
  try {
    (void)elem_map(ElemKind::sqrt, ParamVector{1.0, -1.0});
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("at index 1"), std::string::npos);
  }
}

TEST(ParamVector, OverflowIsDivergence) {
  const auto big = ParamVector::filled(2, 1e308);
  EXPECT_THROW((void)add(big, big), DivergenceError);
  EXPECT_THROW((void)scale(1e10, big), DivergenceError);
}

TEST(ParamVector, OperationsLeaveInputsUntouched) {
  const ParamVector x{1.0, -2.0, 3.0};
  const auto copy = x;
  (void)scale(2.0, x);
  (void)add(x, x);
  (void)elem_map(ElemKind::abs, x);
  EXPECT_EQ(x, copy);
}

TEST(ParamVectorProperty, AlgebraicIdentities) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t dim = 1 + rng() % 64;
    const auto x = random_vector(rng, dim);
    const auto y = random_vector(rng, dim);
    EXPECT_EQ(axpy(0.0, x, y), y);
    EXPECT_EQ(axpy(1.0, x, y), add(x, y));
    EXPECT_EQ(add(x, y), add(y, x));
    EXPECT_EQ(sub(x, x), ParamVector::zeros(dim));
    EXPECT_EQ(dot(x, y), dot(y, x));
    EXPECT_EQ(max_abs_diff(x, x), 0.0);
    EXPECT_EQ(hadamard(x, y), hadamard(y, x));
    EXPECT_DOUBLE_EQ(norm2(x) * norm2(x), dot(x, x));
    EXPECT_LE(std::abs(dot(x, y)), norm2(x) * norm2(y) * (1 + 1e-12));
    for (std::size_t i = 0; i < dim; ++i) {
      const double s = elem_map(ElemKind::sign, x)[i];
      EXPECT_EQ(s * elem_map(ElemKind::abs, x)[i], x[i]);
    }
  }
}

TEST(ParamVectorProperty, ReductionsAreReproducible) {
  std::mt19937_64 rng(5);
  const auto x = random_vector(rng, 10007);
  const auto y = random_vector(rng, 10007);
  const double d = dot(x, y);
  const double s = sum(x);
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(dot(x, y), d);
    EXPECT_EQ(sum(x), s);
  }
  // Ascending-order accumulation, the documented contract.
  double acc = 0.0;
  for (std::size_t i = 0; i < x.dim(); ++i) acc += x[i] * y[i];
  EXPECT_EQ(d, acc);
}
