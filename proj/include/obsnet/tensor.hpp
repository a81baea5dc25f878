#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "obsnet/errors.hpp"

namespace obsnet {

// Dense row-major tensor. Rank 1 tensors behave as row vectors where a
// matrix is expected.
template <typename T>
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<T> data;

  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> s) {
    Tensor t;
    t.shape = std::move(s);
    t.data.assign(t.expected_size(), T(0));
    return t;
  }

  static Tensor full(std::vector<std::size_t> s, T v) {
    Tensor t = zeros(std::move(s));
    for (auto& x : t.data) x = v;
    return t;
  }

  static Tensor vector(std::vector<T> v) {
    Tensor t;
    t.shape = {v.size()};
    t.data = std::move(v);
    return t;
  }

  static Tensor matrix(std::size_t r, std::size_t c, std::vector<T> v) {
    if (v.size() != r * c) throw DimensionError("matrix: data size mismatch");
    Tensor t;
    t.shape = {r, c};
    t.data = std::move(v);
    return t;
  }

  static Tensor scalar(T v) { return matrix(1, 1, {v}); }

  std::size_t expected_size() const {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return shape.empty() ? 0 : n;
  }

  std::size_t numel() const { return data.size(); }

  std::size_t rows() const {
    if (shape.size() >= 2) return shape[0];
    return 1;
  }

  std::size_t cols() const {
    if (shape.empty()) return 0;
    return shape.back();
  }

  bool is_scalar() const { return numel() == 1; }

  T& at(std::size_t i, std::size_t j) { return data[i * cols() + j]; }
  const T& at(std::size_t i, std::size_t j) const { return data[i * cols() + j]; }

  T* row_ptr(std::size_t i) { return data.data() + i * cols(); }
  const T* row_ptr(std::size_t i) const { return data.data() + i * cols(); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  void fill(T v) {
    for (auto& x : data) x = v;
  }

  void check_finite(const std::string& who) const {
    for (const auto& x : data)
      if (!std::isfinite(static_cast<double>(x)))
        throw NumericError("non-finite value in " + who);
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.shape = shape;
    out.data.reserve(data.size());
    for (const auto& x : data) out.data.push_back(static_cast<U>(x));
    return out;
  }
};

// --- deterministic GEMM kernels -------------------------------------------
//
// Accumulation order along k is fixed per output element and does not depend
// on the number of rows in either operand, so a row of the result is bitwise
// reproducible when computed as part of a larger or smaller matrix.

// C[m,n] += A[m,k] * B[k,n]
template <typename T>
void gemm_nn_acc(const T* a, const T* b, T* c, std::size_t m, std::size_t k,
                 std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* ai = a + i * k;
    T* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T aip = ai[p];
      const T* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

// C[m,n] += A[m,k] * B[n,k]^T
template <typename T>
void gemm_nt_acc(const T* a, const T* b, T* c, std::size_t m, std::size_t k,
                 std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* ai = a + i * k;
    T* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const T* bj = b + j * k;
      T acc = T(0);
      for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] += acc;
    }
  }
}

// C[k,n] += A[m,k]^T * B[m,n]
template <typename T>
void gemm_tn_acc(const T* a, const T* b, T* c, std::size_t m, std::size_t k,
                 std::size_t n) {
  for (std::size_t r = 0; r < m; ++r) {
    const T* ar = a + r * k;
    const T* br = b + r * n;
    for (std::size_t i = 0; i < k; ++i) {
      const T ari = ar[i];
      T* ci = c + i * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += ari * br[j];
    }
  }
}

}  // namespace obsnet
