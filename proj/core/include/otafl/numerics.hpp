// Copyright 2026 The otafl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "otafl/errors.hpp"
#include "otafl/rng.hpp"

namespace otafl {

using Complex = std::complex<double>;

bool is_finite(double v) noexcept;
bool is_finite(const Complex& v) noexcept;

/// Fixed-length dense vector. Construction from data rejects NaN/Inf.
template <class T>
class DenseVector {
 public:
  DenseVector() = default;
  explicit DenseVector(std::size_t n) : data_(n) {}
  explicit DenseVector(std::vector<T> values) : data_(std::move(values)) {
    for (const T& v : data_) {
      if (!is_finite(v)) throw InvalidArgument("vector entry is not finite");
    }
  }
  DenseVector(std::initializer_list<T> values) : DenseVector(std::vector<T>(values)) {}

  std::size_t size() const noexcept { return data_.size(); }
  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }
  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::span<T> span() noexcept { return data_; }
  std::span<const T> span() const noexcept { return data_; }
  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  bool operator==(const DenseVector&) const = default;

 private:
  std::vector<T> data_;
};

/// Row-major dense matrix; complex entries are stored as interleaved
/// (re, im) pairs by std::complex.
template <class T>
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<T> values)
      : rows_(rows), cols_(cols), data_(std::move(values)) {
    if (data_.size() != rows_ * cols_) throw InvalidArgument("matrix data has wrong size");
    for (const T& v : data_) {
      if (!is_finite(v)) throw InvalidArgument("matrix entry is not finite");
    }
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
  std::span<T> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }
  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::span<const T> values() const noexcept { return data_; }

  bool operator==(const DenseMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using ComplexVector = DenseVector<Complex>;
using ComplexMatrix = DenseMatrix<Complex>;
using RealMatrix = DenseMatrix<double>;

/// Independent CN(0, variance) entries; variance 0 gives the zero vector.
ComplexVector sample_complex_gaussian(std::size_t dim, double per_element_variance, RngStream& rng);

/// sum_m conj(a_m) * b_m
Complex hermitian_inner(const ComplexVector& a, const ComplexVector& b);
Complex hermitian_inner(std::span<const Complex> a, std::span<const Complex> b);

/// Lower-triangular L with L L^H = A. Throws SingularMatrixError when a pivot
/// drops below 1e-14 of the leading pivot.
ComplexMatrix cholesky_factor(const ComplexMatrix& a);
RealMatrix cholesky_factor(const RealMatrix& a);

/// Solves A x = b for Hermitian positive definite A via Cholesky.
ComplexVector solve_hermitian_positive_system(const ComplexMatrix& a, const ComplexVector& b);

/// Forward/back substitution with an existing factor; rhs is overwritten.
void cholesky_solve_in_place(const ComplexMatrix& lower, std::span<Complex> rhs);
void cholesky_solve_in_place(const RealMatrix& lower, std::span<double> rhs);

/// Inverse of a symmetric positive definite matrix.
RealMatrix inverse_spd(const RealMatrix& a);

/// H^H H (cols x cols).
ComplexMatrix gram(const ComplexMatrix& h);

/// A * x for complex A and vector x.
ComplexVector multiply(const ComplexMatrix& a, const ComplexVector& x);

/// A^H * x.
ComplexVector adjoint_multiply(const ComplexMatrix& a, const ComplexVector& x);

/// C = A B^H for A (n x k), B (m x k).
ComplexMatrix multiply_adjoint(const ComplexMatrix& a, const ComplexMatrix& b);

double frobenius_norm(const ComplexMatrix& a);
double norm_squared(const ComplexVector& v);

/// Pairwise (cascade) summation; the reduction tree depends only on the
/// length, so results are independent of how the inputs were produced.
double pairwise_sum(std::span<const double> values);

}  // namespace otafl
