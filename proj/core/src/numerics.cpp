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

#include "otafl/numerics.hpp"

#include <cmath>

namespace otafl {

bool is_finite(double v) noexcept { return std::isfinite(v); }
bool is_finite(const Complex& v) noexcept { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

namespace {

inline double conj_if(double v) { return v; }
inline Complex conj_if(const Complex& v) { return std::conj(v); }
inline double real_of(double v) { return v; }
inline double real_of(const Complex& v) { return v.real(); }

template <class T>
DenseMatrix<T> cholesky_impl(const DenseMatrix<T>& a) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw InvalidArgument("cholesky: matrix is not square");
  DenseMatrix<T> l(n, n);
  if (n == 0) return l;
  const double leading = real_of(a(0, 0));
  if (!(leading > 0.0)) throw SingularMatrixError("cholesky: leading pivot is not positive");
  const double floor = 1e-14 * leading;
  for (std::size_t j = 0; j < n; ++j) {
    const T* lj = l.data() + j * n;
    double pivot = real_of(a(j, j));
    for (std::size_t k = 0; k < j; ++k) pivot -= std::norm(lj[k]);
    if (!(pivot > floor)) {
      throw SingularMatrixError("cholesky: pivot " + std::to_string(j) +
                                " below 1e-14 of the leading pivot");
    }
    const double diag = std::sqrt(pivot);
    l(j, j) = T(diag);
    // Row-oriented: L(i, j) = (A(i, j) - sum_k L(i, k) conj(L(j, k))) / L(j, j);
    // both rows are contiguous in memory.
    for (std::size_t i = j + 1; i < n; ++i) {
      const T* li = l.data() + i * n;
      T acc = a(i, j);
      for (std::size_t k = 0; k < j; ++k) acc -= li[k] * conj_if(lj[k]);
      l(i, j) = acc / diag;
    }
  }
  return l;
}

template <class T>
void solve_impl(const DenseMatrix<T>& l, std::span<T> rhs) {
  const std::size_t n = l.rows();
  if (rhs.size() != n) throw InvalidArgument("cholesky_solve: size mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    const T* li = l.data() + i * n;
    T acc = rhs[i];
    for (std::size_t k = 0; k < i; ++k) acc -= li[k] * rhs[k];
    rhs[i] = acc / li[i];
  }
  for (std::size_t ii = n; ii-- > 0;) {
    T acc = rhs[ii];
    for (std::size_t k = ii + 1; k < n; ++k) acc -= conj_if(l(k, ii)) * rhs[k];
    rhs[ii] = acc / conj_if(l(ii, ii));
  }
}

}  // namespace

ComplexVector sample_complex_gaussian(std::size_t dim, double per_element_variance, RngStream& rng) {
  if (!(per_element_variance >= 0.0) || !std::isfinite(per_element_variance)) {
    throw InvalidArgument("sample_complex_gaussian: variance must be finite and non-negative");
  }
  if (dim == 0) throw InvalidArgument("sample_complex_gaussian: dim must be positive");
  ComplexVector v(dim);
  for (std::size_t i = 0; i < dim; ++i) v[i] = rng.complex_normal(per_element_variance);
  return v;
}

Complex hermitian_inner(std::span<const Complex> a, std::span<const Complex> b) {
  if (a.size() != b.size()) throw InvalidArgument("hermitian_inner: length mismatch");
  double re = 0.0;
  double im = 0.0;
  for (std::size_t m = 0; m < a.size(); ++m) {
    // conj(a) * b
    re += a[m].real() * b[m].real() + a[m].imag() * b[m].imag();
    im += a[m].real() * b[m].imag() - a[m].imag() * b[m].real();
  }
  return {re, im};
}

Complex hermitian_inner(const ComplexVector& a, const ComplexVector& b) {
  return hermitian_inner(a.span(), b.span());
}

ComplexMatrix cholesky_factor(const ComplexMatrix& a) { return cholesky_impl(a); }
RealMatrix cholesky_factor(const RealMatrix& a) { return cholesky_impl(a); }

void cholesky_solve_in_place(const ComplexMatrix& lower, std::span<Complex> rhs) {
  solve_impl(lower, rhs);
}
void cholesky_solve_in_place(const RealMatrix& lower, std::span<double> rhs) {
  solve_impl(lower, rhs);
}

ComplexVector solve_hermitian_positive_system(const ComplexMatrix& a, const ComplexVector& b) {
  if (a.rows() != b.size()) throw InvalidArgument("solve: dimension mismatch");
  const ComplexMatrix l = cholesky_factor(a);
  ComplexVector x = b;
  cholesky_solve_in_place(l, x.span());
  return x;
}

RealMatrix inverse_spd(const RealMatrix& a) {
  const RealMatrix l = cholesky_factor(a);
  const std::size_t n = a.rows();
  RealMatrix inv(n, n);
  std::vector<double> column(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::fill(column.begin(), column.end(), 0.0);
    column[j] = 1.0;
    cholesky_solve_in_place(l, column);
    for (std::size_t i = 0; i < n; ++i) inv(i, j) = column[i];
  }
  return inv;
}

ComplexMatrix gram(const ComplexMatrix& h) {
  const std::size_t rows = h.rows();
  const std::size_t k = h.cols();
  ComplexMatrix g(k, k);
  for (std::size_t m = 0; m < rows; ++m) {
    const Complex* hm = h.data() + m * k;
    for (std::size_t i = 0; i < k; ++i) {
      const Complex ci = std::conj(hm[i]);
      for (std::size_t j = i; j < k; ++j) g(i, j) += ci * hm[j];
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    g(i, i) = Complex(g(i, i).real(), 0.0);
    for (std::size_t j = i + 1; j < k; ++j) g(j, i) = std::conj(g(i, j));
  }
  return g;
}

ComplexVector multiply(const ComplexMatrix& a, const ComplexVector& x) {
  if (a.cols() != x.size()) throw InvalidArgument("multiply: dimension mismatch");
  ComplexVector y(a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    Complex acc{};
    const Complex* ar = a.data() + r * a.cols();
    for (std::size_t c = 0; c < a.cols(); ++c) acc += ar[c] * x[c];
    y[r] = acc;
  }
  return y;
}

ComplexVector adjoint_multiply(const ComplexMatrix& a, const ComplexVector& x) {
  if (a.rows() != x.size()) throw InvalidArgument("adjoint_multiply: dimension mismatch");
  ComplexVector y(a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const Complex* ar = a.data() + r * a.cols();
    for (std::size_t c = 0; c < a.cols(); ++c) y[c] += std::conj(ar[c]) * x[r];
  }
  return y;
}

ComplexMatrix multiply_adjoint(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != b.cols()) throw InvalidArgument("multiply_adjoint: dimension mismatch");
  ComplexMatrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      c(i, j) = hermitian_inner(b.row(j), a.row(i));
    }
  }
  return c;
}

double frobenius_norm(const ComplexMatrix& a) {
  double s = 0.0;
  for (const Complex& v : a.values()) s += std::norm(v);
  return std::sqrt(s);
}

double norm_squared(const ComplexVector& v) {
  double s = 0.0;
  for (const Complex& x : v) s += std::norm(x);
  return s;
}

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kLeaf = 8;
  if (values.size() <= kLeaf) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace otafl
