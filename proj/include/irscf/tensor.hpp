// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace irscf {

using cdouble = std::complex<double>;

/// Dense row-major tensor of doubles. Most of the code only uses rank 2.
class RealTensor {
 public:
  RealTensor() = default;
  explicit RealTensor(std::vector<std::size_t> shape, double fill = 0.0);
  RealTensor(std::vector<std::size_t> shape, std::vector<double> data);

  static RealTensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
    return RealTensor({rows, cols}, fill);
  }
  static RealTensor matrix(std::size_t rows, std::size_t cols,
                           std::initializer_list<double> values);
  static RealTensor scalar(double value) { return RealTensor({1, 1}, value); }

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t rank() const noexcept { return shape_.size(); }

  // Rank-2 view; rank-1 tensors read as a single row.
  std::size_t rows() const noexcept;
  std::size_t cols() const noexcept;

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  bool same_shape(const RealTensor& other) const noexcept { return shape_ == other.shape_; }
  bool all_finite() const noexcept;
  void fill(double value);

  bool operator==(const RealTensor& other) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

std::size_t element_count(const std::vector<std::size_t>& shape);

/// Complex matrix with split real/imaginary storage.
class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  ComplexMatrix(std::size_t rows, std::size_t cols);
  ComplexMatrix(RealTensor re, RealTensor im);

  static ComplexMatrix identity(std::size_t n);
  static ComplexMatrix from(std::size_t rows, std::size_t cols,
                            std::initializer_list<cdouble> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  cdouble operator()(std::size_t r, std::size_t c) const {
    return {re_(r, c), im_(r, c)};
  }
  void set(std::size_t r, std::size_t c, cdouble value) {
    re_(r, c) = value.real();
    im_(r, c) = value.imag();
  }
  void add(std::size_t r, std::size_t c, cdouble value) {
    re_(r, c) += value.real();
    im_(r, c) += value.imag();
  }

  const RealTensor& re() const noexcept { return re_; }
  const RealTensor& im() const noexcept { return im_; }
  RealTensor& re() noexcept { return re_; }
  RealTensor& im() noexcept { return im_; }

  ComplexMatrix adjoint() const;
  ComplexMatrix conj() const;
  ComplexMatrix column(std::size_t c) const;
  ComplexMatrix block(std::size_t row0, std::size_t col0, std::size_t rows,
                      std::size_t cols) const;
  void set_column(std::size_t c, const ComplexMatrix& vec);

  double frobenius_norm_sq() const noexcept;
  double frobenius_norm() const noexcept;
  double max_abs() const noexcept;
  bool all_finite() const noexcept { return re_.all_finite() && im_.all_finite(); }

  ComplexMatrix& operator*=(cdouble s);
  ComplexMatrix& operator+=(const ComplexMatrix& other);
  ComplexMatrix& operator-=(const ComplexMatrix& other);

  bool operator==(const ComplexMatrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  RealTensor re_;
  RealTensor im_;
};

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator*(ComplexMatrix a, cdouble s);

/// Complex product a * b. Throws ShapeError on a.cols() != b.rows().
ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b);

/// Hermitian inner product a^H b of two column vectors.
cdouble inner(const ComplexMatrix& a, const ComplexMatrix& b);

/// Kronecker product of two column vectors.
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

/// Returns H (H^H H)^{-1} for a tall full-column-rank H. The K x K Gram system
/// is solved by Gaussian elimination with partial pivoting; a pivot below
/// 1e-12 times the largest Gram entry raises SingularError.
ComplexMatrix hermitian_solve_pinv(const ComplexMatrix& h);

/// Solves A X = B for square A by Gaussian elimination with partial pivoting.
ComplexMatrix solve(ComplexMatrix a, ComplexMatrix b, double relative_pivot_tol = 1e-12);

}  // namespace irscf
