// SPDX-License-Identifier: Apache-2.0

#include "irscf/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "irscf/errors.hpp"

namespace irscf {

std::size_t element_count(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

RealTensor::RealTensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

RealTensor::RealTensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != element_count(shape_)) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape");
  }
}

RealTensor RealTensor::matrix(std::size_t rows, std::size_t cols,
                              std::initializer_list<double> values) {
  return RealTensor({rows, cols}, std::vector<double>(values));
}

std::size_t RealTensor::rows() const noexcept {
  if (shape_.empty()) return 0;
  return shape_.size() == 1 ? 1 : shape_[0];
}

std::size_t RealTensor::cols() const noexcept {
  if (shape_.empty()) return 0;
  return shape_.back();
}

bool RealTensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

void RealTensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), re_(RealTensor::matrix(rows, cols)),
      im_(RealTensor::matrix(rows, cols)) {}

ComplexMatrix::ComplexMatrix(RealTensor re, RealTensor im)
    : rows_(re.rows()), cols_(re.cols()), re_(std::move(re)), im_(std::move(im)) {
  if (!re_.same_shape(im_) || re_.rank() != 2) {
    throw ShapeError("real and imaginary parts must be matrices of identical shape");
  }
}

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
  ComplexMatrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) out.re_(i, i) = 1.0;
  return out;
}

ComplexMatrix ComplexMatrix::from(std::size_t rows, std::size_t cols,
                                  std::initializer_list<cdouble> values) {
  if (values.size() != rows * cols) throw ShapeError("initializer size mismatch");
  ComplexMatrix out(rows, cols);
  std::size_t idx = 0;
  for (cdouble v : values) {
    out.set(idx / cols, idx % cols, v);
    ++idx;
  }
  return out;
}

ComplexMatrix ComplexMatrix::adjoint() const {
  ComplexMatrix out(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) {
      out.re_(c, r) = re_(r, c);
      out.im_(c, r) = -im_(r, c);
    }
  }
  return out;
}

ComplexMatrix ComplexMatrix::conj() const {
  ComplexMatrix out = *this;
  for (double& x : out.im_.data()) x = -x;
  return out;
}

ComplexMatrix ComplexMatrix::column(std::size_t c) const { return block(0, c, rows_, 1); }

ComplexMatrix ComplexMatrix::block(std::size_t row0, std::size_t col0, std::size_t rows,
                                   std::size_t cols) const {
  if (row0 + rows > rows_ || col0 + cols > cols_) throw ShapeError("block out of range");
  ComplexMatrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      out.re_(r, c) = re_(row0 + r, col0 + c);
      out.im_(r, c) = im_(row0 + r, col0 + c);
    }
  }
  return out;
}

void ComplexMatrix::set_column(std::size_t c, const ComplexMatrix& vec) {
  if (vec.rows() != rows_ || vec.cols() != 1 || c >= cols_) {
    throw ShapeError("set_column: shape mismatch");
  }
  for (std::size_t r = 0; r < rows_; ++r) set(r, c, vec(r, 0));
}

double ComplexMatrix::frobenius_norm_sq() const noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < re_.size(); ++i) acc += re_[i] * re_[i] + im_[i] * im_[i];
  return acc;
}

double ComplexMatrix::frobenius_norm() const noexcept { return std::sqrt(frobenius_norm_sq()); }

double ComplexMatrix::max_abs() const noexcept {
  double best = 0.0;
  for (std::size_t i = 0; i < re_.size(); ++i) best = std::max(best, std::hypot(re_[i], im_[i]));
  return best;
}

ComplexMatrix& ComplexMatrix::operator*=(cdouble s) {
  for (std::size_t i = 0; i < re_.size(); ++i) {
    const cdouble v = cdouble(re_[i], im_[i]) * s;
    re_[i] = v.real();
    im_[i] = v.imag();
  }
  return *this;
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& other) {
  if (other.rows_ != rows_ || other.cols_ != cols_) throw ShapeError("add: shape mismatch");
  for (std::size_t i = 0; i < re_.size(); ++i) {
    re_[i] += other.re_[i];
    im_[i] += other.im_[i];
  }
  return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& other) {
  if (other.rows_ != rows_ || other.cols_ != cols_) throw ShapeError("sub: shape mismatch");
  for (std::size_t i = 0; i < re_.size(); ++i) {
    re_[i] -= other.re_[i];
    im_[i] -= other.im_[i];
  }
  return *this;
}

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
ComplexMatrix operator*(ComplexMatrix a, cdouble s) { return a *= s; }

ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " times " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  ComplexMatrix out(a.rows(), b.cols());
  const RealTensor& ar = a.re();
  const RealTensor& ai = a.im();
  const RealTensor& br = b.re();
  const RealTensor& bi = b.im();
  RealTensor& orr = out.re();
  RealTensor& oi = out.im();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double xr = ar(r, k);
      const double xi = ai(r, k);
      for (std::size_t c = 0; c < b.cols(); ++c) {
        orr(r, c) += xr * br(k, c) - xi * bi(k, c);
        oi(r, c) += xr * bi(k, c) + xi * br(k, c);
      }
    }
  }
  return out;
}

cdouble inner(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != 1 || b.cols() != 1 || a.rows() != b.rows()) {
    throw ShapeError("inner: expected column vectors of equal length");
  }
  cdouble acc = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r) acc += std::conj(a(r, 0)) * b(r, 0);
  return acc;
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != 1 || b.cols() != 1) throw ShapeError("kron: expected column vectors");
  ComplexMatrix out(a.rows() * b.rows(), 1);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) out.set(i * b.rows() + j, 0, a(i, 0) * b(j, 0));
  }
  return out;
}

ComplexMatrix solve(ComplexMatrix a, ComplexMatrix b, double relative_pivot_tol) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.rows() != n) throw ShapeError("solve: expected square system");
  const double scale = a.max_abs();
  if (!(scale > 0.0)) throw SingularError("solve: zero matrix");
  const double threshold = relative_pivot_tol * scale;

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    double best = std::abs(a(col, col));
    for (std::size_t r = col + 1; r < n; ++r) {
      const double mag = std::abs(a(r, col));
      if (mag > best) {
        best = mag;
        pivot = r;
      }
    }
    if (best < threshold) {
      throw SingularError("solve: pivot " + std::to_string(best) + " below threshold in column " +
                          std::to_string(col));
    }
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) {
        const cdouble tmp = a(col, c);
        a.set(col, c, a(pivot, c));
        a.set(pivot, c, tmp);
      }
      for (std::size_t c = 0; c < b.cols(); ++c) {
        const cdouble tmp = b(col, c);
        b.set(col, c, b(pivot, c));
        b.set(pivot, c, tmp);
      }
    }
    const cdouble diag = a(col, col);
    for (std::size_t r = col + 1; r < n; ++r) {
      const cdouble factor = a(r, col) / diag;
      if (factor == cdouble{}) continue;
      for (std::size_t c = col; c < n; ++c) a.add(r, c, -factor * a(col, c));
      for (std::size_t c = 0; c < b.cols(); ++c) b.add(r, c, -factor * b(col, c));
    }
  }

  ComplexMatrix x(n, b.cols());
  for (std::size_t c = 0; c < b.cols(); ++c) {
    for (std::size_t r = n; r-- > 0;) {
      cdouble acc = b(r, c);
      for (std::size_t k = r + 1; k < n; ++k) acc -= a(r, k) * x(k, c);
      x.set(r, c, acc / a(r, r));
    }
  }
  return x;
}

ComplexMatrix hermitian_solve_pinv(const ComplexMatrix& h) {
  if (h.cols() > h.rows()) {
    throw SingularError("pinv: more columns (" + std::to_string(h.cols()) + ") than rows (" +
                        std::to_string(h.rows()) + ")");
  }
  const ComplexMatrix gram = matmul(h.adjoint(), h);
  // (H^H H)^{-1} is Hermitian, so H G^{-1} = (G^{-1} H^H)^H.
  const ComplexMatrix g_inv_hh = solve(gram, h.adjoint());
  return g_inv_hh.adjoint();
}

}  // namespace irscf
