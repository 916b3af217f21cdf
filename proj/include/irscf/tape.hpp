// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "irscf/tensor.hpp"

// Reverse-mode differentiation over real rank-2 tensors. Complex arithmetic is
// written out as compositions of real operations by the callers.
namespace irscf::ad {

enum class OpKind {
  kLeaf,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kAddRow,
  kMatMul,
  kScale,
  kAddScalar,
  kDivScalar,
  kSqrt,
  kLog,
  kLog2,
  kMaxSet,
  kLRelu,
  kConcatCols,
  kConcatRows,
  kMean,
  kSum,
  kRowSum,
  kSqMag,
  kSliceCols,
  kSliceRows,
  kReshape,
  kTranspose,
};

const char* op_name(OpKind kind) noexcept;

inline constexpr double kLReluSlope = 0.1;

class Tape;

/// Handle to a node on a tape. Cheap to copy; the tape must outlive it.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t index) : tape_(tape), index_(index) {}

  Tape* tape() const noexcept { return tape_; }
  std::size_t index() const noexcept { return index_; }
  const RealTensor& value() const;
  const RealTensor& grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  Tape* tape_ = nullptr;
  std::size_t index_ = 0;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf whose adjoint is tracked.
  Var parameter(RealTensor value);
  /// Leaf excluded from differentiation.
  Var constant(RealTensor value);

  std::size_t size() const noexcept { return nodes_.size(); }
  OpKind kind(std::size_t node) const { return nodes_.at(node).kind; }
  const RealTensor& value(std::size_t node) const { return nodes_.at(node).value; }
  const RealTensor& adjoint(std::size_t node) const { return nodes_.at(node).adjoint; }
  bool needs_grad(std::size_t node) const { return nodes_.at(node).needs_grad; }

  /// Seeds d(loss)/d(loss) = 1 and propagates adjoints to every node that
  /// depends on a parameter. Throws NumericError naming the first node whose
  /// adjoint turns non-finite. May be called once per tape.
  void backward(Var loss);

 private:
  friend struct Builder;

  struct Node {
    OpKind kind = OpKind::kLeaf;
    std::vector<std::size_t> parents;
    RealTensor value;
    RealTensor adjoint;
    bool needs_grad = false;
    double scalar = 0.0;
    std::size_t begin = 0;
    std::size_t end = 0;
    std::vector<std::size_t> winner;  // kMaxSet: operand chosen per element
  };

  Var push(Node node);
  void propagate(std::size_t index);
  RealTensor& adjoint_of(std::size_t index);

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
/// Adds a 1 x c row to every row of an r x c matrix.
Var add_row(Var a, Var row);
Var matmul(Var a, Var b);
Var scale(Var a, double factor);
Var add_scalar(Var a, double shift);
/// Divides every entry of a by the single entry of s.
Var div_scalar(Var a, Var s);
Var sqrt(Var a);
Var log(Var a);
Var log2(Var a);
/// Element-wise maximum over same-shaped operands. The whole adjoint of each
/// element goes to the winning operand; ties go to the lowest operand index.
Var max_set(std::span<const Var> operands);
Var lrelu(Var a);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var mean(Var a);
Var sum(Var a);
Var row_sum(Var a);
/// re^2 + im^2 entry-wise.
Var sq_mag(Var re, Var im);
Var slice_cols(Var a, std::size_t begin, std::size_t end);
Var slice_rows(Var a, std::size_t begin, std::size_t end);
Var reshape(Var a, std::size_t rows, std::size_t cols);
Var transpose(Var a);

/// Plain-number LReLU, kept next to its tape twin so both share the slope.
double lrelu(double x) noexcept;
RealTensor lrelu(const RealTensor& x);

}  // namespace irscf::ad
