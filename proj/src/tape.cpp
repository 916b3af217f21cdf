// SPDX-License-Identifier: Apache-2.0

#include "irscf/tape.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "irscf/errors.hpp"

namespace irscf::ad {

namespace {

std::string dims(const RealTensor& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

void require_same(const RealTensor& a, const RealTensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + dims(a) + " vs " + dims(b));
  }
}

void require_same_tape(Var a, Var b) {
  if (a.tape() == nullptr || a.tape() != b.tape()) {
    throw ShapeError("operands live on different tapes");
  }
}

}  // namespace

const char* op_name(OpKind kind) noexcept {
  switch (kind) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kDiv: return "div";
    case OpKind::kAddRow: return "add_row";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kScale: return "scale";
    case OpKind::kAddScalar: return "add_scalar";
    case OpKind::kDivScalar: return "div_scalar";
    case OpKind::kSqrt: return "sqrt";
    case OpKind::kLog: return "log";
    case OpKind::kLog2: return "log2";
    case OpKind::kMaxSet: return "max_set";
    case OpKind::kLRelu: return "lrelu";
    case OpKind::kConcatCols: return "concat_cols";
    case OpKind::kConcatRows: return "concat_rows";
    case OpKind::kMean: return "mean";
    case OpKind::kSum: return "sum";
    case OpKind::kRowSum: return "row_sum";
    case OpKind::kSqMag: return "sq_mag";
    case OpKind::kSliceCols: return "slice_cols";
    case OpKind::kSliceRows: return "slice_rows";
    case OpKind::kReshape: return "reshape";
    case OpKind::kTranspose: return "transpose";
  }
  return "unknown";
}

double lrelu(double x) noexcept { return x >= 0.0 ? x : kLReluSlope * x; }

RealTensor lrelu(const RealTensor& x) {
  RealTensor out = x;
  for (double& v : out.data()) v = lrelu(v);
  return out;
}

const RealTensor& Var::value() const { return tape_->value(index_); }
const RealTensor& Var::grad() const { return tape_->adjoint(index_); }

Var Tape::parameter(RealTensor value) {
  Node node;
  node.value = std::move(value);
  node.needs_grad = true;
  return push(std::move(node));
}

Var Tape::constant(RealTensor value) {
  Node node;
  node.value = std::move(value);
  return push(std::move(node));
}

Var Tape::push(Node node) {
  if (node.kind != OpKind::kLeaf) {
    for (std::size_t p : node.parents) node.needs_grad = node.needs_grad || nodes_[p].needs_grad;
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

RealTensor& Tape::adjoint_of(std::size_t index) {
  Node& node = nodes_[index];
  if (node.adjoint.size() != node.value.size()) {
    node.adjoint = RealTensor(node.value.shape(), 0.0);
  }
  return node.adjoint;
}

// Kept as a friend so the free op functions can append nodes.
struct Builder {
  static Var make(Tape* tape, OpKind kind, std::vector<std::size_t> parents, RealTensor value) {
    Tape::Node node;
    node.kind = kind;
    node.parents = std::move(parents);
    node.value = std::move(value);
    return tape->push(std::move(node));
  }
  static Tape::Node& node(Var v) { return v.tape()->nodes_[v.index()]; }
};

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw ShapeError("backward: loss belongs to another tape");
  if (backward_done_) throw NumericError("backward called twice on the same tape");
  if (nodes_[loss.index()].value.size() != 1) {
    throw ShapeError("backward: loss must be a scalar, got " + dims(nodes_[loss.index()].value));
  }
  backward_done_ = true;
  for (Node& node : nodes_) node.adjoint = RealTensor(node.value.shape(), 0.0);
  nodes_[loss.index()].adjoint[0] = 1.0;
  for (std::size_t i = loss.index() + 1; i-- > 0;) {
    if (!nodes_[i].needs_grad) continue;
    if (!nodes_[i].adjoint.all_finite()) {
      throw NumericError(std::string("non-finite adjoint at ") + op_name(nodes_[i].kind), i);
    }
    propagate(i);
  }
}

void Tape::propagate(std::size_t index) {
  const Node& node = nodes_[index];
  const RealTensor& g = node.adjoint;
  const RealTensor& y = node.value;
  const auto& p = node.parents;
  auto wants = [&](std::size_t k) { return nodes_[p[k]].needs_grad; };

  switch (node.kind) {
    case OpKind::kLeaf:
      return;
    case OpKind::kAdd:
    case OpKind::kSub: {
      const double sign = node.kind == OpKind::kAdd ? 1.0 : -1.0;
      if (wants(0)) {
        RealTensor& a = adjoint_of(p[0]);
        for (std::size_t i = 0; i < g.size(); ++i) a[i] += g[i];
      }
      if (wants(1)) {
        RealTensor& b = adjoint_of(p[1]);
        for (std::size_t i = 0; i < g.size(); ++i) b[i] += sign * g[i];
      }
      return;
    }
    case OpKind::kMul: {
      const RealTensor& av = nodes_[p[0]].value;
      const RealTensor& bv = nodes_[p[1]].value;
      if (wants(0)) {
        RealTensor& a = adjoint_of(p[0]);
        for (std::size_t i = 0; i < g.size(); ++i) a[i] += g[i] * bv[i];
      }
      if (wants(1)) {
        RealTensor& b = adjoint_of(p[1]);
        for (std::size_t i = 0; i < g.size(); ++i) b[i] += g[i] * av[i];
      }
      return;
    }
    case OpKind::kDiv: {
      const RealTensor& bv = nodes_[p[1]].value;
      if (wants(0)) {
        RealTensor& a = adjoint_of(p[0]);
        for (std::size_t i = 0; i < g.size(); ++i) a[i] += g[i] / bv[i];
      }
      if (wants(1)) {
        RealTensor& b = adjoint_of(p[1]);
        for (std::size_t i = 0; i < g.size(); ++i) b[i] -= g[i] * y[i] / bv[i];
      }
      return;
    }
    case OpKind::kAddRow: {
      if (wants(0)) {
        RealTensor& a = adjoint_of(p[0]);
        for (std::size_t i = 0; i < g.size(); ++i) a[i] += g[i];
      }
      if (wants(1)) {
        RealTensor& b = adjoint_of(p[1]);
        const std::size_t cols = g.cols();
        for (std::size_t r = 0; r < g.rows(); ++r) {
          for (std::size_t c = 0; c < cols; ++c) b[c] += g(r, c);
        }
      }
      return;
    }
    case OpKind::kMatMul: {
      const RealTensor& av = nodes_[p[0]].value;
      const RealTensor& bv = nodes_[p[1]].value;
      const std::size_t n = av.rows();
      const std::size_t k = av.cols();
      const std::size_t m = bv.cols();
      if (wants(0)) {
        // dA = G B^T
        RealTensor& a = adjoint_of(p[0]);
        for (std::size_t r = 0; r < n; ++r) {
          for (std::size_t c = 0; c < m; ++c) {
            const double gv = g(r, c);
            if (gv == 0.0) continue;
            for (std::size_t j = 0; j < k; ++j) a(r, j) += gv * bv(j, c);
          }
        }
      }
      if (wants(1)) {
        // dB = A^T G
        RealTensor& b = adjoint_of(p[1]);
        for (std::size_t r = 0; r < n; ++r) {
          for (std::size_t j = 0; j < k; ++j) {
            const double av_rj = av(r, j);
            if (av_rj == 0.0) continue;
            for (std::size_t c = 0; c < m; ++c) b(j, c) += av_rj * g(r, c);
          }
        }
      }
      return;
    }
    case OpKind::kScale: {
      RealTensor& a = adjoint_of(p[0]);
      for (std::size_t i = 0; i < g.size(); ++i) a[i] += node.scalar * g[i];
      return;
    }
    case OpKind::kAddScalar: {
      RealTensor& a = adjoint_of(p[0]);
      for (std::size_t i = 0; i < g.size(); ++i) a[i] += g[i];
      return;
    }
    case OpKind::kDivScalar: {
      const double s = nodes_[p[1]].value[0];
      if (wants(0)) {
        RealTensor& a = adjoint_of(p[0]);
        for (std::size_t i = 0; i < g.size(); ++i) a[i] += g[i] / s;
      }
      if (wants(1)) {
        double acc = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * y[i];
        adjoint_of(p[1])[0] -= acc / s;
      }
      return;
    }
    case OpKind::kSqrt: {
      RealTensor& a = adjoint_of(p[0]);
      for (std::size_t i = 0; i < g.size(); ++i) a[i] += g[i] * 0.5 / y[i];
      return;
    }
    case OpKind::kLog:
    case OpKind::kLog2: {
      const double base = node.kind == OpKind::kLog ? 1.0 : std::numbers::ln2;
      const RealTensor& av = nodes_[p[0]].value;
      RealTensor& a = adjoint_of(p[0]);
      for (std::size_t i = 0; i < g.size(); ++i) a[i] += g[i] / (av[i] * base);
      return;
    }
    case OpKind::kMaxSet: {
      for (std::size_t i = 0; i < g.size(); ++i) {
        const std::size_t w = node.winner[i];
        if (wants(w)) adjoint_of(p[w])[i] += g[i];
      }
      return;
    }
    case OpKind::kLRelu: {
      const RealTensor& av = nodes_[p[0]].value;
      RealTensor& a = adjoint_of(p[0]);
      for (std::size_t i = 0; i < g.size(); ++i) a[i] += av[i] >= 0.0 ? g[i] : kLReluSlope * g[i];
      return;
    }
    case OpKind::kConcatCols: {
      std::size_t offset = 0;
      for (std::size_t k = 0; k < p.size(); ++k) {
        const std::size_t width = nodes_[p[k]].value.cols();
        if (wants(k)) {
          RealTensor& a = adjoint_of(p[k]);
          for (std::size_t r = 0; r < g.rows(); ++r) {
            for (std::size_t c = 0; c < width; ++c) a(r, c) += g(r, offset + c);
          }
        }
        offset += width;
      }
      return;
    }
    case OpKind::kConcatRows: {
      std::size_t offset = 0;
      for (std::size_t k = 0; k < p.size(); ++k) {
        const std::size_t count = nodes_[p[k]].value.size();
        if (wants(k)) {
          RealTensor& a = adjoint_of(p[k]);
          for (std::size_t i = 0; i < count; ++i) a[i] += g[offset + i];
        }
        offset += count;
      }
      return;
    }
    case OpKind::kMean:
    case OpKind::kSum: {
      RealTensor& a = adjoint_of(p[0]);
      const double factor = node.kind == OpKind::kMean ? g[0] / static_cast<double>(a.size()) : g[0];
      for (std::size_t i = 0; i < a.size(); ++i) a[i] += factor;
      return;
    }
    case OpKind::kRowSum: {
      RealTensor& a = adjoint_of(p[0]);
      const std::size_t cols = a.cols();
      for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t c = 0; c < cols; ++c) a(r, c) += g[r];
      }
      return;
    }
    case OpKind::kSqMag: {
      for (std::size_t k = 0; k < 2; ++k) {
        if (!wants(k)) continue;
        const RealTensor& xv = nodes_[p[k]].value;
        RealTensor& a = adjoint_of(p[k]);
        for (std::size_t i = 0; i < g.size(); ++i) a[i] += 2.0 * xv[i] * g[i];
      }
      return;
    }
    case OpKind::kSliceCols: {
      RealTensor& a = adjoint_of(p[0]);
      const std::size_t width = node.end - node.begin;
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < width; ++c) a(r, node.begin + c) += g(r, c);
      }
      return;
    }
    case OpKind::kSliceRows: {
      RealTensor& a = adjoint_of(p[0]);
      const std::size_t offset = node.begin * a.cols();
      for (std::size_t i = 0; i < g.size(); ++i) a[offset + i] += g[i];
      return;
    }
    case OpKind::kReshape: {
      RealTensor& a = adjoint_of(p[0]);
      for (std::size_t i = 0; i < g.size(); ++i) a[i] += g[i];
      return;
    }
    case OpKind::kTranspose: {
      RealTensor& a = adjoint_of(p[0]);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < g.cols(); ++c) a(c, r) += g(r, c);
      }
      return;
    }
  }
}

namespace {

template <typename F>
Var elementwise_binary(Var a, Var b, OpKind kind, const char* name, F f) {
  require_same_tape(a, b);
  const RealTensor& av = a.value();
  const RealTensor& bv = b.value();
  require_same(av, bv, name);
  RealTensor out = RealTensor::matrix(av.rows(), av.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i], bv[i]);
  return Builder::make(a.tape(), kind, {a.index(), b.index()}, std::move(out));
}

template <typename F>
Var elementwise_unary(Var a, OpKind kind, F f) {
  RealTensor out = RealTensor::matrix(a.rows(), a.cols());
  const RealTensor& av = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i]);
  return Builder::make(a.tape(), kind, {a.index()}, std::move(out));
}

}  // namespace

Var add(Var a, Var b) {
  return elementwise_binary(a, b, OpKind::kAdd, "add", [](double x, double y) { return x + y; });
}

Var sub(Var a, Var b) {
  return elementwise_binary(a, b, OpKind::kSub, "sub", [](double x, double y) { return x - y; });
}

Var mul(Var a, Var b) {
  return elementwise_binary(a, b, OpKind::kMul, "mul", [](double x, double y) { return x * y; });
}

Var div(Var a, Var b) {
  return elementwise_binary(a, b, OpKind::kDiv, "div", [](double x, double y) { return x / y; });
}

Var add_row(Var a, Var row) {
  require_same_tape(a, row);
  const RealTensor& av = a.value();
  const RealTensor& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols()) {
    throw ShapeError("add_row: expected 1x" + std::to_string(av.cols()) + " row, got " + dims(rv));
  }
  RealTensor out = RealTensor::matrix(av.rows(), av.cols());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    for (std::size_t c = 0; c < av.cols(); ++c) out(r, c) = av(r, c) + rv[c];
  }
  return Builder::make(a.tape(), OpKind::kAddRow, {a.index(), row.index()}, std::move(out));
}

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  const RealTensor& av = a.value();
  const RealTensor& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw ShapeError("matmul: " + dims(av) + " times " + dims(bv));
  }
  const std::size_t n = av.rows();
  const std::size_t k = av.cols();
  const std::size_t m = bv.cols();
  RealTensor out = RealTensor::matrix(n, m);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < k; ++j) {
      const double x = av(r, j);
      if (x == 0.0) continue;
      for (std::size_t c = 0; c < m; ++c) out(r, c) += x * bv(j, c);
    }
  }
  return Builder::make(a.tape(), OpKind::kMatMul, {a.index(), b.index()}, std::move(out));
}

Var scale(Var a, double factor) {
  Var out = elementwise_unary(a, OpKind::kScale, [factor](double x) { return factor * x; });
  Builder::node(out).scalar = factor;
  return out;
}

Var add_scalar(Var a, double shift) {
  Var out = elementwise_unary(a, OpKind::kAddScalar, [shift](double x) { return x + shift; });
  Builder::node(out).scalar = shift;
  return out;
}

Var div_scalar(Var a, Var s) {
  require_same_tape(a, s);
  if (s.value().size() != 1) throw ShapeError("div_scalar: divisor must hold one entry");
  const double d = s.value()[0];
  const RealTensor& av = a.value();
  RealTensor out = RealTensor::matrix(av.rows(), av.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] / d;
  return Builder::make(a.tape(), OpKind::kDivScalar, {a.index(), s.index()}, std::move(out));
}

Var sqrt(Var a) {
  return elementwise_unary(a, OpKind::kSqrt, [](double x) { return std::sqrt(x); });
}

Var log(Var a) {
  return elementwise_unary(a, OpKind::kLog, [](double x) { return std::log(x); });
}

Var log2(Var a) {
  return elementwise_unary(a, OpKind::kLog2, [](double x) { return std::log2(x); });
}

Var max_set(std::span<const Var> operands) {
  if (operands.empty()) throw ShapeError("max_set: no operands");
  const Var first = operands.front();
  for (const Var& v : operands) {
    require_same_tape(first, v);
    require_same(first.value(), v.value(), "max_set");
  }
  RealTensor out = first.value();
  std::vector<std::size_t> winner(out.size(), 0);
  for (std::size_t k = 1; k < operands.size(); ++k) {
    const RealTensor& v = operands[k].value();
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (v[i] > out[i]) {
        out[i] = v[i];
        winner[i] = k;
      }
    }
  }
  std::vector<std::size_t> parents;
  parents.reserve(operands.size());
  for (const Var& v : operands) parents.push_back(v.index());
  Var result = Builder::make(first.tape(), OpKind::kMaxSet, std::move(parents), std::move(out));
  Builder::node(result).winner = std::move(winner);
  return result;
}

Var lrelu(Var a) {
  return elementwise_unary(a, OpKind::kLRelu, [](double x) { return lrelu(x); });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const Var& v : parts) {
    require_same_tape(parts.front(), v);
    if (v.rows() != rows) throw ShapeError("concat_cols: row count mismatch");
    cols += v.cols();
  }
  RealTensor out = RealTensor::matrix(rows, cols);
  std::size_t offset = 0;
  std::vector<std::size_t> parents;
  for (const Var& v : parts) {
    const RealTensor& pv = v.value();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < pv.cols(); ++c) out(r, offset + c) = pv(r, c);
    }
    offset += pv.cols();
    parents.push_back(v.index());
  }
  return Builder::make(parts.front().tape(), OpKind::kConcatCols, std::move(parents),
                       std::move(out));
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no operands");
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (const Var& v : parts) {
    require_same_tape(parts.front(), v);
    if (v.cols() != cols) throw ShapeError("concat_rows: column count mismatch");
    rows += v.rows();
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  std::vector<std::size_t> parents;
  for (const Var& v : parts) {
    const auto src = v.value().data();
    data.insert(data.end(), src.begin(), src.end());
    parents.push_back(v.index());
  }
  return Builder::make(parts.front().tape(), OpKind::kConcatRows, std::move(parents),
                       RealTensor({rows, cols}, std::move(data)));
}

Var mean(Var a) {
  const RealTensor& av = a.value();
  double acc = 0.0;
  for (double x : av.data()) acc += x;
  return Builder::make(a.tape(), OpKind::kMean, {a.index()},
                       RealTensor::scalar(acc / static_cast<double>(av.size())));
}

Var sum(Var a) {
  double acc = 0.0;
  for (double x : a.value().data()) acc += x;
  return Builder::make(a.tape(), OpKind::kSum, {a.index()}, RealTensor::scalar(acc));
}

Var row_sum(Var a) {
  const RealTensor& av = a.value();
  RealTensor out = RealTensor::matrix(av.rows(), 1);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    for (std::size_t c = 0; c < av.cols(); ++c) out[r] += av(r, c);
  }
  return Builder::make(a.tape(), OpKind::kRowSum, {a.index()}, std::move(out));
}

Var sq_mag(Var re, Var im) {
  return elementwise_binary(re, im, OpKind::kSqMag, "sq_mag",
                            [](double x, double y) { return x * x + y * y; });
}

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
  const RealTensor& av = a.value();
  if (begin > end || end > av.cols()) throw ShapeError("slice_cols: range out of bounds");
  RealTensor out = RealTensor::matrix(av.rows(), end - begin);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    for (std::size_t c = begin; c < end; ++c) out(r, c - begin) = av(r, c);
  }
  Var result = Builder::make(a.tape(), OpKind::kSliceCols, {a.index()}, std::move(out));
  Builder::node(result).begin = begin;
  Builder::node(result).end = end;
  return result;
}

Var slice_rows(Var a, std::size_t begin, std::size_t end) {
  const RealTensor& av = a.value();
  if (begin > end || end > av.rows()) throw ShapeError("slice_rows: range out of bounds");
  const auto src = av.data();
  std::vector<double> data(src.begin() + static_cast<std::ptrdiff_t>(begin * av.cols()),
                           src.begin() + static_cast<std::ptrdiff_t>(end * av.cols()));
  Var result = Builder::make(a.tape(), OpKind::kSliceRows, {a.index()},
                             RealTensor({end - begin, av.cols()}, std::move(data)));
  Builder::node(result).begin = begin;
  Builder::node(result).end = end;
  return result;
}

Var reshape(Var a, std::size_t rows, std::size_t cols) {
  const RealTensor& av = a.value();
  if (rows * cols != av.size()) throw ShapeError("reshape: element count mismatch");
  return Builder::make(a.tape(), OpKind::kReshape, {a.index()},
                       RealTensor({rows, cols}, av.values()));
}

Var transpose(Var a) {
  const RealTensor& av = a.value();
  RealTensor out = RealTensor::matrix(av.cols(), av.rows());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    for (std::size_t c = 0; c < av.cols(); ++c) out(c, r) = av(r, c);
  }
  return Builder::make(a.tape(), OpKind::kTranspose, {a.index()}, std::move(out));
}

}  // namespace irscf::ad
