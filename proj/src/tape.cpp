#include "dagaf/tape.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <unordered_map>

#include "dagaf/errors.hpp"

namespace dagaf {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<EMat>;
using CMap = Eigen::Map<const EMat>;

CMap view(const Matrix& m) {
  return CMap(m.data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
}

Map view(Matrix& m) {
  return Map(m.data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
}

}  // namespace

const char* Tape::opName(Op op) {
  switch (op) {
    case Op::Const: return "const";
    case Op::Input: return "input";
    case Op::Leaf: return "leaf";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::MulConst: return "mul_const";
    case Op::Affine: return "affine";
    case Op::MatMul: return "matmul";
    case Op::Transpose: return "transpose";
    case Op::AddRowVec: return "add_rowvec";
    case Op::ColSum: return "colsum";
    case Op::RowSum: return "rowsum";
    case Op::BroadcastRow: return "broadcast_row";
    case Op::BroadcastCol: return "broadcast_col";
    case Op::Fill: return "fill";
    case Op::SumAll: return "sum_all";
    case Op::Sigmoid: return "sigmoid";
    case Op::Relu: return "relu";
    case Op::LeakyRelu: return "leaky_relu";
    case Op::Exp: return "exp";
    case Op::SqrtEps: return "sqrt";
    case Op::Square: return "square";
    case Op::ConcatCols: return "concat_cols";
    case Op::ConcatRows: return "concat_rows";
    case Op::SliceCols: return "slice_cols";
    case Op::SliceRows: return "slice_rows";
    case Op::PadCols: return "pad_cols";
    case Op::PadRows: return "pad_rows";
    case Op::AcycSquared: return "acyclicity_squared";
    case Op::AcycAdj: return "acyclicity_adjacency";
  }
  return "?";
}

void Tape::checkFinite(const Node& n) const {
  if (!n.value.allFinite()) {
    throw NumericError(std::string("non-finite value produced by op '") + opName(n.op) + "'");
  }
}

Tape::Id Tape::push(Node n) {
  checkFinite(n);
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size() - 1);
}

Tape::Id Tape::record(Op op, std::vector<Id> parents, Matrix value) {
  Node n;
  n.op = op;
  n.parents = std::move(parents);
  n.value = std::move(value);
  for (Id p : n.parents) {
    if (node(p).needsGrad) {
      n.needsGrad = true;
      break;
    }
  }
  return push(std::move(n));
}

Tape::Id Tape::constant(Matrix v) {
  Node n;
  n.op = Op::Const;
  n.value = std::move(v);
  return push(std::move(n));
}

Tape::Id Tape::input(Matrix v) {
  Node n;
  n.op = Op::Input;
  n.value = std::move(v);
  n.needsGrad = true;
  return push(std::move(n));
}

Tape::Id Tape::leaf(Param& p) {
  auto it = leafCache_.find(&p);
  if (it != leafCache_.end()) return it->second;
  Node n;
  n.op = Op::Leaf;
  n.value = p.value;
  n.param = &p;
  n.needsGrad = !p.frozen;
  const Id id = push(std::move(n));
  leafCache_.emplace(&p, id);
  return id;
}

Tape::Id Tape::add(Id a, Id b) {
  const Matrix& va = value(a);
  const Matrix& vb = value(b);
  if (!va.sameShape(vb)) throw ShapeError("add: shape mismatch");
  Matrix out(va.rows(), va.cols());
  view(out) = view(va) + view(vb);
  return record(Op::Add, {a, b}, std::move(out));
}

Tape::Id Tape::sub(Id a, Id b) {
  const Matrix& va = value(a);
  const Matrix& vb = value(b);
  if (!va.sameShape(vb)) throw ShapeError("sub: shape mismatch");
  Matrix out(va.rows(), va.cols());
  view(out) = view(va) - view(vb);
  return record(Op::Sub, {a, b}, std::move(out));
}

Tape::Id Tape::mul(Id a, Id b) {
  const Matrix& va = value(a);
  const Matrix& vb = value(b);
  if (!va.sameShape(vb)) throw ShapeError("mul: shape mismatch");
  Matrix out(va.rows(), va.cols());
  view(out) = view(va).cwiseProduct(view(vb));
  return record(Op::Mul, {a, b}, std::move(out));
}

Tape::Id Tape::div(Id a, Id b) {
  const Matrix& va = value(a);
  const Matrix& vb = value(b);
  if (!va.sameShape(vb)) throw ShapeError("div: shape mismatch");
  Matrix out(va.rows(), va.cols());
  view(out) = view(va).cwiseQuotient(view(vb));
  return record(Op::Div, {a, b}, std::move(out));
}

Tape::Id Tape::mulConst(Id a, Matrix mask) {
  const Matrix& va = value(a);
  if (!va.sameShape(mask)) throw ShapeError("mul_const: shape mismatch");
  Matrix out(va.rows(), va.cols());
  view(out) = view(va).cwiseProduct(view(mask));
  Node n;
  n.op = Op::MulConst;
  n.parents = {a};
  n.value = std::move(out);
  n.aux = std::move(mask);
  n.needsGrad = node(a).needsGrad;
  return push(std::move(n));
}

Tape::Id Tape::affine(Id a, double scale, double shift) {
  const Matrix& va = value(a);
  Matrix out(va.rows(), va.cols());
  view(out) = view(va).array() * scale + shift;
  Node n;
  n.op = Op::Affine;
  n.parents = {a};
  n.value = std::move(out);
  n.s0 = scale;
  n.s1 = shift;
  n.needsGrad = node(a).needsGrad;
  return push(std::move(n));
}

Tape::Id Tape::matmul(Id a, Id b) {
  const Matrix& va = value(a);
  const Matrix& vb = value(b);
  if (va.cols() != vb.rows()) throw ShapeError("matmul: inner dimensions differ");
  Matrix out(va.rows(), vb.cols());
  view(out).noalias() = view(va) * view(vb);
  return record(Op::MatMul, {a, b}, std::move(out));
}

Tape::Id Tape::transpose(Id a) {
  const Matrix& va = value(a);
  Matrix out(va.cols(), va.rows());
  view(out) = view(va).transpose();
  return record(Op::Transpose, {a}, std::move(out));
}

Tape::Id Tape::addRowVec(Id a, Id row) {
  const Matrix& va = value(a);
  const Matrix& vr = value(row);
  if (vr.rows() != 1 || vr.cols() != va.cols()) throw ShapeError("add_rowvec: row shape mismatch");
  Matrix out(va.rows(), va.cols());
  view(out) = view(va).rowwise() + view(vr).row(0);
  return record(Op::AddRowVec, {a, row}, std::move(out));
}

Tape::Id Tape::colSum(Id a) {
  const Matrix& va = value(a);
  Matrix out(1, va.cols());
  view(out) = view(va).colwise().sum();
  return record(Op::ColSum, {a}, std::move(out));
}

Tape::Id Tape::rowSum(Id a) {
  const Matrix& va = value(a);
  Matrix out(va.rows(), 1);
  view(out) = view(va).rowwise().sum();
  return record(Op::RowSum, {a}, std::move(out));
}

Tape::Id Tape::broadcastRow(Id row, std::size_t rows) {
  const Matrix& vr = value(row);
  if (vr.rows() != 1) throw ShapeError("broadcast_row: 1xm operand required");
  Matrix out(rows, vr.cols());
  view(out) = view(vr).row(0).replicate(static_cast<Eigen::Index>(rows), 1);
  Node n;
  n.op = Op::BroadcastRow;
  n.parents = {row};
  n.value = std::move(out);
  n.i0 = static_cast<std::int32_t>(rows);
  n.needsGrad = node(row).needsGrad;
  return push(std::move(n));
}

Tape::Id Tape::broadcastCol(Id col, std::size_t cols) {
  const Matrix& vc = value(col);
  if (vc.cols() != 1) throw ShapeError("broadcast_col: nx1 operand required");
  Matrix out(vc.rows(), cols);
  view(out) = view(vc).col(0).replicate(1, static_cast<Eigen::Index>(cols));
  Node n;
  n.op = Op::BroadcastCol;
  n.parents = {col};
  n.value = std::move(out);
  n.i0 = static_cast<std::int32_t>(cols);
  n.needsGrad = node(col).needsGrad;
  return push(std::move(n));
}

Tape::Id Tape::fill(Id scalar, std::size_t rows, std::size_t cols) {
  const Matrix& vs = value(scalar);
  if (vs.size() != 1) throw ShapeError("fill: scalar operand required");
  Matrix out(rows, cols, vs(0, 0));
  Node n;
  n.op = Op::Fill;
  n.parents = {scalar};
  n.value = std::move(out);
  n.i0 = static_cast<std::int32_t>(rows);
  n.i1 = static_cast<std::int32_t>(cols);
  n.needsGrad = node(scalar).needsGrad;
  return push(std::move(n));
}

Tape::Id Tape::sumAll(Id a) {
  return record(Op::SumAll, {a}, Matrix::scalar(view(value(a)).sum()));
}

Tape::Id Tape::sigmoid(Id a) {
  const Matrix& va = value(a);
  Matrix out(va.rows(), va.cols());
  view(out) = (1.0 / (1.0 + (-view(va).array()).exp())).matrix();
  return record(Op::Sigmoid, {a}, std::move(out));
}

Tape::Id Tape::relu(Id a) {
  const Matrix& va = value(a);
  Matrix out(va.rows(), va.cols());
  view(out) = view(va).cwiseMax(0.0);
  return record(Op::Relu, {a}, std::move(out));
}

Tape::Id Tape::leakyRelu(Id a, double slope) {
  const Matrix& va = value(a);
  Matrix out(va.rows(), va.cols());
  view(out) = view(va).array().max(view(va).array() * slope).matrix();
  Node n;
  n.op = Op::LeakyRelu;
  n.parents = {a};
  n.value = std::move(out);
  n.s0 = slope;
  n.needsGrad = node(a).needsGrad;
  return push(std::move(n));
}

Tape::Id Tape::expOp(Id a) {
  const Matrix& va = value(a);
  Matrix out(va.rows(), va.cols());
  view(out) = view(va).array().exp().matrix();
  return record(Op::Exp, {a}, std::move(out));
}

Tape::Id Tape::sqrtEps(Id a, double eps) {
  const Matrix& va = value(a);
  Matrix out(va.rows(), va.cols());
  view(out) = (view(va).array() + eps).sqrt().matrix();
  Node n;
  n.op = Op::SqrtEps;
  n.parents = {a};
  n.value = std::move(out);
  n.s0 = eps;
  n.needsGrad = node(a).needsGrad;
  return push(std::move(n));
}

Tape::Id Tape::square(Id a) {
  const Matrix& va = value(a);
  Matrix out(va.rows(), va.cols());
  view(out) = view(va).array().square().matrix();
  return record(Op::Square, {a}, std::move(out));
}

Tape::Id Tape::concatCols(const std::vector<Id>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  const std::size_t rows = value(parts[0]).rows();
  std::size_t cols = 0;
  for (Id p : parts) {
    if (value(p).rows() != rows) throw ShapeError("concat_cols: row count mismatch");
    cols += value(p).cols();
  }
  Matrix out(rows, cols);
  std::size_t off = 0;
  for (Id p : parts) {
    const Matrix& vp = value(p);
    view(out).middleCols(static_cast<Eigen::Index>(off), static_cast<Eigen::Index>(vp.cols())) =
        view(vp);
    off += vp.cols();
  }
  return record(Op::ConcatCols, parts, std::move(out));
}

Tape::Id Tape::concatRows(const std::vector<Id>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no operands");
  const std::size_t cols = value(parts[0]).cols();
  std::size_t rows = 0;
  for (Id p : parts) {
    if (value(p).cols() != cols) throw ShapeError("concat_rows: column count mismatch");
    rows += value(p).rows();
  }
  Matrix out(rows, cols);
  std::size_t off = 0;
  for (Id p : parts) {
    const Matrix& vp = value(p);
    view(out).middleRows(static_cast<Eigen::Index>(off), static_cast<Eigen::Index>(vp.rows())) =
        view(vp);
    off += vp.rows();
  }
  return record(Op::ConcatRows, parts, std::move(out));
}

Tape::Id Tape::sliceCols(Id a, std::size_t first, std::size_t count) {
  const Matrix& va = value(a);
  if (first + count > va.cols()) throw ShapeError("slice_cols: out of range");
  Matrix out(va.rows(), count);
  view(out) = view(va).middleCols(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count));
  Node n;
  n.op = Op::SliceCols;
  n.parents = {a};
  n.value = std::move(out);
  n.i0 = static_cast<std::int32_t>(first);
  n.i1 = static_cast<std::int32_t>(va.cols());
  n.needsGrad = node(a).needsGrad;
  return push(std::move(n));
}

Tape::Id Tape::sliceRows(Id a, std::size_t first, std::size_t count) {
  const Matrix& va = value(a);
  if (first + count > va.rows()) throw ShapeError("slice_rows: out of range");
  Matrix out(count, va.cols());
  view(out) = view(va).middleRows(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count));
  Node n;
  n.op = Op::SliceRows;
  n.parents = {a};
  n.value = std::move(out);
  n.i0 = static_cast<std::int32_t>(first);
  n.i1 = static_cast<std::int32_t>(va.rows());
  n.needsGrad = node(a).needsGrad;
  return push(std::move(n));
}

Tape::Id Tape::padCols(Id a, std::size_t first, std::size_t total) {
  const Matrix& va = value(a);
  if (first + va.cols() > total) throw ShapeError("pad_cols: out of range");
  Matrix out(va.rows(), total, 0.0);
  view(out).middleCols(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(va.cols())) =
      view(va);
  Node n;
  n.op = Op::PadCols;
  n.parents = {a};
  n.value = std::move(out);
  n.i0 = static_cast<std::int32_t>(first);
  n.i1 = static_cast<std::int32_t>(va.cols());
  n.needsGrad = node(a).needsGrad;
  return push(std::move(n));
}

Tape::Id Tape::padRows(Id a, std::size_t first, std::size_t total) {
  const Matrix& va = value(a);
  if (first + va.rows() > total) throw ShapeError("pad_rows: out of range");
  Matrix out(total, va.cols(), 0.0);
  view(out).middleRows(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(va.rows())) =
      view(va);
  Node n;
  n.op = Op::PadRows;
  n.parents = {a};
  n.value = std::move(out);
  n.i0 = static_cast<std::int32_t>(first);
  n.i1 = static_cast<std::int32_t>(va.rows());
  n.needsGrad = node(a).needsGrad;
  return push(std::move(n));
}

Tape::Id Tape::acyclicityFromSquared(Id s) {
  const Matrix& vs = value(s);
  if (vs.rows() != vs.cols()) throw ShapeError("acyclicity: square matrix required");
  Matrix e = matrixExp(vs);
  double trace = 0.0;
  for (std::size_t i = 0; i < vs.rows(); ++i) trace += e(i, i);
  Node n;
  n.op = Op::AcycSquared;
  n.parents = {s};
  n.value = Matrix::scalar(trace - static_cast<double>(vs.rows()));
  n.aux = transposed(e);
  n.needsGrad = node(s).needsGrad;
  return push(std::move(n));
}

Tape::Id Tape::acyclicityOfAdjacency(Id a) {
  const Matrix& va = value(a);
  if (va.rows() != va.cols()) throw ShapeError("acyclicity: square matrix required");
  const std::size_t d = va.rows();
  Matrix hada(d, d);
  view(hada) = view(va).array().square().matrix();
  Matrix e = matrixExp(hada);
  double trace = 0.0;
  for (std::size_t i = 0; i < d; ++i) trace += e(i, i);
  Matrix gradFactor(d, d);
  view(gradFactor) = view(e).transpose().cwiseProduct(2.0 * view(va));
  Node n;
  n.op = Op::AcycAdj;
  n.parents = {a};
  n.value = Matrix::scalar(trace - static_cast<double>(d));
  n.aux = std::move(gradFactor);
  n.needsGrad = node(a).needsGrad;
  return push(std::move(n));
}

double Tape::scalarValue(Id id) const {
  const Matrix& v = value(id);
  if (v.size() != 1) throw ShapeError("scalarValue: node is not 1x1");
  return v(0, 0);
}

void Tape::emitVjp(Id id, Id g, std::vector<std::vector<Id>>& contrib) {
  // Copy node fields: appending vjp nodes may reallocate nodes_, so no
  // reference into it can be held across an emission.
  const Node n = [&] {
    Node c;
    const Node& src = node(id);
    c.op = src.op;
    c.parents = src.parents;
    c.s0 = src.s0;
    c.s1 = src.s1;
    c.i0 = src.i0;
    c.i1 = src.i1;
    return c;
  }();
  auto give = [&](Id parent, Id gradNode) {
    if (node(parent).needsGrad) contrib[static_cast<std::size_t>(parent)].push_back(gradNode);
  };
  auto wants = [&](std::size_t k) { return node(n.parents[k]).needsGrad; };

  switch (n.op) {
    case Op::Const:
    case Op::Input:
    case Op::Leaf:
      break;
    case Op::Add:
      give(n.parents[0], g);
      give(n.parents[1], g);
      break;
    case Op::Sub:
      give(n.parents[0], g);
      if (wants(1)) give(n.parents[1], neg(g));
      break;
    case Op::Mul:
      if (wants(0)) give(n.parents[0], mul(g, n.parents[1]));
      if (wants(1)) give(n.parents[1], mul(g, n.parents[0]));
      break;
    case Op::Div:
      if (wants(0)) give(n.parents[0], div(g, n.parents[1]));
      if (wants(1)) give(n.parents[1], neg(div(mul(g, id), n.parents[1])));
      break;
    case Op::MulConst:
      if (wants(0)) give(n.parents[0], mulConst(g, node(id).aux));
      break;
    case Op::Affine:
      if (wants(0)) give(n.parents[0], affine(g, n.s0, 0.0));
      break;
    case Op::MatMul:
      if (wants(0)) give(n.parents[0], matmul(g, transpose(n.parents[1])));
      if (wants(1)) give(n.parents[1], matmul(transpose(n.parents[0]), g));
      break;
    case Op::Transpose:
      if (wants(0)) give(n.parents[0], transpose(g));
      break;
    case Op::AddRowVec:
      give(n.parents[0], g);
      if (wants(1)) give(n.parents[1], colSum(g));
      break;
    case Op::ColSum:
      if (wants(0)) give(n.parents[0], broadcastRow(g, value(n.parents[0]).rows()));
      break;
    case Op::RowSum:
      if (wants(0)) give(n.parents[0], broadcastCol(g, value(n.parents[0]).cols()));
      break;
    case Op::BroadcastRow:
      if (wants(0)) give(n.parents[0], colSum(g));
      break;
    case Op::BroadcastCol:
      if (wants(0)) give(n.parents[0], rowSum(g));
      break;
    case Op::Fill:
      if (wants(0)) give(n.parents[0], sumAll(g));
      break;
    case Op::SumAll:
      if (wants(0)) {
        const std::size_t rows = value(n.parents[0]).rows();
        const std::size_t cols = value(n.parents[0]).cols();
        give(n.parents[0], fill(g, rows, cols));
      }
      break;
    case Op::Sigmoid:
      if (wants(0)) give(n.parents[0], mul(g, mul(id, affine(id, -1.0, 1.0))));
      break;
    case Op::Relu: {
      if (!wants(0)) break;
      const Matrix& pv = value(n.parents[0]);
      Matrix mask(pv.rows(), pv.cols());
      for (std::size_t i = 0; i < pv.size(); ++i) mask.data()[i] = pv.data()[i] > 0.0 ? 1.0 : 0.0;
      give(n.parents[0], mulConst(g, std::move(mask)));
      break;
    }
    case Op::LeakyRelu: {
      if (!wants(0)) break;
      const Matrix& pv = value(n.parents[0]);
      Matrix mask(pv.rows(), pv.cols());
      for (std::size_t i = 0; i < pv.size(); ++i)
        mask.data()[i] = pv.data()[i] > 0.0 ? 1.0 : n.s0;
      give(n.parents[0], mulConst(g, std::move(mask)));
      break;
    }
    case Op::Exp:
      if (wants(0)) give(n.parents[0], mul(g, id));
      break;
    case Op::SqrtEps:
      if (wants(0)) give(n.parents[0], div(affine(g, 0.5, 0.0), id));
      break;
    case Op::Square:
      if (wants(0)) give(n.parents[0], mul(g, affine(n.parents[0], 2.0, 0.0)));
      break;
    case Op::ConcatCols: {
      std::size_t off = 0;
      for (std::size_t k = 0; k < n.parents.size(); ++k) {
        const std::size_t w = value(n.parents[k]).cols();
        if (wants(k)) give(n.parents[k], sliceCols(g, off, w));
        off += w;
      }
      break;
    }
    case Op::ConcatRows: {
      std::size_t off = 0;
      for (std::size_t k = 0; k < n.parents.size(); ++k) {
        const std::size_t h = value(n.parents[k]).rows();
        if (wants(k)) give(n.parents[k], sliceRows(g, off, h));
        off += h;
      }
      break;
    }
    case Op::SliceCols:
      if (wants(0))
        give(n.parents[0],
             padCols(g, static_cast<std::size_t>(n.i0), static_cast<std::size_t>(n.i1)));
      break;
    case Op::SliceRows:
      if (wants(0))
        give(n.parents[0],
             padRows(g, static_cast<std::size_t>(n.i0), static_cast<std::size_t>(n.i1)));
      break;
    case Op::PadCols:
      if (wants(0))
        give(n.parents[0],
             sliceCols(g, static_cast<std::size_t>(n.i0), value(n.parents[0]).cols()));
      break;
    case Op::PadRows:
      if (wants(0))
        give(n.parents[0],
             sliceRows(g, static_cast<std::size_t>(n.i0), value(n.parents[0]).rows()));
      break;
    case Op::AcycSquared:
    case Op::AcycAdj:
      if (wants(0)) {
        const std::size_t rows = value(n.parents[0]).rows();
        const std::size_t cols = value(n.parents[0]).cols();
        Id filled = fill(g, rows, cols);
        give(n.parents[0], mulConst(filled, node(id).aux));
      }
      break;
  }
}

std::vector<Tape::Id> Tape::emitGradients(Id seed, const std::vector<Id>& wrt) {
  if (value(seed).size() != 1) throw ShapeError("backward: loss node is not 1x1");

  std::vector<Id> result(wrt.size(), -1);
  if (!node(seed).needsGrad) {
    for (std::size_t i = 0; i < wrt.size(); ++i) {
      const Matrix& v = value(wrt[i]);
      result[i] = constant(Matrix(v.rows(), v.cols(), 0.0));
    }
    return result;
  }

  std::vector<std::vector<Id>> contrib(static_cast<std::size_t>(seed) + 1);
  std::vector<Id> gradNode(static_cast<std::size_t>(seed) + 1, -1);
  contrib[static_cast<std::size_t>(seed)].push_back(constant(Matrix::scalar(1.0)));

  for (Id id = seed; id >= 0; --id) {
    auto& list = contrib[static_cast<std::size_t>(id)];
    if (list.empty()) continue;
    Id g = list[0];
    for (std::size_t k = 1; k < list.size(); ++k) g = add(g, list[k]);
    list.clear();
    gradNode[static_cast<std::size_t>(id)] = g;
    emitVjp(id, g, contrib);
  }

  for (std::size_t i = 0; i < wrt.size(); ++i) {
    const Id w = wrt[i];
    Id g = (w <= seed) ? gradNode[static_cast<std::size_t>(w)] : -1;
    if (g < 0) {
      const Matrix& v = value(w);
      g = constant(Matrix(v.rows(), v.cols(), 0.0));
    }
    result[i] = g;
  }
  return result;
}

void Tape::backward(Id loss, const std::vector<Param*>& into) {
  std::vector<Id> wrt;
  std::vector<Param*> hit;
  for (Param* p : into) {
    auto it = leafCache_.find(p);
    if (it == leafCache_.end() || it->second > loss) continue;
    wrt.push_back(it->second);
    hit.push_back(p);
  }
  if (wrt.empty()) return;
  std::vector<Id> grads = emitGradients(loss, wrt);
  for (std::size_t i = 0; i < hit.size(); ++i) {
    const Matrix& g = value(grads[i]);
    Matrix& acc = hit[i]->grad;
    view(acc) += view(g);
  }
}

Tape::Id Tape::gradientOf(Id scalarLoss, Id wrt) {
  return emitGradients(scalarLoss, {wrt})[0];
}

void zeroGrads(const std::vector<Param*>& params) {
  for (Param* p : params) {
    Matrix& g = p->grad;
    view(g).setZero();
  }
}

void adamStep(const std::vector<Param*>& params, const AdamConfig& cfg) {
  if (cfg.lr <= 0.0) throw ConfigError("adam: learning rate must be positive");
  for (Param* p : params) {
    if (p->frozen) continue;
    p->adamSteps += 1;
    const double t = static_cast<double>(p->adamSteps);
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    auto vv = view(p->value);
    auto gv = view(p->grad);
    auto mv = view(p->adamM);
    auto sv = view(p->adamV);
    mv = cfg.beta1 * mv + (1.0 - cfg.beta1) * gv;
    sv = cfg.beta2 * sv.array().matrix() + (1.0 - cfg.beta2) * gv.cwiseProduct(gv);
    // Decoupled weight decay, then the bias-corrected adaptive update.
    if (cfg.weightDecay != 0.0) vv *= (1.0 - cfg.lr * cfg.weightDecay);
    vv.array() -= cfg.lr * (mv.array() / bc1) / ((sv.array() / bc2).sqrt() + cfg.eps);
    if (!p->value.allFinite()) throw NumericError("adam: non-finite parameter after update");
  }
}

}  // namespace dagaf
