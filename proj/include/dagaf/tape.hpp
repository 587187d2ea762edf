#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dagaf/matrix.hpp"

namespace dagaf {

// A trainable weight with persistent gradient and Adam state.
struct Param {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix adamM;
  Matrix adamV;
  std::int64_t adamSteps = 0;
  bool frozen = false;

  Param() = default;
  Param(std::string n, Matrix v)
      : name(std::move(n)),
        value(std::move(v)),
        grad(value.rows(), value.cols()),
        adamM(value.rows(), value.cols()),
        adamV(value.rows(), value.cols()) {}
};

// Eager computation record. Every operation evaluates immediately and appends
// a node, so values are always available; backward() re-expresses each node's
// vector-Jacobian product as further nodes, which makes the gradient itself
// differentiable (required by the gradient-penalty term).
class Tape {
 public:
  using Id = std::int32_t;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaves.
  Id constant(Matrix v);
  Id input(Matrix v);  // constant that can be differentiated against
  Id leaf(Param& p);

  // Elementwise and broadcast arithmetic.
  Id add(Id a, Id b);
  Id sub(Id a, Id b);
  Id mul(Id a, Id b);
  Id div(Id a, Id b);
  Id mulConst(Id a, Matrix mask);
  Id affine(Id a, double scale, double shift);
  Id neg(Id a) { return affine(a, -1.0, 0.0); }

  // Linear algebra and reductions.
  Id matmul(Id a, Id b);
  Id transpose(Id a);
  Id addRowVec(Id a, Id row);
  Id colSum(Id a);
  Id rowSum(Id a);
  Id broadcastRow(Id row, std::size_t rows);
  Id broadcastCol(Id col, std::size_t cols);
  Id fill(Id scalar, std::size_t rows, std::size_t cols);
  Id sumAll(Id a);

  // Nonlinearities.
  Id sigmoid(Id a);
  Id relu(Id a);
  Id leakyRelu(Id a, double slope);
  Id expOp(Id a);
  Id sqrtEps(Id a, double eps);
  Id square(Id a);

  // Assembly.
  Id concatCols(const std::vector<Id>& parts);
  Id concatRows(const std::vector<Id>& parts);
  Id sliceCols(Id a, std::size_t first, std::size_t count);
  Id sliceRows(Id a, std::size_t first, std::size_t count);
  Id padCols(Id a, std::size_t first, std::size_t total);
  Id padRows(Id a, std::size_t first, std::size_t total);

  // Acyclicity h = trace(exp(S)) - d where S already holds squared norms;
  // gradient is exp(S)^T. The matrix-exponential factor is treated as fixed
  // when differentiating the emitted gradient a second time.
  Id acyclicityFromSquared(Id s);
  // h = trace(exp(A o A)) - d on a norm-valued adjacency; gradient
  // exp(A o A)^T o 2A.
  Id acyclicityOfAdjacency(Id a);

  // Values.
  const Matrix& value(Id id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  double scalarValue(Id id) const;
  std::size_t nodeCount() const { return nodes_.size(); }

  // Accumulates d(loss)/d(param) into Param::grad for each listed param that
  // appears on this tape. loss must be 1x1.
  void backward(Id loss, const std::vector<Param*>& into);

  // Gradient of a scalar with respect to an earlier node, returned as a new
  // node so it can participate in further computation.
  Id gradientOf(Id scalarLoss, Id wrt);

 private:
  enum class Op : std::uint8_t {
    Const,
    Input,
    Leaf,
    Add,
    Sub,
    Mul,
    Div,
    MulConst,
    Affine,
    MatMul,
    Transpose,
    AddRowVec,
    ColSum,
    RowSum,
    BroadcastRow,
    BroadcastCol,
    Fill,
    SumAll,
    Sigmoid,
    Relu,
    LeakyRelu,
    Exp,
    SqrtEps,
    Square,
    ConcatCols,
    ConcatRows,
    SliceCols,
    SliceRows,
    PadCols,
    PadRows,
    AcycSquared,
    AcycAdj,
  };

  struct Node {
    Op op;
    std::vector<Id> parents;
    Matrix value;
    Matrix aux;        // masks, cached exp-factors
    double s0 = 0.0;   // scalar op parameters
    double s1 = 0.0;
    std::int32_t i0 = 0;  // slice/broadcast extents
    std::int32_t i1 = 0;
    Param* param = nullptr;
    bool needsGrad = false;
  };

  Id push(Node n);
  Id record(Op op, std::vector<Id> parents, Matrix value);
  const Node& node(Id id) const { return nodes_[static_cast<std::size_t>(id)]; }
  static const char* opName(Op op);
  void checkFinite(const Node& n) const;

  // Appends the vjp of node `id` given upstream gradient node `g`, pushing
  // contributions onto each differentiable parent's list.
  void emitVjp(Id id, Id g, std::vector<std::vector<Id>>& contrib);
  // Single reverse sweep; returns the gradient node for each wrt (zeros when
  // disconnected).
  std::vector<Id> emitGradients(Id seed, const std::vector<Id>& wrt);

  std::vector<Node> nodes_;
  std::unordered_map<const Param*, Id> leafCache_;
};

// Adam with decoupled weight decay. Throws ConfigError on lr <= 0. Frozen
// params are skipped.
struct AdamConfig {
  double lr = 1e-3;
  double weightDecay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

void zeroGrads(const std::vector<Param*>& params);
void adamStep(const std::vector<Param*>& params, const AdamConfig& cfg);

}  // namespace dagaf
