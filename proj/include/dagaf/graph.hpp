#pragma once

#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "dagaf/matrix.hpp"
#include "dagaf/rng.hpp"
#include "dagaf/tape.hpp"

namespace dagaf {

// Weighted adjacency convention used throughout: A(j, k) is the influence of
// variable k on variable j, i.e. row j lists the parents of j.

struct BinaryDag {
  std::size_t d = 0;
  std::set<std::pair<int, int>> edges;  // (parent, child)

  bool hasEdge(int parent, int child) const { return edges.count({parent, child}) > 0; }
};

struct StructMetrics {
  int shd = 0;
  double tpr = 0.0;
  double fdr = 0.0;
  double fpr = 0.0;
};

// trace(exp(A o A)) - d; zero exactly when the weighted graph is acyclic.
double acyclicityH(const Matrix& adjacency);

// Edge (k -> j) present iff A(j, k) > tau.
BinaryDag threshold(const Matrix& adjacency, double tau);

// Edit distance under insert/delete/reverse (reversal costs 1), plus directed
// TPR/FDR/FPR.
StructMetrics structuralMetrics(const BinaryDag& pred, const BinaryDag& truth);

// Erdos-Renyi DAG: random topological order, order-respecting pairs kept with
// probability expectedDegree/(d-1), weights uniform on [-2,-0.5] U [0.5,2].
std::pair<BinaryDag, Matrix> sampleErDag(std::size_t d, double expectedDegree, Rng& rng);

bool isAcyclic(const BinaryDag& dag);
std::optional<std::vector<int>> topologicalOrder(const BinaryDag& dag);

}  // namespace dagaf
