#include "dagaf/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dagaf/errors.hpp"

namespace dagaf {

double acyclicityH(const Matrix& adjacency) {
  if (adjacency.rows() != adjacency.cols()) throw ShapeError("acyclicityH: square matrix required");
  if (!adjacency.allFinite()) throw NumericError("acyclicityH: non-finite adjacency");
  const std::size_t d = adjacency.rows();
  Matrix hada(d, d);
  for (std::size_t i = 0; i < hada.size(); ++i)
    hada.data()[i] = adjacency.data()[i] * adjacency.data()[i];
  Matrix e = matrixExp(hada);
  double trace = 0.0;
  for (std::size_t i = 0; i < d; ++i) trace += e(i, i);
  return trace - static_cast<double>(d);
}

BinaryDag threshold(const Matrix& adjacency, double tau) {
  if (adjacency.rows() != adjacency.cols()) throw ShapeError("threshold: square matrix required");
  BinaryDag dag;
  dag.d = adjacency.rows();
  for (std::size_t j = 0; j < dag.d; ++j) {
    for (std::size_t k = 0; k < dag.d; ++k) {
      if (j == k) continue;
      if (std::abs(adjacency(j, k)) > tau)
        dag.edges.emplace(static_cast<int>(k), static_cast<int>(j));
    }
  }
  return dag;
}

StructMetrics structuralMetrics(const BinaryDag& pred, const BinaryDag& truth) {
  if (pred.d != truth.d) throw ShapeError("structuralMetrics: variable counts differ");
  const int d = static_cast<int>(pred.d);

  int shd = 0;
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      // Per-pair state: 0 none, 1 forward, 2 backward, 3 both.
      auto state = [&](const BinaryDag& g) {
        return (g.hasEdge(i, j) ? 1 : 0) | (g.hasEdge(j, i) ? 2 : 0);
      };
      const int a = state(pred);
      const int b = state(truth);
      if (a == b) continue;
      if (a == 0 || b == 0) {
        const int other = a == 0 ? b : a;
        shd += other == 3 ? 2 : 1;  // insert/delete one or both directions
      } else if (a == 3 || b == 3) {
        shd += 1;  // one direction shared, the other inserted/deleted
      } else {
        shd += 1;  // reversal
      }
    }
  }

  int tp = 0;
  for (const auto& e : pred.edges)
    if (truth.edges.count(e)) ++tp;
  const int fp = static_cast<int>(pred.edges.size()) - tp;
  const int negatives = d * (d - 1) - static_cast<int>(truth.edges.size());

  StructMetrics m;
  m.shd = shd;
  m.tpr = truth.edges.empty() ? (pred.edges.empty() ? 1.0 : 0.0)
                              : static_cast<double>(tp) / static_cast<double>(truth.edges.size());
  m.fdr = pred.edges.empty() ? 0.0 : static_cast<double>(fp) / static_cast<double>(pred.edges.size());
  m.fpr = negatives == 0 ? 0.0 : static_cast<double>(fp) / static_cast<double>(negatives);
  return m;
}

std::pair<BinaryDag, Matrix> sampleErDag(std::size_t d, double expectedDegree, Rng& rng) {
  if (d < 2) throw ConfigError("sampleErDag: at least two variables required");
  if (expectedDegree >= static_cast<double>(d))
    throw ConfigError("sampleErDag: expected degree must be below d");

  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = d - 1; i > 0; --i) {
    const std::size_t j = rng.index(i + 1);
    std::swap(order[i], order[j]);
  }

  const double p = expectedDegree / static_cast<double>(d - 1);
  BinaryDag dag;
  dag.d = d;
  Matrix weights(d, d, 0.0);
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a + 1; b < d; ++b) {
      if (rng.uniform() >= p) continue;
      const int parent = order[a];
      const int child = order[b];
      double w = rng.uniform(0.5, 2.0);
      if (rng.uniform() < 0.5) w = -w;
      dag.edges.emplace(parent, child);
      weights(static_cast<std::size_t>(child), static_cast<std::size_t>(parent)) = w;
    }
  }
  return {std::move(dag), std::move(weights)};
}

std::optional<std::vector<int>> topologicalOrder(const BinaryDag& dag) {
  const std::size_t d = dag.d;
  std::vector<int> indeg(d, 0);
  for (const auto& e : dag.edges) indeg[static_cast<std::size_t>(e.second)]++;
  std::vector<int> queue;
  for (std::size_t i = 0; i < d; ++i)
    if (indeg[i] == 0) queue.push_back(static_cast<int>(i));
  std::vector<int> order;
  order.reserve(d);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int u = queue[head];
    order.push_back(u);
    for (const auto& e : dag.edges) {
      if (e.first != u) continue;
      if (--indeg[static_cast<std::size_t>(e.second)] == 0) queue.push_back(e.second);
    }
  }
  if (order.size() != d) return std::nullopt;
  return order;
}

bool isAcyclic(const BinaryDag& dag) { return topologicalOrder(dag).has_value(); }

}  // namespace dagaf
