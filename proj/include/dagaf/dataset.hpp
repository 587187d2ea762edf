#pragma once

#include <string>
#include <vector>

#include "dagaf/matrix.hpp"

namespace dagaf {

// Column-named observation matrix, one row per sample.
struct Dataset {
  std::vector<std::string> columns;
  Matrix values;

  std::size_t n() const { return values.rows(); }
  std::size_t d() const { return values.cols(); }

  static Dataset withDefaultColumns(Matrix m) {
    Dataset ds;
    ds.columns.reserve(m.cols());
    for (std::size_t j = 0; j < m.cols(); ++j) ds.columns.push_back("x" + std::to_string(j + 1));
    ds.values = std::move(m);
    return ds;
  }
};

}  // namespace dagaf
