#pragma once

#include <string>

#include "dagaf/dataset.hpp"
#include "dagaf/graph.hpp"
#include "dagaf/matrix.hpp"

namespace dagaf {

// Data CSV: header row, then one sample per row, 17-significant-digit reals.
void writeDatasetCsv(const std::string& path, const Dataset& ds);
Dataset readDatasetCsv(const std::string& path);

// Headerless d x d matrix CSV.
void writeMatrixCsv(const std::string& path, const Matrix& m);
Matrix readMatrixCsv(const std::string& path);

// Edge list CSV with "parent,child" header and 0-based indices.
void writeEdgeListCsv(const std::string& path, const BinaryDag& dag);
BinaryDag readEdgeListCsv(const std::string& path, std::size_t d);

std::string formatReal(double v);

}  // namespace dagaf
