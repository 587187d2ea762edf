#include "dagaf/csvio.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "dagaf/errors.hpp"

namespace dagaf {

namespace {

std::vector<std::string> splitCsvLine(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parseCell(const std::string& cell, std::size_t row, std::size_t col) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (*(end - 1) == ' ' || *(end - 1) == '\t' || *(end - 1) == '\r')) --end;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw IoError("non-numeric cell at row " + std::to_string(row + 1) + ", column " +
                  std::to_string(col + 1) + ": '" + cell + "'");
  }
  return value;
}

std::ofstream openForWrite(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream openForRead(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

}  // namespace

std::string formatReal(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void writeDatasetCsv(const std::string& path, const Dataset& ds) {
  std::ofstream out = openForWrite(path);
  for (std::size_t j = 0; j < ds.columns.size(); ++j) {
    if (j) out << ',';
    out << ds.columns[j];
  }
  out << '\n';
  for (std::size_t i = 0; i < ds.n(); ++i) {
    for (std::size_t j = 0; j < ds.d(); ++j) {
      if (j) out << ',';
      out << formatReal(ds.values(i, j));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

Dataset readDatasetCsv(const std::string& path) {
  std::ifstream in = openForRead(path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty data file '" + path + "'");
  Dataset ds;
  for (std::string& name : splitCsvLine(line)) {
    while (!name.empty() && (name.back() == '\r' || name.back() == ' ')) name.pop_back();
    ds.columns.push_back(name);
  }
  const std::size_t d = ds.columns.size();
  if (d == 0) throw IoError("no columns in '" + path + "'");

  std::vector<double> flat;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto cells = splitCsvLine(line);
    if (cells.size() != d)
      throw IoError("row " + std::to_string(rows + 2) + " of '" + path + "' has " +
                    std::to_string(cells.size()) + " cells, expected " + std::to_string(d));
    for (std::size_t j = 0; j < d; ++j) flat.push_back(parseCell(cells[j], rows + 1, j));
    ++rows;
  }
  ds.values = Matrix(rows, d);
  std::copy(flat.begin(), flat.end(), ds.values.data());
  return ds;
}

void writeMatrixCsv(const std::string& path, const Matrix& m) {
  std::ofstream out = openForWrite(path);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << formatReal(m(i, j));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

Matrix readMatrixCsv(const std::string& path) {
  std::ifstream in = openForRead(path);
  std::string line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto cells = splitCsvLine(line);
    std::vector<double> row;
    row.reserve(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j)
      row.push_back(parseCell(cells[j], rows.size(), j));
    if (!rows.empty() && row.size() != rows[0].size())
      throw IoError("ragged matrix row in '" + path + "'");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("empty matrix file '" + path + "'");
  Matrix m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

void writeEdgeListCsv(const std::string& path, const BinaryDag& dag) {
  std::ofstream out = openForWrite(path);
  out << "parent,child\n";
  for (const auto& e : dag.edges) out << e.first << ',' << e.second << '\n';
  if (!out) throw IoError("write failed for '" + path + "'");
}

BinaryDag readEdgeListCsv(const std::string& path, std::size_t d) {
  std::ifstream in = openForRead(path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty edge list '" + path + "'");
  BinaryDag dag;
  dag.d = d;
  std::size_t rowIdx = 1;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto cells = splitCsvLine(line);
    if (cells.size() != 2) throw IoError("bad edge row in '" + path + "'");
    const int parent = static_cast<int>(parseCell(cells[0], rowIdx, 0));
    const int child = static_cast<int>(parseCell(cells[1], rowIdx, 1));
    if (parent < 0 || child < 0 || parent >= static_cast<int>(d) || child >= static_cast<int>(d))
      throw IoError("edge index out of range in '" + path + "'");
    dag.edges.emplace(parent, child);
    ++rowIdx;
  }
  return dag;
}

}  // namespace dagaf
