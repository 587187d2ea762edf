#include "dagaf/matrix.hpp"

#include <Eigen/Dense>
#include <cmath>

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

bool Matrix::allFinite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions differ");
  Matrix out(a.rows(), b.cols());
  view(out).noalias() = view(a) * view(b);
  return out;
}

Matrix transposed(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  view(out) = view(a).transpose();
  return out;
}

Matrix matrixExp(const Matrix& a) {
  if (a.rows() != a.cols()) throw ShapeError("matrixExp: square matrix required");
  const std::size_t d = a.rows();

  double maxAbs = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) maxAbs = std::max(maxAbs, std::abs(a.data()[i]));

  // Scale so the series argument has small norm, then square back.
  int squarings = 0;
  double scale = 1.0;
  while (maxAbs * scale > 0.5 && squarings < 60) {
    scale *= 0.5;
    ++squarings;
  }

  Matrix scaled(d, d);
  view(scaled) = view(a) * scale;

  constexpr int kTerms = 20;
  Matrix result = Matrix::identity(d);
  Matrix term = Matrix::identity(d);
  for (int k = 1; k <= kTerms; ++k) {
    Matrix next(d, d);
    view(next).noalias() = view(term) * view(scaled) / static_cast<double>(k);
    term = std::move(next);
    view(result) += view(term);
  }

  for (int s = 0; s < squarings; ++s) {
    Matrix sq(d, d);
    view(sq).noalias() = view(result) * view(result);
    result = std::move(sq);
  }
  return result;
}

}  // namespace dagaf
