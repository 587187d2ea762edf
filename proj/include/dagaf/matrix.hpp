#pragma once

#include <cstddef>
#include <vector>

namespace dagaf {

// Dense row-major matrix of 64-bit reals. All heavy arithmetic lives in the
// tape and free functions below; this type only owns storage.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix scalar(double v) {
    Matrix m(1, 1);
    m.data_[0] = v;
    return m;
  }

  static Matrix identity(std::size_t d) {
    Matrix m(d, d);
    for (std::size_t i = 0; i < d; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  bool sameShape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool allFinite() const;

  bool operator==(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transposed(const Matrix& a);

// exp(A) for square A via scaling-and-squaring with a truncated Taylor series.
Matrix matrixExp(const Matrix& a);

}  // namespace dagaf
