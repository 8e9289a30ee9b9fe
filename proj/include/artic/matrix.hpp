#pragma once

#include <cstddef>
#include <vector>

namespace artic {

// Dense row-major matrix of doubles. The only tensor type in the project;
// frame sequences are (T x channels), weight banks are flattened 2-D.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), d_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return d_.size(); }
  bool empty() const { return d_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return d_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return d_[r * cols_ + c]; }

  double* data() { return d_.data(); }
  const double* data() const { return d_.data(); }
  double* row(std::size_t r) { return d_.data() + r * cols_; }
  const double* row(std::size_t r) const { return d_.data() + r * cols_; }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  void fill(double v) { std::fill(d_.begin(), d_.end(), v); }

  bool operator==(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && d_ == o.d_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> d_;
};

bool all_finite(const Matrix& m);

// Euclidean distance between row r of a and row r of b.
double row_distance(const Matrix& a, const Matrix& b, std::size_t r);

// Squared Euclidean distance between two raw frames of length n.
double sq_distance(const double* a, const double* b, std::size_t n);

}  // namespace artic
